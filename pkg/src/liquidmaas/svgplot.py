"""Tiny static SVG line and CDF plots (no plotting dependency)."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")
W, H = 640, 400
ML, MR, MT, MB = 64, 150, 36, 48


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def _fmt(v):
    return f"{v:.3g}"


def line_plot(series, path, title="", xlabel="", ylabel="", legend=True, max_legend=10):
    """Write ``{name: (x, y)}`` as polylines to ``path``."""
    items = [(str(k), np.asarray(x, float), np.asarray(y, float)) for k, (x, y) in series.items()]
    xs = np.concatenate([x for _, x, _ in items]) if items else np.zeros(1)
    ys = np.concatenate([y for _, _, y in items]) if items else np.zeros(1)
    finite = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (xs[finite].min(), xs[finite].max()) if finite.any() else (0.0, 1.0)
    y0, y1 = (ys[finite].min(), ys[finite].max()) if finite.any() else (0.0, 1.0)
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - ML - MR, H - MT - MB

    def px(v):
        return ML + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MT + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{MT + ph}" x2="{px(t):.1f}" y2="{MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{MT + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ML - 4}" y1="{py(t):.1f}" x2="{ML}" y2="{py(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{ML - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{MT + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {MT + ph / 2:.1f})">{escape(ylabel)}</text>')
    for n, (name, x, y) in enumerate(items):
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x[ok], y[ok]))
        colour = PALETTE[n % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        if legend and n < max_legend:
            ly = MT + 12 + 16 * n
            out.append(f'<line x1="{W - MR + 10}" y1="{ly}" x2="{W - MR + 30}" y2="{ly}" '
                       f'stroke="{colour}" stroke-width="2"/>')
            out.append(f'<text x="{W - MR + 34}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)


def cdf_plot(samples, path, title="", xlabel="", legend=True):
    """Empirical CDFs of ``{name: values}``."""
    series = {}
    for name, v in samples.items():
        v = np.sort(np.asarray(v, float))
        series[name] = (v, np.arange(1, len(v) + 1) / max(len(v), 1))
    return line_plot(series, path, title, xlabel, "CDF", legend)
