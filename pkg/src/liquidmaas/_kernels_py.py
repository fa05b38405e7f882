"""Pure-Python aperture selection, used when the compiled core is unavailable.

Same arithmetic, in the same order, as ``_kernels.pyx``.
"""

SNAP = 1e-12


def primal_sweep(ptr, edge_cell, edge_sinr, serving_sinr, beta, weight, psi, lam,
                 x_out, metric_out, g_out, count_out, demand_out):
    """Solve every user's price-adjusted subproblem.

    Writes x and metrics per edge, the combined SNR and selected count per
    user, and the forwarded bandwidth per cell.
    """
    ptr = ptr.tolist()
    cells = edge_cell.tolist()
    sinr = edge_sinr.tolist()
    serving = serving_sinr.tolist()
    beta = beta.tolist()
    weight = weight.tolist()
    psi = psi.tolist()
    lam = lam.tolist()
    x = [0.0] * len(cells)
    metric = [0.0] * len(cells)
    gs = [0.0] * (len(ptr) - 1)
    counts = [0.0] * (len(ptr) - 1)
    demand = [0.0] * len(demand_out)
    for k in range(len(ptr) - 1):
        lo, hi = ptr[k], ptr[k + 1]
        denom = weight[k] * beta[k]
        bk, lk = beta[k], lam[k]
        for e in range(lo, hi):
            metric[e] = (bk * psi[cells[e]] + lk) / (denom * sinr[e])
        order = sorted(range(lo, hi), key=lambda e: (metric[e], cells[e]))
        g = 1.0 + serving[k]
        cnt = 0.0
        for e in order:
            m = metric[e]
            g_full = g + sinr[e]
            if 1.0 / g_full > m:
                x[e] = 1.0
                g = g_full
                cnt = cnt + 1.0
                demand[cells[e]] += bk
            else:
                y = (1.0 / m - g) / sinr[e]
                if y > 1.0:
                    y = 1.0
                if y < SNAP:
                    y = 0.0
                x[e] = y
                g = g + sinr[e] * y
                cnt = cnt + y
                demand[cells[e]] += bk * y
                break
        gs[k] = g
        counts[k] = cnt
    x_out[:] = x
    metric_out[:] = metric
    g_out[:] = gs
    count_out[:] = counts
    demand_out[:] = demand
