"""Command-line driver: generate scenarios, solve, compare, sweep, validate.

Exit codes: 0 success, 1 I/O error, 2 malformed input, 3 infeasible
parameters, 4 a LiquidMAAS run (or oracle) did not converge.  Outputs are
still written when the exit code is 4.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, baselines, dual, kernels, oracles, svgplot
from .problem import (LN2, egress_demand, objective, residuals, selected_count, user_rates_bits,
                      write_allocation_csv)
from .scenario import (RadioParams, ScenarioError, SharingProblem, build_neighborhoods, db_to_lin,
                       four_cell_example, generate_scenario, lin_to_db, load_scenario,
                       random_instance, save_scenario)

log = logging.getLogger("liquidmaas")

EXIT_OK, EXIT_IO, EXIT_PARSE, EXIT_PARAMS, EXIT_NOCONV = 0, 1, 2, 3, 4
OUT_ENV = "LIQUIDMAAS_OUT"


class ParamError(ValueError):
    """Parameter combination that can never describe a valid instance."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run; stored as JSON."""

    seed: int = 0
    num_sites: int = 19
    sectors_per_site: int = 3
    isd_m: float = 100.0
    avg_users_per_cell: int = 10
    num_antennas: int = 2
    radio: RadioParams = field(default_factory=RadioParams)
    s_min_db: float = -10.0
    l_a: float = 3.0
    l_t_bar: float = 1.0
    sweep_l_t_bar: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0])
    algorithms: list = field(default_factory=lambda: list(baselines.ALGORITHMS))
    nu: float = 0.005
    epsilon_init: float = 1e-3
    max_iters: int = 2000
    eps1: float = 1e-3
    eps2: float | None = None  # None: 1e-3 * L_T
    convergence_mode: str = "kkt"
    schedule: str = "constant"
    output_dir: str = "runs"

    def validate(self):
        if self.l_a < 0:
            raise ParamError(f"L_A must be nonnegative, got {self.l_a}")
        if self.l_t_bar < 0:
            raise ParamError(f"L_T must be nonnegative, got {self.l_t_bar}")
        sweep = list(self.sweep_l_t_bar)
        if not sweep:
            raise ParamError("egress sweep list is empty")
        if any(v < 0 for v in sweep) or any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ParamError("egress sweep values must be nonnegative and strictly increasing")
        unknown = set(self.algorithms) - set(baselines.ALGORITHMS)
        if unknown:
            raise ParamError(f"unknown algorithms: {sorted(unknown)}")
        if self.num_sites < 1 or self.sectors_per_site < 1 or self.avg_users_per_cell < 1:
            raise ParamError("layout needs at least one site, sector and user per cell")
        try:
            self.solver_config(self.l_t_bar)
            self.radio.validate()
        except (ValueError, ScenarioError) as exc:
            raise ParamError(str(exc)) from exc
        return self

    def solver_config(self, l_t_bar) -> dual.SolverConfig:
        eps2 = self.eps2 if self.eps2 is not None else 1e-3 * l_t_bar
        if not eps2 > 0:
            eps2 = 1e-3
        return dual.SolverConfig(nu=self.nu, epsilon_init=self.epsilon_init, max_iters=self.max_iters,
                                 eps1=self.eps1, eps2=eps2, convergence_mode=self.convergence_mode,
                                 schedule=self.schedule)

    def to_dict(self):
        d = asdict(self)
        d["radio"] = asdict(self.radio)
        return d

    @classmethod
    def from_dict(cls, doc):
        names = {f.name for f in fields(cls)}
        extra = set(doc) - names
        if extra:
            raise ScenarioError(f"unknown config keys: {sorted(extra)}")
        doc = dict(doc)
        if "radio" in doc:
            rnames = {f.name for f in fields(RadioParams)}
            bad = set(doc["radio"]) - rnames
            if bad:
                raise ScenarioError(f"unknown radio keys: {sorted(bad)}")
            doc["radio"] = RadioParams(**doc["radio"])
        return cls(**doc)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: config must be a JSON object")
    try:
        return ExperimentConfig.from_dict(doc)
    except TypeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# running algorithms


def run_algorithm(problem: SharingProblem, name: str, cfg: ExperimentConfig, trace_stream=None):
    """Returns ``(allocation, info)``; ``info`` holds iterations/convergence/timing."""
    t0 = time.perf_counter()
    info = {"algorithm": name}
    if name == "no_comp":
        alloc = baselines.no_comp(problem)
    elif name == "greedy_maas":
        alloc = baselines.greedy_maas(problem)
    elif name == "randomized_egress":
        alloc = baselines.randomized_egress(problem, cfg.seed)
    elif name == "liquidmaas":
        alloc, report = dual.run(problem, cfg.solver_config(problem.l_t_bar), seed=cfg.seed,
                                 trace_stream=trace_stream)
        info.update(iterations=report.iterations, converged=report.converged,
                    best_iteration=report.best_iteration, report=report)
    else:
        raise ParamError(f"unknown algorithm {name!r}")
    info["wall_time_s"] = time.perf_counter() - t0
    return alloc, info


def allocation_summary(problem, alloc, info, baseline_obj=None):
    obj = objective(problem, alloc)
    r = residuals(problem, alloc)
    rates = user_rates_bits(problem, alloc)
    out = {
        "algorithm": info["algorithm"],
        "objective_nats": obj,
        "objective_bits": obj / LN2,
        "mean_weighted_rate_bits": obj / LN2 / max(problem.num_users, 1),
        "max_egress_violation": r.max_egress_violation,
        "max_ingress_violation": r.max_ingress_violation,
        "max_egress_demand": float(egress_demand(problem, alloc).max(initial=0.0)),
        "max_selected": float(selected_count(problem, alloc).max(initial=0.0)),
        "rate_p5_bits": float(np.percentile(rates, 5)) if len(rates) else 0.0,
        "rate_p50_bits": float(np.percentile(rates, 50)) if len(rates) else 0.0,
        "rate_p95_bits": float(np.percentile(rates, 95)) if len(rates) else 0.0,
        "wall_time_s": info["wall_time_s"],
    }
    if baseline_obj is not None:
        out["gain"] = obj / baseline_obj if baseline_obj > 0 else float("nan")
    for key in ("iterations", "converged", "best_iteration"):
        if key in info:
            out[key] = info[key]
    return out


def compare_problem(problem, cfg: ExperimentConfig):
    """All configured algorithms on one instance (No CoMP always included)."""
    names = list(dict.fromkeys(["no_comp"] + list(cfg.algorithms)))
    results = {}
    for name in names:
        alloc, info = run_algorithm(problem, name, cfg)
        results[name] = (alloc, info)
    base = objective(problem, results["no_comp"][0])
    rows = [allocation_summary(problem, a, i, base) for a, i in results.values()]
    return rows, results


def _sweep_point(args):
    problem, cfg, lt = args
    rows, results = compare_problem(problem.with_limits(l_t_bar=lt), cfg)
    return lt, rows


# ---------------------------------------------------------------------------
# subcommands


def _out_dir(args, cfg=None) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or (cfg.output_dir if cfg else "runs")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {
        "seed": getattr(args, "seed", None), "nu": getattr(args, "nu", None),
        "l_a": getattr(args, "la", None), "l_t_bar": getattr(args, "ltbar", None),
        "s_min_db": getattr(args, "smin_db", None), "convergence_mode": getattr(args, "mode", None),
        "schedule": getattr(args, "schedule", None), "max_iters": getattr(args, "max_iters", None),
        "eps1": getattr(args, "eps1", None), "eps2": getattr(args, "eps2", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "ltbar_list", None) is not None:
        cfg.sweep_l_t_bar = args.ltbar_list
    if getattr(args, "algorithms", None):
        cfg.algorithms = args.algorithms
    return cfg.validate()


def _problem_from_file(path, cfg: ExperimentConfig, args) -> SharingProblem:
    scenario, problem = load_scenario(path)
    if problem is None or args.smin_db is not None:
        problem = build_neighborhoods(scenario, float(db_to_lin(cfg.s_min_db)), cfg.l_a, cfg.l_t_bar)
    return problem.with_limits(l_a=cfg.l_a if args.la is not None else None,
                               l_t_bar=cfg.l_t_bar if args.ltbar is not None else None)


def cmd_generate(args) -> int:
    if args.write_config:
        Path(args.write_config).write_text(json.dumps(ExperimentConfig().to_dict(), indent=2) + "\n")
        print(f"wrote default config to {args.write_config}")
        return EXIT_OK
    cfg = _config_from_args(args)
    out = _out_dir(args, cfg)
    if args.preset == "tiny":
        problem = four_cell_example(s_min=float(db_to_lin(cfg.s_min_db)), l_a=cfg.l_a, l_t_bar=cfg.l_t_bar)
        scenario = problem.scenario
    else:
        scenario = generate_scenario(cfg.num_sites, cfg.sectors_per_site, cfg.isd_m,
                                     cfg.avg_users_per_cell, cfg.seed, cfg.radio, cfg.num_antennas)
        problem = build_neighborhoods(scenario, float(db_to_lin(cfg.s_min_db)), cfg.l_a, cfg.l_t_bar)
    path = out / (args.name or "scenario.json")
    save_scenario(path, scenario, problem, meta={"config": cfg.to_dict(), "preset": args.preset})
    print(f"cells={scenario.num_cells} users={scenario.num_users} "
          f"mean_helpers={problem.l_r.mean() if scenario.num_users else 0.0:.3f} -> {path}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    problem = _problem_from_file(args.scenario, cfg, args)
    out = _out_dir(args, cfg)
    name = args.algorithm
    if name == "liquidmaas":
        with open(out / "trace.csv", "w", newline="") as trace:
            alloc, info = run_algorithm(problem, name, cfg, trace_stream=trace)
    else:
        alloc, info = run_algorithm(problem, name, cfg)
    write_allocation_csv(alloc, out / "allocation.csv")
    base = objective(problem, baselines.no_comp(problem))
    summary = allocation_summary(problem, alloc, info, base)
    summary.update(scenario=str(args.scenario), l_a=problem.l_a, l_t_bar=problem.l_t_bar,
                   s_min_db=float(lin_to_db(problem.s_min)), backend=kernels.BACKEND,
                   version=__version__)
    if name == "liquidmaas":
        summary["solver"] = asdict(cfg.solver_config(problem.l_t_bar))
        report = info["report"]
        d = report.demand
        iters = np.arange(1, report.iterations + 1)
        svgplot.line_plot({f"cell {i}": (iters, d[:, i]) for i in range(d.shape[1])},
                          out / "convergence.svg", "Egress demand per cell", "iteration",
                          "forwarded bandwidth", legend=False)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps({k: summary[k] for k in ("algorithm", "objective_nats", "objective_bits",
                                             "max_egress_violation", "wall_time_s")
                      if k in summary}))
    if name == "liquidmaas" and not info["converged"]:
        log.warning("LiquidMAAS did not converge within %d iterations", info["iterations"])
        return EXIT_NOCONV
    return EXIT_OK


COMPARE_FIELDS = ("algorithm", "objective_nats", "objective_bits", "gain", "mean_weighted_rate_bits",
                  "rate_p5_bits", "rate_p50_bits", "rate_p95_bits", "max_egress_violation",
                  "max_ingress_violation", "iterations", "converged", "wall_time_s")


def cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    problem = _problem_from_file(args.scenario, cfg, args)
    out = _out_dir(args, cfg)
    rows, results = compare_problem(problem, cfg)
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, COMPARE_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in COMPARE_FIELDS})
    base_rates = user_rates_bits(problem, results["no_comp"][0])
    gains = {}
    for name, (alloc, _) in results.items():
        with np.errstate(divide="ignore", invalid="ignore"):
            gains[name] = user_rates_bits(problem, alloc) / base_rates
    svgplot.cdf_plot(gains, out / "rate_gain_cdf.svg", "Per-user rate gain over No CoMP", "gain")
    summary = {"scenario": str(args.scenario), "l_a": problem.l_a, "l_t_bar": problem.l_t_bar,
               "algorithms": rows}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for r in rows:
        extra = f" iters={r['iterations']} converged={r['converged']}" if "iterations" in r else ""
        print(f"{r['algorithm']:>18s}  wsr={r['objective_bits']:.4f} bit  gain={r['gain']:.4f}{extra}")
    if any(r.get("converged") is False for r in rows):
        return EXIT_NOCONV
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    problem = _problem_from_file(args.scenario, cfg, args)
    out = _out_dir(args, cfg)
    points = [(problem, cfg, float(lt)) for lt in cfg.sweep_l_t_bar]
    workers = args.workers or os.cpu_count() or 1
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    names = [r["algorithm"] for r in results[0][1]]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l_t_bar"] + [f"gain_{n}" for n in names]
                   + ["liquidmaas_iterations", "liquidmaas_converged"])
        for lt, rows in results:
            by = {r["algorithm"]: r for r in rows}
            lm = by.get("liquidmaas", {})
            w.writerow([repr(lt)] + [repr(by[n]["gain"]) for n in names]
                       + [lm.get("iterations", ""), lm.get("converged", "")])
    xs = [lt for lt, _ in results]
    series = {n: (xs, [next(r["gain"] for r in rows if r["algorithm"] == n) for _, rows in results])
              for n in names}
    svgplot.line_plot(series, out / "gain_vs_ltbar.svg", "Mean WSR gain vs egress limit", "L_T",
                      "gain over No CoMP")
    for lt, rows in results:
        print(f"L_T={lt:g}  " + "  ".join(f"{r['algorithm']}={r['gain']:.4f}" for r in rows))
    if any(r.get("converged") is False for _, rows in results for r in rows):
        return EXIT_NOCONV
    return EXIT_OK


def cmd_validate(args) -> int:
    """LiquidMAAS against the relaxed oracle on random small instances."""
    cfg = _config_from_args(args)
    out = _out_dir(args, cfg)
    solver = dict(nu=args.nu or 0.001, schedule=args.schedule or "diminishing",
                  max_iters=args.max_iters or 100000)
    rows = []
    status = EXIT_OK
    for n in range(args.instances):
        seed = cfg.seed + n
        problem = random_instance(10, 3, seed=seed, l_a=2)
        lt = float(np.median(egress_demand(problem, baselines.greedy_maas(problem))))
        problem = problem.with_limits(l_t_bar=lt)
        t0 = time.perf_counter()
        _, ref, rep = oracles.centralized_relaxed(problem, tol=1e-7, return_report=True)
        t1 = time.perf_counter()
        alloc, report = dual.run(problem, dual.SolverConfig(eps2=1e-3 * lt, **solver))
        t2 = time.perf_counter()
        obj = objective(problem, alloc)
        rel = abs(ref - obj) / abs(ref)
        rows.append({"seed": seed, "l_t_bar": lt, "relaxed": ref, "oracle_gap": rep.duality_gap,
                     "oracle_converged": rep.converged, "liquidmaas": obj, "rel_diff": rel,
                     "iterations": report.iterations, "converged": report.converged,
                     "oracle_s": t1 - t0, "liquidmaas_s": t2 - t1})
        print(f"seed={seed} relaxed={ref:.6f} liquidmaas={obj:.6f} rel={rel:.1e} "
              f"iters={report.iterations} converged={report.converged}")
        if not rep.converged:
            status = EXIT_NOCONV
    with open(out / "validate.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]) if rows else ["seed"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return status


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _add_common(p, solver=True):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--la", type=float, help="aperture limit L_A")
    p.add_argument("--ltbar", type=float, help="egress limit L_T")
    p.add_argument("--smin-db", type=float, dest="smin_db", help="helper SINR threshold (dB)")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or the config's)")
    if solver:
        p.add_argument("--nu", type=float, help="price step size")
        p.add_argument("--mode", choices=["paper", "kkt"], help="convergence test")
        p.add_argument("--schedule", choices=["constant", "diminishing"])
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--eps1", type=float)
        p.add_argument("--eps2", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="liquidmaas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a scenario file")
    _add_common(g, solver=False)
    g.add_argument("--preset", choices=["default", "tiny"], default="default")
    g.add_argument("--name", help="scenario file name inside --out")
    g.add_argument("--write-config", dest="write_config", metavar="PATH",
                   help="only write the default config to PATH")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one algorithm on a scenario")
    s.add_argument("scenario")
    s.add_argument("--algorithm", choices=baselines.ALGORITHMS, default="liquidmaas")
    _add_common(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="all algorithms on one scenario")
    c.add_argument("scenario")
    c.add_argument("--algorithms", nargs="+", choices=baselines.ALGORITHMS)
    _add_common(c)
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="gains across egress limits")
    w.add_argument("scenario")
    w.add_argument("--ltbar-list", type=_float_list, dest="ltbar_list", help="e.g. 0.5,1,2,4")
    w.add_argument("--workers", type=int, help="parallel worker processes (default: cores)")
    w.add_argument("--algorithms", nargs="+", choices=baselines.ALGORITHMS)
    _add_common(w)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="LiquidMAAS against the relaxed oracle")
    v.add_argument("--instances", type=int, default=5)
    _add_common(v)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on malformed arguments
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"error: {exc.strerror or exc}{where}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
