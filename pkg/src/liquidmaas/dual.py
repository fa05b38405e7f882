"""LiquidMAAS: primal sweeps coordinated by subgradient price updates.

Each iteration every user solves its subproblem against frozen prices (a
Jacobi sweep), then ingress prices follow each user's aperture slack and
every cell moves its egress price against its bandwidth headroom.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import primal
from .primal import PriceState
from .problem import (SharingAllocation, egress_demand, objective, selected_count)
from .scenario import SharingProblem

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    nu: float = 0.005
    epsilon_init: float = 1e-3
    max_iters: int = 2000
    eps1: float = 1e-3
    eps2: float = 1e-3
    convergence_mode: str = "kkt"  # or "paper"
    schedule: str = "constant"  # or "diminishing": nu / sqrt(t)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("step size nu must be positive")
        if not self.epsilon_init > 0:
            raise ValueError("initial egress price must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (self.eps1 > 0 and self.eps2 > 0):
            raise ValueError("tolerances must be positive")
        if self.convergence_mode not in ("kkt", "paper"):
            raise ValueError(f"unknown convergence mode {self.convergence_mode!r}")
        if self.schedule not in ("constant", "diminishing"):
            raise ValueError(f"unknown step schedule {self.schedule!r}")

    def step(self, t: int) -> float:
        return self.nu if self.schedule == "constant" else self.nu / math.sqrt(t)


@dataclass
class SolverReport:
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    egress_demand_trace: list = field(default_factory=list)  # per iteration, per cell
    max_violation_trace: list = field(default_factory=list)
    max_egress_violation_trace: list = field(default_factory=list)
    max_ingress_violation_trace: list = field(default_factory=list)
    converged: bool = False
    final_prices: PriceState | None = None
    best_iteration: int | None = None

    @property
    def demand(self) -> np.ndarray:
        return np.array(self.egress_demand_trace).reshape(self.iterations, -1)


def update_ingress_price(prices: PriceState, k: int, selected: float, limit: float,
                         nu: float | None = None) -> float:
    """``lam_k <- max(lam_k - nu (limit - selected), 0)``; returns the new value."""
    nu = prices.nu if nu is None else nu
    prices.lam[k] = max(prices.lam[k] - nu * (limit - selected), 0.0)
    return float(prices.lam[k])


def egress_headroom(problem: SharingProblem, allocation, i: int | None = None):
    """Remaining egress bandwidth ``L_T - sum beta x`` of cell ``i`` (all cells if None)."""
    delta = problem.l_t_bar - egress_demand(problem, allocation)
    return delta if i is None else float(delta[i])


def update_egress_price(prices: PriceState, i: int, headroom: float, nu: float | None = None) -> float:
    nu = prices.nu if nu is None else nu
    prices.psi[i] = max(prices.psi[i] - nu * headroom, 0.0)
    return float(prices.psi[i])


def check_convergence(problem: SharingProblem, allocation, prices: PriceState,
                      config: SolverConfig) -> bool:
    """Stopping test.

    ``paper``: every user's aperture equals its cap and every headroom is
    (near) zero.  ``kkt``: primal feasibility, complementary slackness and
    per-user optimality, all within ``eps1`` (ingress) / ``eps2`` (egress).
    """
    x = allocation.x if isinstance(allocation, SharingAllocation) else np.asarray(allocation, float)
    return _converged(problem, x, selected_count(problem, x), egress_headroom(problem, x),
                      prices, config)


def _converged(problem, x, count, delta, prices, config) -> bool:
    limit = problem.l_eff
    if config.convergence_mode == "paper":
        return bool(np.all(np.abs(count - limit) < config.eps1) and np.all(np.abs(delta) < config.eps2))
    e1, e2 = config.eps1, config.eps2
    if np.any(delta < -e2) or np.any(count - problem.l_a > e1):
        return False
    if np.any((prices.psi > e2) & (np.abs(delta) > e2)):
        return False
    if np.any((prices.lam > e1) & (limit - count > e1)):
        return False
    return bool(np.all(primal.kkt_residuals(problem, prices, x) <= e1))


def dual_value(problem: SharingProblem, prices: PriceState) -> float:
    """Lagrangian dual function at ``prices`` (an upper bound on the relaxed optimum)."""
    alloc = primal.sweep(problem, prices)
    x = alloc.x
    sc = problem.scenario
    u = problem.edge_user
    util = objective(problem, alloc)
    cost = np.sum(sc.beta[u] * prices.psi[problem.edge_cell] * x)
    ingress = np.sum(prices.lam * (problem.l_eff - selected_count(problem, alloc)))
    return float(util - cost + ingress + problem.l_t_bar * prices.psi.sum())


def run(problem: SharingProblem, config: SolverConfig | None = None, seed=None,
        trace_stream=None, prices: PriceState | None = None):
    """Iterate LiquidMAAS; returns ``(allocation, report)``.

    On convergence the allocation is the primal response to
    ``report.final_prices``.  Otherwise the best iterate seen is returned:
    highest objective among tolerance-feasible iterates, or the least
    violating one if none was feasible.  ``seed`` is accepted for interface
    symmetry; the iteration is deterministic.
    """
    config = config or SolverConfig()
    prices = prices.copy() if prices is not None else PriceState.initial(
        problem, config.epsilon_init, config.nu)
    report = SolverReport()
    limit = problem.l_eff
    writer = None
    if trace_stream is not None:
        writer = csv.writer(trace_stream, lineterminator="\n")
        writer.writerow(["iter", "objective", "max_egress_violation", "max_ingress_violation"]
                        + [f"demand_{i}" for i in range(problem.num_cells)])
    ww = problem.scenario.utility_weight
    best = None  # (feasible, score, x, prices, t)
    for t in range(1, config.max_iters + 1):
        res = primal.sweep_full(problem, prices)
        alloc, x, demand, count = res.allocation, res.allocation.x, res.demand, res.count
        obj = float(ww @ np.log(res.g))
        eg = max(0.0, float((demand - problem.l_t_bar).max(initial=0.0)))
        ing = max(0.0, float((count - problem.l_a).max(initial=0.0)))
        report.iterations = t
        report.objective_trace.append(obj)
        report.egress_demand_trace.append(demand)
        report.max_egress_violation_trace.append(eg)
        report.max_ingress_violation_trace.append(ing)
        report.max_violation_trace.append(max(eg, ing))
        if writer is not None:
            writer.writerow([t, repr(obj), repr(eg), repr(ing)] + [repr(float(d)) for d in demand])
        feasible = eg <= config.eps2 and ing <= config.eps1
        score = obj if feasible else -max(eg, ing)
        if best is None or (feasible, score) > (best[0], best[1]):
            best = (feasible, score, x, prices.copy(), t)
        delta = problem.l_t_bar - demand
        # an infeasible iterate cannot pass either test; skip the full check
        if (feasible or config.convergence_mode == "paper") and _converged(
                problem, x, count, delta, prices, config):
            report.converged = True
            report.final_prices = prices.copy()
            report.best_iteration = t
            log.debug("converged after %d iterations", t)
            return alloc, report
        nu = config.step(t)
        prices.lam = np.maximum(prices.lam - nu * (limit - count), 0.0)
        prices.psi = np.maximum(prices.psi - nu * delta, 0.0)
    log.info("no convergence within %d iterations", config.max_iters)
    report.final_prices = best[3]
    report.best_iteration = best[4]
    return SharingAllocation(problem, best[2]), report


TRACE_HEADER_PREFIX = ("iter", "objective", "max_egress_violation", "max_ingress_violation")


def write_trace_csv(report: SolverReport, path):
    """Per-iteration trace: objective, violations and every cell's egress demand."""
    demand = report.demand
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(TRACE_HEADER_PREFIX) + [f"demand_{i}" for i in range(demand.shape[1])])
        for t in range(report.iterations):
            w.writerow([t + 1, repr(report.objective_trace[t]),
                        repr(report.max_egress_violation_trace[t]),
                        repr(report.max_ingress_violation_trace[t])]
                       + [repr(float(d)) for d in demand[t]])


def read_trace_csv(path):
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return header, data
