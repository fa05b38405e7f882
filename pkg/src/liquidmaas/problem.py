"""Objective and constraint evaluation for a :class:`SharingProblem`.

Allocations are dense over the problem's admissible edges (one value per
(helper cell, user) pair in the ingress neighborhoods) and exposed as a
sparse mapping keyed by ``(helper_cell, user)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import SharingProblem, ScenarioError

FEASIBILITY_TOL = 1e-6
LN2 = math.log(2.0)


class SharingAllocation:
    """Sharing fractions ``x[(i, k)]`` in [0, 1] over a problem's edges."""

    def __init__(self, problem: SharingProblem, x=None):
        self.problem = problem
        if x is None:
            x = np.zeros(problem.num_edges)
        x = np.array(x, dtype=float)
        if x.shape != (problem.num_edges,):
            raise ValueError(f"allocation needs {problem.num_edges} entries, got {x.shape}")
        self.x = x

    @classmethod
    def from_mapping(cls, problem, mapping):
        index = problem.edge_index()
        x = np.zeros(problem.num_edges)
        for key, value in mapping.items():
            try:
                x[index[(int(key[0]), int(key[1]))]] = value
            except KeyError:
                raise ScenarioError(f"cell {key[0]} is not in the ingress set of user {key[1]}") from None
        return cls(problem, x)

    def __getitem__(self, key):
        i, k = key
        lo, hi = self.problem.ptr[k], self.problem.ptr[k + 1]
        cells = self.problem.edge_cell[lo:hi]
        hit = np.flatnonzero(cells == i)
        if not len(hit):
            raise KeyError(key)
        return float(self.x[lo + hit[0]])

    def get(self, key, default=0.0):
        try:
            return self[key]
        except KeyError:
            return default

    def items(self):
        for i, k, v in zip(self.problem.edge_cell, self.problem.edge_user, self.x):
            yield (int(i), int(k)), float(v)

    def to_dict(self) -> dict:
        return dict(self.items())

    def user_values(self, k) -> np.ndarray:
        return self.x[self.problem.ptr[k]:self.problem.ptr[k + 1]]

    def copy(self):
        return SharingAllocation(self.problem, self.x.copy())

    def __len__(self):
        return len(self.x)

    def __repr__(self):
        nz = int(np.count_nonzero(self.x))
        return f"SharingAllocation(edges={len(self.x)}, nonzero={nz})"


@dataclass
class ConstraintResiduals:
    """Signed slacks; a negative entry is a violated constraint."""

    ingress_slack: np.ndarray  # per user: L_A - sum_i x
    egress_slack: np.ndarray  # per cell: L_T - sum beta x
    box_violation: float

    @property
    def max_ingress_violation(self) -> float:
        return float(max(0.0, -self.ingress_slack.min(initial=0.0)))

    @property
    def max_egress_violation(self) -> float:
        return float(max(0.0, -self.egress_slack.min(initial=0.0)))


def _x(allocation):
    return allocation.x if isinstance(allocation, SharingAllocation) else np.asarray(allocation, float)


def combined_snr_all(problem: SharingProblem, allocation) -> np.ndarray:
    """``1 + serving SINR + sum_i S_i x_i`` for every user."""
    x = _x(allocation)
    helped = np.bincount(problem.edge_user, weights=problem.edge_sinr * x, minlength=problem.num_users)
    return 1.0 + problem.scenario.serving_sinr + helped


def combined_snr(problem: SharingProblem, k: int, allocation) -> float:
    x = _x(allocation)
    lo, hi = problem.ptr[k], problem.ptr[k + 1]
    g = 1.0 + problem.scenario.serving_sinr[k]
    for s, v in zip(problem.edge_sinr[lo:hi], x[lo:hi]):
        g += s * v
    return float(g)


def user_utilities(problem, allocation) -> np.ndarray:
    """Per-user ``omega * beta * ln g`` (nats)."""
    return problem.scenario.utility_weight * np.log(combined_snr_all(problem, allocation))


def objective(problem: SharingProblem, allocation) -> float:
    """Weighted sum rate ``sum_k omega_k beta_k ln g_k`` in nats."""
    return float(problem.scenario.utility_weight @ np.log(combined_snr_all(problem, allocation)))


def gradient(problem: SharingProblem, allocation) -> np.ndarray:
    """d objective / d x_e = omega beta S_e / g, one entry per edge."""
    g = combined_snr_all(problem, allocation)
    sc = problem.scenario
    u = problem.edge_user
    return sc.weight[u] * sc.beta[u] * problem.edge_sinr / g[u]


def user_rates_bits(problem, allocation) -> np.ndarray:
    """Unweighted per-user rate ``beta log2 g`` (bit/s/Hz of system band)."""
    return problem.scenario.beta * np.log(combined_snr_all(problem, allocation)) / LN2


def selected_count(problem, allocation) -> np.ndarray:
    return np.bincount(problem.edge_user, weights=_x(allocation), minlength=problem.num_users)


def egress_demand(problem, allocation) -> np.ndarray:
    """Per-cell forwarded bandwidth ``sum beta_k x_{i->k}``."""
    return np.bincount(problem.edge_cell, weights=problem.edge_beta * _x(allocation),
                       minlength=problem.num_cells)


def residuals(problem: SharingProblem, allocation) -> ConstraintResiduals:
    x = _x(allocation)
    box = float(np.max(np.maximum(np.maximum(-x, x - 1.0), 0.0), initial=0.0))
    return ConstraintResiduals(problem.l_a - selected_count(problem, x),
                               problem.l_t_bar - egress_demand(problem, x), box)


def is_feasible(problem, allocation, tol: float = FEASIBILITY_TOL) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    r = residuals(problem, allocation)
    return bool(np.all(r.ingress_slack >= -tol) and np.all(r.egress_slack >= -tol)
                and r.box_violation <= tol)


# ---------------------------------------------------------------------------
# allocation CSV

ALLOCATION_HEADER = ("user_id", "serving_cell", "helper_cell", "x")


def write_allocation_csv(allocation: SharingAllocation, dest, all_edges=False):
    """Rows ``(user_id, serving_cell, helper_cell, x)``; x is written round-trip exact.

    Zero entries are skipped unless ``all_edges``.  ``dest`` is a path or a
    text stream.
    """
    p = allocation.problem
    serving = p.scenario.serving
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            return write_allocation_csv(allocation, fh, all_edges)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(ALLOCATION_HEADER)
    for i, k, v in zip(p.edge_cell, p.edge_user, allocation.x):
        if v != 0.0 or all_edges:
            w.writerow((int(k), int(serving[k]), int(i), repr(float(v))))


def allocation_csv_text(allocation, all_edges=False) -> str:
    buf = io.StringIO()
    write_allocation_csv(allocation, buf, all_edges)
    return buf.getvalue()


def read_allocation_csv(problem: SharingProblem, src) -> SharingAllocation:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_allocation_csv(problem, fh)
    reader = csv.DictReader(src)
    if tuple(reader.fieldnames or ()) != ALLOCATION_HEADER:
        raise ScenarioError(f"allocation CSV header must be {','.join(ALLOCATION_HEADER)}")
    serving = problem.scenario.serving
    mapping = {}
    for row in reader:
        k, i = int(row["user_id"]), int(row["helper_cell"])
        if int(row["serving_cell"]) != serving[k]:
            raise ScenarioError(f"user {k}: serving cell mismatch in allocation CSV")
        mapping[(i, k)] = float(row["x"])
    return SharingAllocation.from_mapping(problem, mapping)
