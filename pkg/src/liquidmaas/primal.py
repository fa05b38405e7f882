"""Per-user aperture selection for fixed egress and ingress prices.

Given prices, each user's share of the Lagrangian is

    L_k(x) = w b ln g(x) + lam (L - sum x) - b sum_i psi_i x_i,   x in [0, 1]^n

with ``g(x) = 1 + S_serving + sum_i S_i x_i``.  Sorting the helpers by the
price-per-SINR metric ``m_i = (b psi_i + lam) / (w b S_i)`` and filling them
in that order gives the exact maximiser: a run of ones, at most one
fractional entry and zeros after it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .problem import SharingAllocation, combined_snr_all
from .scenario import SharingProblem

SNAP = 1e-12


@dataclass
class PriceState:
    psi: np.ndarray  # egress price per cell
    lam: np.ndarray  # ingress price per user
    nu: float = 0.005

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if np.any(self.psi < 0) or np.any(self.lam < 0):
            raise ValueError("prices must be nonnegative")
        if not self.nu > 0:
            raise ValueError("step size must be positive")

    @classmethod
    def initial(cls, problem: SharingProblem, epsilon=1e-3, nu=0.005):
        return cls(np.full(problem.num_cells, float(epsilon)), np.zeros(problem.num_users), nu)

    def copy(self):
        return PriceState(self.psi.copy(), self.lam.copy(), self.nu)


@dataclass
class UserPrimalResult:
    user: int
    helpers: np.ndarray  # cell ids, ingress order
    x: np.ndarray  # aligned with helpers
    active_set: list = field(default_factory=list)  # helpers with x > 0, by metric
    fractional_index: int | None = None  # helper cell with 0 < x < 1


def metric(problem: SharingProblem, prices: PriceState, i: int, k: int) -> float:
    """Price per unit of SINR that helper ``i`` charges user ``k``."""
    sc = problem.scenario
    s = sc.sinr[i, k]
    if not s > 0:
        raise ValueError(f"helper {i} has no SINR for user {k}")
    b, w = sc.beta[k], sc.weight[k]
    return float((b * prices.psi[i] + prices.lam[k]) / (w * b * s))


def edge_metrics(problem, prices) -> np.ndarray:
    sc = problem.scenario
    u = problem.edge_user
    b = sc.beta[u]
    return (b * prices.psi[problem.edge_cell] + prices.lam[u]) / (sc.weight[u] * b * problem.edge_sinr)


@dataclass
class SweepResult:
    allocation: SharingAllocation
    metric: np.ndarray  # per edge
    g: np.ndarray  # combined SNR per user
    count: np.ndarray  # selected helpers per user
    demand: np.ndarray  # forwarded bandwidth per cell


def sweep_full(problem: SharingProblem, prices: PriceState, backend=None) -> SweepResult:
    """Primal response of every user to ``prices`` plus the loads it induces."""
    E, K, J = problem.num_edges, problem.num_users, problem.num_cells
    x, m = np.empty(E), np.empty(E)
    g, count, demand = np.empty(K), np.empty(K), np.empty(J)
    fn = kernels.primal_sweep if backend is None else kernels.backends()[backend]
    sc = problem.scenario
    fn(problem.ptr, problem.edge_cell, problem.edge_sinr, sc.serving_sinr, sc.beta, sc.weight,
       np.ascontiguousarray(prices.psi, dtype=float), np.ascontiguousarray(prices.lam, dtype=float),
       x, m, g, count, demand)
    return SweepResult(SharingAllocation(problem, x), m, g, count, demand)


def sweep(problem: SharingProblem, prices: PriceState, backend=None) -> SharingAllocation:
    """Primal response of every user to ``prices``."""
    return sweep_full(problem, prices, backend).allocation


def solve_user(problem: SharingProblem, prices: PriceState, k: int) -> UserPrimalResult:
    """Ordered fill of user ``k``'s helpers (see module docstring)."""
    lo, hi = problem.ptr[k], problem.ptr[k + 1]
    helpers = problem.edge_cell[lo:hi].copy()
    sinr = problem.edge_sinr[lo:hi]
    m = np.array([metric(problem, prices, int(i), k) for i in helpers])
    order = sorted(range(len(helpers)), key=lambda p: (m[p], helpers[p]))
    x = np.zeros(len(helpers))
    g = 1.0 + problem.scenario.serving_sinr[k]
    frac = None
    for p in order:
        g_full = g + sinr[p]
        if 1.0 / g_full > m[p]:
            x[p] = 1.0
            g = g_full
            continue
        y = min((1.0 / m[p] - g) / sinr[p], 1.0)
        x[p] = y if y >= SNAP else 0.0
        if 0.0 < x[p] < 1.0:
            frac = int(helpers[p])
        break
    active = [int(helpers[p]) for p in order if x[p] > 0]
    return UserPrimalResult(k, helpers, x, active, frac)


def user_lagrangian(problem, prices, k, x_k, limit=None) -> float:
    """Value of user ``k``'s price-adjusted objective at ``x_k`` (ingress order)."""
    sc = problem.scenario
    lo, hi = problem.ptr[k], problem.ptr[k + 1]
    x_k = np.asarray(x_k, dtype=float)
    b, w = sc.beta[k], sc.weight[k]
    limit = problem.l_eff[k] if limit is None else limit
    g = 1.0 + sc.serving_sinr[k] + problem.edge_sinr[lo:hi] @ x_k
    cost = b * prices.psi[problem.edge_cell[lo:hi]] @ x_k
    return float(w * b * np.log(g) + prices.lam[k] * (limit - x_k.sum()) - cost)


def _violations(inv_g, m, x):
    at_one = x >= 1.0
    at_zero = x <= 0.0
    frac = ~(at_one | at_zero)
    v = np.zeros_like(m)
    v[at_one] = np.maximum(m[at_one] - inv_g[at_one], 0.0)
    v[at_zero] = np.maximum(inv_g[at_zero] - m[at_zero], 0.0)
    v[frac] = np.abs(inv_g[frac] - m[frac])
    return v


def kkt_residual(problem, prices, allocation, k) -> float:
    """Largest violation of the per-user optimality sign pattern.

    Entries at 1 need ``1/g >= m``, entries at 0 need ``1/g <= m`` and
    fractional entries need ``1/g == m``.
    """
    lo, hi = problem.ptr[k], problem.ptr[k + 1]
    if hi == lo:
        return 0.0
    g = combined_snr_all(problem, allocation)[k]
    m = edge_metrics(problem, prices)[lo:hi]
    v = _violations(np.full(hi - lo, 1.0 / g), m, allocation.x[lo:hi])
    return float(v.max())


def kkt_residuals(problem, prices, allocation) -> np.ndarray:
    """:func:`kkt_residual` for every user at once."""
    g = combined_snr_all(problem, allocation)
    m = edge_metrics(problem, prices)
    x = allocation.x if isinstance(allocation, SharingAllocation) else np.asarray(allocation, float)
    v = _violations(1.0 / g[problem.edge_user], m, x)
    out = np.zeros(problem.num_users)
    np.maximum.at(out, problem.edge_user, v)
    return out
