"""Reference solvers for checking LiquidMAAS on small instances.

Neither solver shares code with the primal/dual path: the brute force
enumerates integer allocations, and the relaxed solver runs projected
gradient ascent on the full coupled problem.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .problem import SharingAllocation, gradient, objective
from .scenario import SharingProblem

log = logging.getLogger(__name__)

MAX_BITS = 30
MAX_MOVE = 2.0


class InstanceTooLarge(ValueError):
    pass


class OracleNotConverged(RuntimeError):
    pass


def sharing_bits(problem: SharingProblem) -> int:
    return int(problem.num_edges)


def brute_force_integer(problem: SharingProblem, force: bool = False):
    """Exact optimum over x in {0,1}; returns ``(allocation, objective)``.

    Depth-first search over users, each choosing a helper subset of size at
    most L_A, pruned by the unconstrained per-user optimum of the remaining
    users.
    """
    bits = sharing_bits(problem)
    if bits > MAX_BITS and not force:
        raise InstanceTooLarge(f"{bits} sharing bits exceed the brute-force cap of {MAX_BITS}")
    sc = problem.scenario
    K = problem.num_users
    ww = sc.weight * sc.beta
    base = 1.0 + sc.serving_sinr
    cap = int(np.floor(problem.l_a + 1e-12))

    options = []  # per user: list of (value, edge tuple), best first
    for k in range(K):
        lo, hi = problem.ptr[k], problem.ptr[k + 1]
        opts = []
        for size in range(0, min(cap, hi - lo) + 1):
            for subset in itertools.combinations(range(lo, hi), size):
                g = base[k] + sum(problem.edge_sinr[e] for e in subset)
                opts.append((ww[k] * np.log(g), subset))
        opts.sort(key=lambda o: -o[0])
        options.append(opts)

    order = sorted(range(K), key=lambda k: -(options[k][0][0] - ww[k] * np.log(base[k])))
    best_rest = np.zeros(K + 1)
    for pos in range(K - 1, -1, -1):
        best_rest[pos] = best_rest[pos + 1] + options[order[pos]][0][0]

    edge_cost = problem.edge_beta
    load = np.zeros(problem.num_cells)
    limit = problem.l_t_bar + 1e-12
    best_val = -np.inf
    best_pick = None
    pick = [()] * K

    def dfs(pos, acc):
        nonlocal best_val, best_pick
        if acc + best_rest[pos] <= best_val + 1e-15:
            return
        if pos == K:
            best_val, best_pick = acc, list(pick)
            return
        k = order[pos]
        for val, subset in options[k]:
            cells = problem.edge_cell[list(subset)]
            load[cells] += edge_cost[list(subset)]
            if np.all(load[cells] <= limit):
                pick[k] = subset
                dfs(pos + 1, acc + val)
            load[cells] -= edge_cost[list(subset)]
        pick[k] = ()

    dfs(0, 0.0)
    x = np.zeros(problem.num_edges)
    for subset in best_pick:
        x[list(subset)] = 1.0
    alloc = SharingAllocation(problem, x)
    return alloc, objective(problem, alloc)


# ---------------------------------------------------------------------------
# relaxed problem


def project_capped_box(y, group, weight, cap, num_groups):
    """Euclidean projection onto ``{0 <= x <= 1, sum_{e in group g} w_e x_e <= cap_g}``.

    The groups partition the entries, so the projection splits into
    independent problems ``x = clip(y - tau w, 0, 1)``.  The weighted load
    is piecewise linear in ``tau`` with breakpoints ``(y - 1) / w`` and
    ``y / w``; sweeping the sorted breakpoints gives ``tau`` exactly.
    """
    cap = np.broadcast_to(np.asarray(cap, dtype=float), (num_groups,))
    x = np.clip(y, 0.0, 1.0)
    load = np.bincount(group, weights=weight * x, minlength=num_groups)
    over = load > cap
    if not np.any(over):
        return x
    active = np.flatnonzero(over[group])
    ya, wa, ga = y[active], weight[active], group[active]
    n = len(active)
    # events: entry leaves x=1 at (y-1)/w, reaches x=0 at y/w
    tau = np.concatenate([(ya - 1.0) / wa, ya / wa])
    grp = np.concatenate([ga, ga])
    d_const = np.concatenate([wa * ya - wa, -wa * ya])
    d_slope = np.concatenate([-wa * wa, wa * wa])
    order = np.lexsort((tau, grp))
    tau, grp, d_const, d_slope = tau[order], grp[order], d_const[order], d_slope[order]
    first = np.ones(2 * n, dtype=bool)
    first[1:] = grp[1:] != grp[:-1]
    starts = np.flatnonzero(first)
    seg = np.cumsum(first) - 1
    # state after each event, starting from every entry at x=1
    c0 = np.bincount(ga, weights=wa, minlength=num_groups)
    cs_const = np.cumsum(d_const)
    cs_slope = np.cumsum(d_slope)
    const = c0[grp] + cs_const - (cs_const[starts] - d_const[starts])[seg]
    slope = cs_slope - (cs_slope[starts] - d_slope[starts])[seg]
    h = const + slope * tau  # load at each breakpoint
    h[np.r_[starts[1:], 2 * n] - 1] = 0.0  # every entry is at zero after its group's last event
    cg = cap[grp]
    hit = h <= cg
    # first breakpoint per group where the load drops to the cap
    cand = np.flatnonzero(hit)
    firsthit = np.full(num_groups, 2 * n)
    np.minimum.at(firsthit, grp[cand], cand)
    groups = np.flatnonzero(over)
    j = firsthit[groups]
    prev = j - 1  # state on the interval just before the hit breakpoint
    exact = h[j] == cap[groups]
    with np.errstate(divide="ignore", invalid="ignore"):
        sol = (const[prev] - cap[groups]) / (-slope[prev])
    # on a flat stretch every tau gives the same x
    sol = np.where(exact | ~(slope[prev] < 0), tau[j], sol)
    sol = np.clip(sol, tau[prev], tau[j])
    t = np.zeros(num_groups)
    t[groups] = np.maximum(sol, 0.0)
    x[active] = np.clip(ya - t[ga] * wa, 0.0, 1.0)
    return x


def project_feasible(problem: SharingProblem, y, tol=1e-12, max_iters=10000, state=None):
    """Dykstra's alternating projection onto the relaxed feasible set.

    The two sets are the per-user aperture caps and the per-cell egress
    caps, each intersected with the unit box.  Dykstra is block coordinate
    descent on the dual, so it converges from any pair of increments; pass
    a dict as ``state`` to reuse them across nearby calls.
    """
    K, J = problem.num_users, problem.num_cells
    ones = np.ones(problem.num_edges)
    beta = problem.edge_beta
    y = np.asarray(y, dtype=float)
    if state and "p" in state:
        p, q = state["p"], state["q"]
    else:
        p, q = np.zeros_like(y), np.zeros_like(y)
    x = y - p - q
    for _ in range(max_iters):
        a = project_capped_box(x + p, problem.edge_user, ones, problem.l_a, K)
        p = x + p - a
        b = project_capped_box(a + q, problem.edge_cell, beta, problem.l_t_bar, J)
        q = a + q - b
        done = (np.max(np.abs(b - x), initial=0.0) <= tol
                and np.max(np.abs(a - b), initial=0.0) <= tol)
        x = b
        if done:
            break
    if state is not None:
        state["p"], state["q"] = p, q
    return x


def infeasibility(problem, x) -> float:
    count = np.bincount(problem.edge_user, weights=x, minlength=problem.num_users)
    demand = np.bincount(problem.edge_cell, weights=problem.edge_beta * x, minlength=problem.num_cells)
    return float(max(0.0, (count - problem.l_a).max(initial=0.0),
                     (demand - problem.l_t_bar).max(initial=0.0),
                     (-x).max(initial=0.0), (x - 1.0).max(initial=0.0)))


@dataclass
class RelaxedReport:
    iterations: int
    converged: bool
    objective: float
    dual_bound: float
    duality_gap: float
    infeasibility: float
    psi: np.ndarray
    lam: np.ndarray


def _box_user_max(ww, base, sinr, cost):
    """max over x in [0,1]^n of ww ln(base + S.x) - cost.x, by cost-per-SINR order."""
    order = np.argsort(cost / sinr, kind="stable")
    g, lin = base, 0.0
    for e in order:
        if cost[e] <= 0:
            g += sinr[e]
            continue
        r = cost[e] / sinr[e]
        if ww / (g + sinr[e]) >= r:
            g += sinr[e]
            lin += cost[e]
        else:
            t = min(max((ww / r - g) / sinr[e], 0.0), 1.0)
            g += sinr[e] * t
            lin += cost[e] * t
            break
    return ww * np.log(g) - lin


def _multiplier_estimate(problem, x, grad, slack_tol=1e-6, bound_tol=1e-7):
    """Multipliers that best explain ``grad`` at ``x`` (L1 fit as an LP)."""
    J, K, E = problem.num_cells, problem.num_users, problem.num_edges
    count = np.bincount(problem.edge_user, weights=x, minlength=K)
    demand = np.bincount(problem.edge_cell, weights=problem.edge_beta * x, minlength=J)
    cells = np.flatnonzero(demand >= problem.l_t_bar - slack_tol)
    users = np.flatnonzero(count >= problem.l_a - slack_tol)
    psi, lam = np.zeros(J), np.zeros(K)
    if len(cells) + len(users) == 0 or E == 0:
        return psi, lam
    cpos = {c: n for n, c in enumerate(cells)}
    upos = {u: len(cells) + n for n, u in enumerate(users)}
    nv = len(cells) + len(users)
    rows, rhs = [], []
    for e in range(E):
        coef = np.zeros(nv + E)
        i, k = problem.edge_cell[e], problem.edge_user[e]
        if i in cpos:
            coef[cpos[i]] = problem.edge_beta[e]
        if k in upos:
            coef[upos[k]] = 1.0
        coef[nv + e] = -1.0
        if x[e] >= 1 - bound_tol:  # price <= grad
            rows.append(coef.copy()); rhs.append(grad[e])
        elif x[e] <= bound_tol:  # price >= grad
            c2 = -coef; c2[nv + e] = -1.0
            rows.append(c2); rhs.append(-grad[e])
        else:
            rows.append(coef.copy()); rhs.append(grad[e])
            c2 = -coef; c2[nv + e] = -1.0
            rows.append(c2); rhs.append(-grad[e])
    c = np.concatenate([np.zeros(nv), np.ones(E)])
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(0, None)] * (nv + E),
                  method="highs")
    if res.status == 0:
        psi[cells] = res.x[:len(cells)]
        lam[users] = res.x[len(cells):nv]
    return psi, lam


def relaxed_dual_bound(problem, psi, lam) -> float:
    """Dual function of the relaxed problem at ``(psi, lam)``."""
    sc = problem.scenario
    ww = sc.weight * sc.beta
    base = 1.0 + sc.serving_sinr
    cost = problem.edge_beta * psi[problem.edge_cell] + lam[problem.edge_user]
    total = problem.l_t_bar * psi.sum() + problem.l_a * lam.sum()
    for k in range(problem.num_users):
        lo, hi = problem.ptr[k], problem.ptr[k + 1]
        total += _box_user_max(ww[k], base[k], problem.edge_sinr[lo:hi], cost[lo:hi])
    return float(total)


def centralized_relaxed(problem: SharingProblem, tol: float = 1e-7, max_iters: int = 20000,
                        raise_on_failure: bool = False, return_report: bool = False):
    """Relaxed optimum by projected gradient ascent with backtracking.

    Uses Nesterov extrapolation with gradient-based restarts.  Stops when the
    relative objective change falls below ``tol`` with infeasibility below
    ``tol``; the report carries a duality gap built from multiplier
    estimates.  Returns ``(allocation, objective)`` (plus the report if
    ``return_report``).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    E = problem.num_edges
    warm = {}  # Dykstra increments carried between nearby projections

    def f(x):
        return objective(problem, x)

    def ascent_step(y, step):
        gy, fy = gradient(problem, y), f(y)
        # moves longer than the box is wide only slow the projection down
        step = min(step, MAX_MOVE / max(np.max(np.abs(gy), initial=0.0), 1e-300))
        while True:
            cand = project_feasible(problem, y + step * gy, state=warm)
            d = cand - y
            fc = f(cand)
            if fc >= fy + gy @ d - (d @ d) / (2.0 * step) - 1e-15 * abs(fy) or step < 1e-16:
                return cand, fc, step
            step *= 0.5

    x = project_feasible(problem, np.ones(E), state=warm)
    fx = f(x)
    step = 1.0
    y, theta = x.copy(), 1.0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        cand, fc, step = ascent_step(y, step)
        if fc < fx and theta > 1.0:
            # momentum overshot: restart from the last iterate
            y, theta = x.copy(), 1.0
            continue
        change = (fc - fx) / max(1.0, abs(fx))
        x_prev, x, fx = x, cand, max(fc, fx)
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        y = np.clip(x + ((theta - 1.0) / theta_next) * (x - x_prev), 0.0, 1.0)
        theta = theta_next
        step *= 1.5
        if change < tol and infeasibility(problem, x) < tol and it > 5:
            # confirm with a plain projected gradient step from x
            z, fz, step = ascent_step(x, step)
            if fz - fx < tol * max(1.0, abs(fx)):
                if fz > fx:
                    x, fx = z, fz
                converged = True
                break
    if not converged:
        msg = f"relaxed solver stopped after {max_iters} iterations without convergence"
        if raise_on_failure:
            raise OracleNotConverged(msg)
        log.warning(msg)
    alloc = SharingAllocation(problem, x)
    obj = objective(problem, alloc)
    psi, lam = _multiplier_estimate(problem, x, gradient(problem, x))
    bound = relaxed_dual_bound(problem, psi, lam)
    report = RelaxedReport(it, converged, obj, bound, bound - obj, infeasibility(problem, x), psi, lam)
    if return_report:
        return alloc, obj, report
    return alloc, obj
