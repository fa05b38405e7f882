import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liquidmaas import dual, oracles, primal
from liquidmaas.baselines import greedy_maas, no_comp
from liquidmaas.dual import (SolverConfig, check_convergence, dual_value, egress_headroom,
                             read_trace_csv, update_egress_price, update_ingress_price,
                             write_trace_csv)
from liquidmaas.primal import PriceState
from liquidmaas.problem import SharingAllocation, egress_demand, objective, residuals
from liquidmaas.scenario import build_neighborhoods, four_cell_example, random_instance

from _builders import make_problem, single_user


def binding_instance(seed):
    """5 cells, 2 users each, L_A = 2, L_T at 60% of the busiest greedy cell."""
    p = random_instance(5, 2, seed=seed, l_a=2)
    lt = 0.6 * float(np.max(egress_demand(p, greedy_maas(p))))
    return p.with_limits(l_t_bar=lt)


# seeds of binding_instance on which LiquidMAAS converges in a few hundred iterations
CONVERGING = (2, 4, 7, 8, 10, 18, 19)


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("kw", [dict(nu=0), dict(epsilon_init=0), dict(max_iters=0),
                                dict(eps1=0), dict(eps2=-1), dict(convergence_mode="x"),
                                dict(schedule="x")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_diminishing_schedule():
    cfg = SolverConfig(nu=0.01, schedule="diminishing")
    assert cfg.step(1) == 0.01 and cfg.step(4) == 0.005
    assert SolverConfig(nu=0.01).step(100) == 0.01


# ---------------------------------------------------------------- price updates

def _prices(n_cells=1, n_users=1, psi=0.0, lam=0.0):
    return PriceState(np.full(n_cells, psi), np.full(n_users, lam), 0.005)


def test_ingress_price_zero_subgradient():
    pr = _prices()
    assert update_ingress_price(pr, 0, selected=3, limit=3) == 0.0


def test_ingress_price_rises_when_over():
    pr = _prices(lam=0.1)
    assert update_ingress_price(pr, 0, selected=3, limit=2) == pytest.approx(0.105, rel=1e-14)


def test_ingress_price_projected_at_zero():
    pr = _prices(lam=0.001)
    assert update_ingress_price(pr, 0, selected=0, limit=3) == 0.0


def test_egress_price_rises_on_deficit():
    pr = _prices(psi=0.02)
    assert update_egress_price(pr, 0, -1.0 / 3.0) == pytest.approx(0.02 + 0.005 / 3, rel=1e-14)
    assert pr.psi[0] == pytest.approx(0.0217, abs=1e-4)


def test_egress_price_projected_at_zero():
    pr = _prices(psi=0.001)
    assert update_egress_price(pr, 0, 1.0) == 0.0


def test_egress_price_fixed_point():
    pr = _prices(psi=0.37)
    assert update_egress_price(pr, 0, 0.0) == 0.37


def test_explicit_step_overrides_state():
    pr = _prices(psi=0.1)
    assert update_egress_price(pr, 0, -1.0, nu=0.1) == pytest.approx(0.2)


# ---------------------------------------------------------------- headroom

def test_headroom_zero_allocation():
    p = four_cell_example(l_t_bar=0.8)
    assert np.all(egress_headroom(p, SharingAllocation(p)) == 0.8)


def test_headroom_fig1():
    p = four_cell_example(l_t_bar=1.0)
    alloc = SharingAllocation.from_mapping(p, {(1, 0): 1.0, (1, 1): 1.0, (1, 3): 1.0})
    assert egress_headroom(p, alloc, 1) == pytest.approx(-1.0 / 3.0, abs=1e-15)


def test_headroom_cell_without_egress():
    # cell 2 helps nobody
    p = make_problem([5.0, 5.0], [{1: 2.0}, {0: 1.0}], num_cells=3, l_t_bar=0.6)
    x = np.ones(p.num_edges)
    assert egress_headroom(p, x, 2) == 0.6


# ---------------------------------------------------------------- convergence test

def test_converged_empty_neighborhoods():
    p = build_neighborhoods(four_cell_example().scenario, s_min=1e6)
    pr = PriceState(np.zeros(4), np.zeros(7))
    assert check_convergence(p, SharingAllocation(p), pr, SolverConfig())


@pytest.mark.parametrize("mode", ["kkt", "paper"])
def test_egress_violation_not_converged(mode):
    p = four_cell_example(l_t_bar=1.0)
    alloc = SharingAllocation.from_mapping(p, {(1, 0): 1.0, (1, 1): 1.0, (1, 3): 1.0})
    pr = PriceState(np.zeros(4), np.zeros(7))
    assert not check_convergence(p, alloc, pr, SolverConfig(convergence_mode=mode))


def test_kkt_mode_accepts_slack_aperture_paper_mode_does_not():
    # two reachable helpers, both selected, egress slack, L_A = 3
    p = single_user(10.0, [5.0, 2.0], l_a=3, l_t_bar=5.0)
    alloc = SharingAllocation(p, [1.0, 1.0])
    pr = PriceState(np.zeros(3), np.zeros(1))
    assert check_convergence(p, alloc, pr, SolverConfig(convergence_mode="kkt"))
    assert not check_convergence(p, alloc, pr, SolverConfig(convergence_mode="paper"))
    _, rep_kkt = dual.run(p, SolverConfig(convergence_mode="kkt", max_iters=500))
    _, rep_paper = dual.run(p, SolverConfig(convergence_mode="paper", max_iters=500))
    assert rep_kkt.converged and rep_kkt.iterations == 1
    assert not rep_paper.converged and rep_paper.iterations == 500


def test_kkt_rejects_price_on_slack_cell():
    p = single_user(10.0, [5.0], l_t_bar=5.0)
    pr = PriceState(np.array([0.0, 0.5]), np.zeros(1))
    alloc = primal.sweep(p, pr)
    assert not check_convergence(p, alloc, pr, SolverConfig())


def test_kkt_rejects_suboptimal_allocation():
    p = single_user(10.0, [5.0], l_t_bar=5.0)
    pr = PriceState(np.zeros(2), np.zeros(1))
    assert not check_convergence(p, SharingAllocation(p), pr, SolverConfig())


# ---------------------------------------------------------------- run

def test_run_slack_egress_gives_greedy():
    p = random_instance(6, 3, seed=1, l_a=10, l_t_bar=1e3)
    alloc, rep = dual.run(p, SolverConfig())
    assert rep.converged
    assert np.all(rep.final_prices.psi <= 1e-3)
    assert np.array_equal(alloc.x, greedy_maas(p).x)


def test_run_empty_neighborhoods():
    p = build_neighborhoods(four_cell_example().scenario, s_min=1e6)
    alloc, rep = dual.run(p)
    assert rep.converged and rep.iterations == 1
    assert np.all(alloc.x == 0)
    assert objective(p, alloc) == objective(p, no_comp(p))


def test_report_traces_have_iteration_length():
    p = binding_instance(5)
    _, rep = dual.run(p, SolverConfig(max_iters=37))
    assert rep.iterations == 37
    for tr in (rep.objective_trace, rep.egress_demand_trace, rep.max_violation_trace,
               rep.max_egress_violation_trace, rep.max_ingress_violation_trace):
        assert len(tr) == 37
    assert rep.demand.shape == (37, p.num_cells)


def test_run_not_converged_returns_best_iterate():
    p = binding_instance(2)
    cfg = SolverConfig(nu=0.02, max_iters=300, eps2=1e-3 * p.l_t_bar)
    alloc, rep = dual.run(p, cfg)
    assert not rep.converged
    t = rep.best_iteration
    assert objective(p, alloc) == pytest.approx(rep.objective_trace[t - 1], rel=1e-14)
    eg = np.array(rep.max_egress_violation_trace)
    ing = np.array(rep.max_ingress_violation_trace)
    ok = (eg <= cfg.eps2) & (ing <= cfg.eps1)
    if ok.any():
        assert rep.objective_trace[t - 1] == max(np.array(rep.objective_trace)[ok])
    else:
        assert max(eg[t - 1], ing[t - 1]) == np.maximum(eg, ing).min()


def test_trace_stream_and_file_agree(tmp_path):
    p = binding_instance(3)
    buf = io.StringIO()
    _, rep = dual.run(p, SolverConfig(max_iters=25), trace_stream=buf)
    write_trace_csv(rep, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == buf.getvalue()
    header, data = read_trace_csv(tmp_path / "t.csv")
    assert header[:4] == list(dual.TRACE_HEADER_PREFIX)
    assert data.shape == (25, 4 + p.num_cells)
    assert np.array_equal(data[:, 1], rep.objective_trace)
    assert np.array_equal(data[:, 4:], rep.demand)


def test_run_deterministic():
    p = binding_instance(6)
    a1, r1 = dual.run(p, SolverConfig(max_iters=200))
    a2, r2 = dual.run(p, SolverConfig(max_iters=200))
    assert np.array_equal(a1.x, a2.x)
    assert r1.objective_trace == r2.objective_trace


@pytest.mark.parametrize("seed", CONVERGING)
def test_converged_run_is_feasible_and_complementary(seed):
    p = binding_instance(seed)
    cfg = SolverConfig(nu=0.01, schedule="diminishing", max_iters=5000, eps2=1e-3 * p.l_t_bar)
    alloc, rep = dual.run(p, cfg)
    assert rep.converged
    r = residuals(p, alloc)
    assert r.max_egress_violation <= cfg.eps2
    assert r.max_ingress_violation <= cfg.eps1
    psi, lam = rep.final_prices.psi, rep.final_prices.lam
    delta = egress_headroom(p, alloc)
    slack = p.l_eff - primal.sweep_full(p, rep.final_prices).count
    assert np.all(psi * np.abs(delta) <= cfg.eps2 * max(psi.max(), 1e-300) + 1e-15)
    assert np.all(lam * np.abs(slack) <= cfg.eps1 * max(lam.max(), 1e-300) + 1e-15)
    for k in range(p.num_users):
        x = alloc.user_values(k)
        assert np.count_nonzero((x > 0) & (x < 1)) <= 1
    # some egress constraint is active at the solution
    assert np.any(psi > cfg.eps2)


@pytest.mark.parametrize("seed", (2, 4, 14))
def test_gap_to_relaxed_optimum_shrinks_with_step(seed):
    p = binding_instance(seed)
    _, ref = oracles.centralized_relaxed(p, tol=1e-9)
    gaps = []
    for nu in (0.02, 0.005, 0.001):
        alloc, rep = dual.run(p, SolverConfig(nu=nu, max_iters=20000, eps2=1e-3 * p.l_t_bar))
        gaps.append(abs(ref - objective(p, alloc)) / ref)
    assert gaps[2] <= gaps[1] + 1e-5 and gaps[1] <= gaps[0] + 1e-5
    assert gaps[2] <= 1e-3


# ---------------------------------------------------------------- dual function

def _manual_iterations(p, nu, steps):
    """Replay the price iteration with the public update operations."""
    pr = PriceState.initial(p, 1e-3, nu)
    out = []
    for _ in range(steps):
        alloc = primal.sweep(p, pr)
        out.append((pr.copy(), alloc))
        count = np.bincount(p.edge_user, weights=alloc.x, minlength=p.num_users)
        delta = egress_headroom(p, alloc)
        for k in range(p.num_users):
            update_ingress_price(pr, k, count[k], p.l_eff[k])
        for i in range(p.num_cells):
            update_egress_price(pr, i, delta[i])
    return out


def test_manual_replay_matches_run():
    p = binding_instance(11)
    hist = _manual_iterations(p, 0.005, 40)
    _, rep = dual.run(p, SolverConfig(max_iters=40))
    assert [objective(p, a) for _, a in hist] == pytest.approx(rep.objective_trace, rel=1e-13)


@pytest.mark.parametrize("seed", [0, 5, 11])
def test_dual_value_monotone_within_step_noise(seed):
    p = binding_instance(seed)
    nu = 0.005
    hist = _manual_iterations(p, nu, 300)
    values, sq = [], []
    for pr, alloc in hist:
        values.append(dual_value(p, pr))
        count = np.bincount(p.edge_user, weights=alloc.x, minlength=p.num_users)
        sub = np.concatenate([p.l_t_bar - egress_demand(p, alloc), p.l_eff - count])
        sq.append(sub @ sub)
    # D(p') <= D(p) + <g', p' - p> and |p' - p| <= nu |g|, so increases are O(nu C)
    C = max(sq)
    assert np.all(np.diff(values) <= nu * C + 1e-12)
    assert values[-1] <= values[0]


@pytest.mark.parametrize("seed", [0, 5])
def test_dual_value_bounds_relaxed_optimum(seed):
    p = binding_instance(seed)
    _, ref = oracles.centralized_relaxed(p, tol=1e-9)
    for pr, _ in _manual_iterations(p, 0.005, 50)[::7]:
        assert dual_value(p, pr) >= ref - 1e-9


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0, 1), psi=st.floats(0, 1), sel=st.floats(0, 5), limit=st.floats(0, 5),
       head=st.floats(-5, 5), nu=st.floats(1e-4, 1))
def test_updates_keep_prices_nonnegative(lam, psi, sel, limit, head, nu):
    pr = PriceState(np.array([psi]), np.array([lam]), nu)
    assert update_ingress_price(pr, 0, sel, limit) >= 0.0
    assert update_egress_price(pr, 0, head) >= 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), iters=st.integers(1, 80))
def test_run_prices_nonnegative_and_sweep_idempotent(seed, iters):
    p = random_instance(5, 2, seed=seed, l_a=2, l_t_bar=0.3)
    _, rep = dual.run(p, SolverConfig(max_iters=iters))
    pr = rep.final_prices
    assert np.all(pr.psi >= 0) and np.all(pr.lam >= 0)
    assert np.array_equal(primal.sweep(p, pr).x, primal.sweep(p, pr).x)
