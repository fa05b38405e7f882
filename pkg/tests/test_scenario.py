import itertools
import math

import numpy as np
import pytest

from liquidmaas.scenario import (CellSite, NetworkScenario, RadioParams, ScenarioError,
                                 SharingProblem, User, build_neighborhoods, compute_sinr_matrix,
                                 drop_users, four_cell_example, generate_hex_layout,
                                 generate_scenario, load_scenario, random_instance,
                                 save_scenario)


# ---------------------------------------------------------------- layout

def test_standard_layout_has_57_cells():
    cells = generate_hex_layout(19, 3, 100.0)
    assert len(cells) == 57
    assert [c.id for c in cells] == list(range(57))
    assert all(c.num_antennas >= 1 for c in cells)


def test_single_site_single_sector_at_origin():
    cells = generate_hex_layout(1, 1, 100.0)
    assert len(cells) == 1
    assert cells[0].position == (0.0, 0.0)
    assert cells[0].azimuth is None


def test_seven_sites_ring_distances():
    cells = generate_hex_layout(7, 3, 100.0)
    assert len(cells) == 21
    sites = sorted({c.position for c in cells}, key=lambda p: (round(p[0], 6), round(p[1], 6)))
    assert len(sites) == 7
    centre = min(sites, key=lambda p: math.hypot(*p))
    assert math.hypot(*centre) < 1e-9
    ring = [p for p in sites if p != centre]
    # independent geometry: the six neighbours sit at 100 m, 60 degrees apart
    angles = sorted(math.degrees(math.atan2(y, x)) % 360.0 for x, y in ring)
    for (x, y) in ring:
        assert math.hypot(x, y) == pytest.approx(100.0, abs=1e-9)
    gaps = np.diff(angles + [angles[0] + 360.0])
    assert np.allclose(gaps, 60.0)
    # adjacent ring sites are also one ISD apart
    for a, b in itertools.combinations(ring, 2):
        d = math.hypot(a[0] - b[0], a[1] - b[1])
        assert any(abs(d - ref) < 1e-9 for ref in (100.0, 100.0 * math.sqrt(3), 200.0))


def test_layout_deterministic():
    assert generate_hex_layout(19, 3, 100.0) == generate_hex_layout(19, 3, 100.0)


@pytest.mark.parametrize("args", [(0, 3, 100.0), (3, 0, 100.0), (3, 3, 0.0)])
def test_layout_rejects_bad_arguments(args):
    with pytest.raises(ScenarioError):
        generate_hex_layout(*args)


# ---------------------------------------------------------------- users

def test_drop_57_cells_ten_per_cell():
    cells = generate_hex_layout(19, 3, 100.0)
    users = drop_users(cells, 10, seed=3)
    assert len(users) == 570
    counts = np.bincount([u.serving_cell for u in users], minlength=57)
    for u in users:
        assert u.beta == pytest.approx(1.0 / counts[u.serving_cell])
        assert u.weight == 1.0
    assert np.all(np.bincount([u.serving_cell for u in users],
                              weights=[u.beta for u in users], minlength=57)[counts > 0]
                  == pytest.approx(1.0))


def test_drop_single_cell_single_user():
    users = drop_users(generate_hex_layout(1, 1, 100.0), 1, seed=11)
    assert len(users) == 1
    assert users[0].serving_cell == 0
    assert users[0].beta == 1.0


def test_two_users_split_bandwidth():
    users = drop_users(generate_hex_layout(1, 1, 100.0), 2, seed=0)
    assert [u.beta for u in users] == [0.5, 0.5]


def test_drop_reproducible_per_seed():
    cells = generate_hex_layout(7, 3, 100.0)
    assert drop_users(cells, 4, seed=5) == drop_users(cells, 4, seed=5)
    assert drop_users(cells, 4, seed=5) != drop_users(cells, 4, seed=6)


def test_drop_serving_cell_is_strongest():
    sc = generate_scenario(7, 3, 100.0, 5, seed=2, radio=RadioParams(interference="none"))
    # without interference SINR ranks cells exactly like received power
    assert np.array_equal(np.argmax(sc.sinr, axis=0), sc.serving)


def test_drop_rejects_zero_users():
    with pytest.raises(ScenarioError):
        drop_users(generate_hex_layout(1, 1), 0, seed=0)


# ---------------------------------------------------------------- SINR

def test_sinr_power_cap_single_user():
    radio = RadioParams(alpha=1.0, p0_dbm=0.0, interference="none")
    cells = [CellSite(0, (0.0, 0.0), 2)]
    users = [User(0, (0.0, 0.0), 0, 1.0)]
    s = compute_sinr_matrix(cells, users, radio)
    # by hand: 5 m minimum distance, 24 dBm cap, kT = -174 dBm/Hz, 4 dB NF, 10 MHz
    pl = 38.5 + 37.6 * math.log10(5.0)
    assert 0.0 + pl > 24.0
    rx_dbm = 24.0 - pl
    noise_dbm = -174.0 + 4.0 + 10.0 * math.log10(10e6)
    expected = 2 * 10.0 ** ((rx_dbm - noise_dbm) / 10.0)
    assert s[0, 0] == pytest.approx(expected, rel=1e-12)


def test_sinr_noise_scales_with_bandwidth_share():
    radio = RadioParams(alpha=1.0, p0_dbm=0.0, interference="none")
    cells = [CellSite(0, (0.0, 0.0), 1)]
    full = compute_sinr_matrix(cells, [User(0, (30.0, 0.0), 0, 1.0)], radio)
    half = compute_sinr_matrix(cells, [User(0, (30.0, 0.0), 0, 0.5)], radio)
    # same power over half the band doubles the PSD
    assert half[0, 0] == pytest.approx(2 * full[0, 0], rel=1e-12)


def test_sinr_zero_power_gives_zero():
    radio = RadioParams(pmax_dbm=-np.inf)
    cells = generate_hex_layout(1, 3, 100.0)
    users = drop_users(cells, 2, seed=0, radio=RadioParams())
    s = compute_sinr_matrix(cells, users, radio, seed=0)
    assert np.all(s == 0.0)


@pytest.mark.parametrize("mode", ["none", "expected"])
def test_sinr_symmetric_users(mode):
    cells = [CellSite(0, (-50.0, 0.0), 2), CellSite(1, (50.0, 0.0), 2)]
    users = [User(0, (0.0, 20.0), 0, 1.0), User(1, (0.0, -20.0), 1, 1.0)]
    s = compute_sinr_matrix(cells, users, RadioParams(interference=mode))
    assert s[0, 0] == pytest.approx(s[1, 0], rel=1e-12)
    assert s[0, 1] == pytest.approx(s[1, 1], rel=1e-12)
    assert s[1, 0] == pytest.approx(s[0, 1], rel=1e-12)


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_sinr_rejects_alpha_out_of_range(alpha):
    cells = [CellSite(0, (0.0, 0.0), 1)]
    with pytest.raises(ScenarioError):
        compute_sinr_matrix(cells, [User(0, (10.0, 0.0), 0)], RadioParams(alpha=alpha))


def test_sinr_nonnegative_and_serving_positive():
    sc = generate_scenario(7, 3, 100.0, 5, seed=1)
    assert np.all(sc.sinr >= 0)
    assert np.all(sc.serving_sinr > 0) and np.all(np.isfinite(sc.serving_sinr))


def test_generate_scenario_bit_identical():
    a = generate_scenario(seed=4)
    b = generate_scenario(seed=4)
    assert np.array_equal(a.sinr, b.sinr)
    assert a.users == b.users and a.cells == b.cells


def test_shadowing_flag_changes_scenario():
    a = generate_scenario(7, 3, 100.0, 3, seed=4)
    b = generate_scenario(7, 3, 100.0, 3, seed=4, radio=RadioParams(shadowing=True))
    assert not np.array_equal(a.sinr, b.sinr)


# ---------------------------------------------------------------- neighborhoods

def test_fig1_ingress_sets():
    p = four_cell_example()
    # cells 0-2 and 1-3 never cooperate
    assert p.ingress == ((1, 3), (1, 3), (0, 2), (1, 3), (1, 3), (1, 3), (0, 2))
    assert list(p.l_r) == [2] * 7


def test_fig1_egress_sets():
    p = four_cell_example()
    assert p.egress(1, 2) == {3, 4, 5}
    assert p.egress(1, 3) == set()
    assert p.egress(1, 0) == {0, 1}


def test_threshold_above_everything_empties_neighborhoods():
    sc = four_cell_example().scenario
    p = build_neighborhoods(sc, s_min=1e6)
    assert all(nb == () for nb in p.ingress)
    assert p.num_edges == 0


def test_neighborhood_duality_exhaustive():
    sc = generate_scenario(7, 3, 100.0, 4, seed=8)
    p = build_neighborhoods(sc, 0.1)
    serving = sc.serving
    for i in range(sc.num_cells):
        for k in range(sc.num_users):
            in_r = i in p.ingress[k]
            in_t = k in p.egress(i, int(serving[k])) if i != serving[k] else False
            assert in_r == in_t
            assert in_r == (i != serving[k] and sc.sinr[i, k] >= 0.1)
        for k in range(sc.num_users):
            assert serving[k] not in p.ingress[k]


def test_build_neighborhoods_rejects_nonpositive_threshold():
    with pytest.raises(ScenarioError):
        build_neighborhoods(four_cell_example().scenario, 0.0)


# ---------------------------------------------------------------- validation

def _cells(n):
    return [CellSite(j, (0.0, 0.0), 1) for j in range(n)]


def test_scenario_rejects_overfull_cell():
    with pytest.raises(ScenarioError):
        NetworkScenario(_cells(1), [User(0, (0, 0), 0, 0.7), User(1, (0, 0), 0, 0.7)],
                        np.ones((1, 2)))


def test_scenario_rejects_negative_sinr_and_bad_weight():
    with pytest.raises(ScenarioError):
        NetworkScenario(_cells(2), [User(0, (0, 0), 0)], np.array([[1.0], [-1.0]]))
    with pytest.raises(ScenarioError):
        NetworkScenario(_cells(1), [User(0, (0, 0), 0, 1.0, 0.0)], np.ones((1, 1)))


@pytest.mark.parametrize("serving", [0.0, np.inf])
def test_scenario_rejects_bad_serving_sinr(serving):
    with pytest.raises(ScenarioError):
        NetworkScenario(_cells(2), [User(0, (0, 0), 0)], np.array([[serving], [1.0]]))


def test_problem_rejects_serving_cell_as_helper():
    sc = NetworkScenario(_cells(2), [User(0, (0, 0), 0)], np.array([[10.0], [1.0]]))
    with pytest.raises(ScenarioError):
        SharingProblem(sc, ((0,),), 1, 1.0, 0.1)
    with pytest.raises(ScenarioError):
        SharingProblem(sc, ((1,),), -1, 1.0, 0.1)


def test_scenario_arrays_are_read_only():
    p = four_cell_example()
    with pytest.raises(ValueError):
        p.scenario.beta[0] = 0.3
    with pytest.raises(ValueError):
        p.edge_sinr[0] = 1.0


# ---------------------------------------------------------------- files

def test_scenario_file_round_trip(tmp_path):
    sc = generate_scenario(7, 3, 100.0, 3, seed=9)
    p = build_neighborhoods(sc, 0.1, 3, 0.8)
    path = save_scenario(tmp_path / "s.json", sc, p, meta={"seed": 9})
    sc2, p2 = load_scenario(path)
    assert sc2.cells == sc.cells and sc2.users == sc.users
    assert np.allclose(sc2.sinr, sc.sinr, rtol=1e-12, atol=0)
    assert np.array_equal(sc2.sinr == 0, sc.sinr == 0)
    assert p2.ingress == p.ingress
    assert (p2.l_a, p2.l_t_bar) == (p.l_a, p.l_t_bar)
    assert p2.s_min == pytest.approx(p.s_min, rel=1e-12)


def test_hand_written_fig1_file(tmp_path):
    """The Fig. 1 topology written by hand in dB, without the radio model."""
    import json
    serving = [0, 0, 1, 2, 2, 2, 3]
    rows = [[None] * 7 for _ in range(4)]
    for k, s in enumerate(serving):
        rows[s][k] = 10.0
        rows[(s + 1) % 4][k] = 0.0
        rows[(s - 1) % 4][k] = -3.0
    counts = np.bincount(serving)
    doc = {"format": "liquidmaas-scenario", "version": 1,
           "cells": [{"id": j, "position": [0, 0]} for j in range(4)],
           "users": [{"id": k, "serving_cell": s, "beta": 1.0 / counts[s]}
                     for k, s in enumerate(serving)],
           "sinr_db": rows, "problem": {"s_min_db": -10.0, "l_a": 2, "l_t_bar": 1.0}}
    (tmp_path / "fig1.json").write_text(json.dumps(doc))
    _, p = load_scenario(tmp_path / "fig1.json")
    assert p.ingress == four_cell_example().ingress


def test_malformed_scenario_file(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "bad.json")
    (tmp_path / "bad2.json").write_text('{"format": "liquidmaas-scenario", "cells": []}')
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "bad2.json")


def test_random_instance_helpers_pass_threshold():
    p = random_instance(10, 3, seed=0)
    assert np.all(p.edge_sinr >= p.s_min)
    assert p.num_users == 30
