"""Network geometry, uplink SINR model and sharing neighborhoods.

A scenario is a set of cells, a set of users attached to serving cells and the
full SINR matrix ``sinr[i, k]`` (SINR of user ``k`` measured at cell ``i``,
linear scale).  :func:`build_neighborhoods` turns a scenario into a
:class:`SharingProblem` by applying the admission threshold.

The SINR matrix is laid out cells x users.  Everything inside the package is
linear; dB only appears at the file and CLI boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from functools import cached_property
from pathlib import Path

import numpy as np

BOLTZMANN_DBM_HZ = -174.0

SCENARIO_FORMAT = "liquidmaas-scenario"
SCENARIO_VERSION = 1


def db_to_lin(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def lin_to_db(lin):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(lin, dtype=float))


class ScenarioError(ValueError):
    """Raised for malformed scenarios, scenario files or parameters."""


@dataclass(frozen=True)
class CellSite:
    id: int
    position: tuple[float, float]
    num_antennas: int = 2
    # Boresight azimuth in degrees; None means omnidirectional.
    azimuth: float | None = None


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float]
    serving_cell: int
    beta: float = 1.0
    weight: float = 1.0


@dataclass(frozen=True)
class RadioParams:
    """Uplink link-budget parameters.

    Defaults follow the usual 57-cell evaluation setup: 10 MHz at 2 GHz,
    open-loop fractional power control with ``alpha=0.8`` and
    ``P0=-80 dBm``, 24 dBm power cap and a 4 dB receiver noise figure.
    """

    bandwidth_hz: float = 10e6
    carrier_hz: float = 2.0e9
    alpha: float = 0.8
    p0_dbm: float = -80.0
    pmax_dbm: float = 24.0
    noise_figure_db: float = 4.0
    # log-distance pathloss PL = pl0 + 10 n log10(d / d0); pl0_db=None derives
    # pl0 from free-space loss at d0 for carrier_hz (38.46 dB at 2 GHz, 1 m)
    pl0_db: float | None = 38.5
    pl_exponent: float = 3.76
    d0_m: float = 1.0
    min_distance_m: float = 5.0
    shadowing: bool = False
    shadowing_std_db: float = 8.0
    # sector antenna pattern: -min(12 (phi / beamwidth)^2, front_to_back)
    beamwidth_deg: float = 70.0
    front_to_back_db: float = 20.0
    # "sampled": one random co-scheduled user per other cell;
    # "expected": average over the users of each other cell; "none": noise only
    interference: str = "sampled"

    def validate(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ScenarioError(f"power control alpha must lie in [0, 1], got {self.alpha}")
        if self.bandwidth_hz <= 0:
            raise ScenarioError("bandwidth must be positive")
        if self.interference not in ("sampled", "expected", "none"):
            raise ScenarioError(f"unknown interference model {self.interference!r}")
        if self.d0_m <= 0 or self.min_distance_m <= 0:
            raise ScenarioError("reference and minimum distances must be positive")

    @property
    def pathloss_intercept_db(self) -> float:
        if self.pl0_db is not None:
            return self.pl0_db
        wavelength = 299792458.0 / self.carrier_hz
        return 20.0 * math.log10(4.0 * math.pi * self.d0_m / wavelength)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    cells: tuple[CellSite, ...]
    users: tuple[User, ...]
    sinr: np.ndarray  # (num_cells, num_users), linear

    def __post_init__(self):
        sinr = np.array(self.sinr, dtype=float)
        sinr.setflags(write=False)
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "sinr", sinr)
        self.validate()

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @cached_property
    def serving(self) -> np.ndarray:
        return _frozen(np.array([u.serving_cell for u in self.users], dtype=np.intp))

    @cached_property
    def beta(self) -> np.ndarray:
        return _frozen(np.array([u.beta for u in self.users], dtype=float))

    @cached_property
    def weight(self) -> np.ndarray:
        return _frozen(np.array([u.weight for u in self.users], dtype=float))

    @cached_property
    def utility_weight(self) -> np.ndarray:
        """``omega_k beta_k``, the coefficient of each user's log term."""
        return _frozen(self.weight * self.beta)

    @cached_property
    def serving_sinr(self) -> np.ndarray:
        return _frozen(self.sinr[self.serving, np.arange(self.num_users)])

    def users_of(self, cell: int) -> list[int]:
        return [u.id for u in self.users if u.serving_cell == cell]

    def validate(self):
        J, K = len(self.cells), len(self.users)
        if [c.id for c in self.cells] != list(range(J)):
            raise ScenarioError("cell ids must be dense 0..J-1 in order")
        if [u.id for u in self.users] != list(range(K)):
            raise ScenarioError("user ids must be dense 0..K-1 in order")
        if any(c.num_antennas < 1 for c in self.cells):
            raise ScenarioError("every cell needs at least one antenna")
        if self.sinr.shape != (J, K):
            raise ScenarioError(f"SINR matrix shape {self.sinr.shape} != ({J}, {K})")
        if np.any(np.isnan(self.sinr)) or np.any(self.sinr < 0):
            raise ScenarioError("SINR entries must be nonnegative numbers")
        load = np.zeros(J)
        for u in self.users:
            if not 0 <= u.serving_cell < J:
                raise ScenarioError(f"user {u.id} has invalid serving cell {u.serving_cell}")
            if not 0.0 < u.beta <= 1.0:
                raise ScenarioError(f"user {u.id}: beta must be in (0, 1], got {u.beta}")
            if not u.weight > 0:
                raise ScenarioError(f"user {u.id}: weight must be positive")
            load[u.serving_cell] += u.beta
        if np.any(load > 1.0 + 1e-9):
            raise ScenarioError("bandwidth fractions of a cell sum above 1")
        if K and not np.all(np.isfinite(self.serving_sinr) & (self.serving_sinr > 0)):
            raise ScenarioError("serving-cell SINR must be finite and positive")


# ---------------------------------------------------------------------------
# geometry


_AXIAL_DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def _hex_site_positions(num_sites, isd):
    """Site centres on a hexagonal lattice, filled ring by ring from the origin."""
    coords = [(0, 0)]
    ring = 1
    while len(coords) < num_sites:
        q, r = _AXIAL_DIRECTIONS[4][0] * ring, _AXIAL_DIRECTIONS[4][1] * ring
        for d in range(6):
            dq, dr = _AXIAL_DIRECTIONS[d]
            for _ in range(ring):
                coords.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    coords = coords[:num_sites]
    return [(isd * (q + r / 2.0), isd * (math.sqrt(3.0) / 2.0) * r) for q, r in coords]


def generate_hex_layout(num_sites: int, sectors_per_site: int = 3, isd: float = 100.0,
                        num_antennas: int = 2) -> list[CellSite]:
    """Sectorised hexagonal layout; cell ``s * sectors + t`` is sector ``t`` of site ``s``.

    Sites fill hexagonal rings around the origin, so 1, 7 and 19 sites give
    the usual 0-, 1- and 2-ring layouts (19 x 3 = 57 cells).
    """
    if num_sites < 1:
        raise ScenarioError("need at least one site")
    if sectors_per_site < 1:
        raise ScenarioError("need at least one sector per site")
    if not isd > 0:
        raise ScenarioError("inter-site distance must be positive")
    cells = []
    for s, (x, y) in enumerate(_hex_site_positions(num_sites, isd)):
        for t in range(sectors_per_site):
            az = None if sectors_per_site == 1 else 360.0 * t / sectors_per_site
            cells.append(CellSite(len(cells), (x, y), num_antennas, az))
    return cells


def _site_key(cell):
    return cell.position


def coupling_gain_db(cells, positions, radio: RadioParams, shadow_db=None) -> np.ndarray:
    """Coupling gain (negative loss, dB) between every cell and every position.

    ``shadow_db`` is an optional (num_cells, num_positions) array added as is.
    """
    cell_xy = np.array([c.position for c in cells], dtype=float).reshape(-1, 2)
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    delta = pos[None, :, :] - cell_xy[:, None, :]
    dist = np.maximum(np.hypot(delta[..., 0], delta[..., 1]), radio.min_distance_m)
    gain = -(radio.pathloss_intercept_db + 10.0 * radio.pl_exponent * np.log10(dist / radio.d0_m))
    az = np.array([np.nan if c.azimuth is None else c.azimuth for c in cells])
    sectored = ~np.isnan(az)
    if np.any(sectored):
        bearing = np.degrees(np.arctan2(delta[..., 1], delta[..., 0]))
        off = (bearing - az[:, None] + 180.0) % 360.0 - 180.0
        pattern = -np.minimum(12.0 * (off / radio.beamwidth_deg) ** 2, radio.front_to_back_db)
        gain = gain + np.where(sectored[:, None], pattern, 0.0)
    if shadow_db is not None:
        gain = gain + shadow_db
    return gain


def _site_shadowing(cells, num_users, radio, rng):
    """Log-normal shadowing shared by the co-located sectors of a site."""
    if not radio.shadowing:
        return None
    sites = {}
    index = np.array([sites.setdefault(_site_key(c), len(sites)) for c in cells])
    per_site = rng.normal(0.0, radio.shadowing_std_db, size=(len(sites), num_users))
    return per_site[index]


def _in_cell_area(points, centre, isd, azimuth, sectors):
    rel = points - np.asarray(centre)
    inside = np.ones(len(points), dtype=bool)
    for n in range(6):
        a = math.radians(60.0 * n)
        inside &= rel[:, 0] * math.cos(a) + rel[:, 1] * math.sin(a) <= isd / 2.0
    if azimuth is not None:
        bearing = np.degrees(np.arctan2(rel[:, 1], rel[:, 0]))
        off = (bearing - azimuth + 180.0) % 360.0 - 180.0
        inside &= np.abs(off) <= 180.0 / sectors
    return inside


@dataclass
class _Drop:
    positions: np.ndarray
    serving: np.ndarray
    shadow_db: np.ndarray | None


def _drop(cells, avg_users_per_cell, rng, radio, isd):
    sectors_at = {}
    for c in cells:
        sectors_at[_site_key(c)] = sectors_at.get(_site_key(c), 0) + 1
    chunks = []
    for c in cells:
        need, got = avg_users_per_cell, []
        radius = isd / math.sqrt(3.0)
        while need > 0:
            cand = np.asarray(c.position) + rng.uniform(-radius, radius, size=(4 * need + 8, 2))
            ok = _in_cell_area(cand, c.position, isd, c.azimuth, sectors_at[_site_key(c)])
            d = np.hypot(*(cand - np.asarray(c.position)).T)
            cand = cand[ok & (d >= radio.min_distance_m)][:need]
            got.append(cand)
            need -= len(cand)
        chunks.extend(got)
    positions = np.concatenate(chunks) if chunks else np.zeros((0, 2))
    shadow = _site_shadowing(cells, len(positions), radio, rng)
    gain = coupling_gain_db(cells, positions, radio, shadow)
    serving = np.argmax(gain, axis=0) if len(positions) else np.zeros(0, dtype=np.intp)
    return _Drop(positions, serving, shadow)


def _infer_isd(cells):
    sites = np.unique(np.array([c.position for c in cells]), axis=0)
    if len(sites) < 2:
        return 100.0
    d = np.hypot(*(sites[:, None, :] - sites[None, :, :]).transpose(2, 0, 1))
    return float(np.min(d[d > 0]))


def drop_users(cells, avg_users_per_cell: int, seed, radio: RadioParams | None = None,
               isd: float | None = None) -> list[User]:
    """Drop ``avg_users_per_cell`` users uniformly in each cell's area.

    Each user attaches to the cell with the strongest received power and the
    bandwidth of a cell is split equally among its attached users.  Weights
    default to 1.
    """
    if avg_users_per_cell < 1:
        raise ScenarioError("need at least one user per cell")
    radio = radio or RadioParams()
    rng = np.random.default_rng(seed)
    drop = _drop(cells, avg_users_per_cell, rng, radio, isd or _infer_isd(cells))
    return _users_from_drop(drop)


def _users_from_drop(drop):
    counts = np.bincount(drop.serving, minlength=1)
    return [User(k, (float(p[0]), float(p[1])), int(s), 1.0 / counts[s], 1.0)
            for k, (p, s) in enumerate(zip(drop.positions, drop.serving))]


def compute_sinr_matrix(cells, users, radio: RadioParams | None = None, seed=None,
                        shadow_db=None) -> np.ndarray:
    """Uplink SINR of every user at every cell, linear, shape (cells, users).

    Transmit power follows open-loop fractional power control on the
    coupling loss to the serving cell, capped at ``pmax_dbm``.  SINR is
    evaluated over the user's own bandwidth share, so noise and interference
    are power spectral densities: an interferer occupying ``beta_u`` of the
    band contributes ``P_u G / (beta_u B)``.  Co-located antennas are combined
    by MRC, which multiplies the SINR by the antenna count.
    """
    radio = radio or RadioParams()
    radio.validate()
    J, K = len(cells), len(users)
    if K == 0:
        return np.zeros((J, 0))
    pos = np.array([u.position for u in users], dtype=float)
    serving = np.array([u.serving_cell for u in users], dtype=np.intp)
    beta = np.array([u.beta for u in users], dtype=float)
    gain_db = coupling_gain_db(cells, pos, radio, shadow_db)
    gain = db_to_lin(gain_db)
    ks = np.arange(K)
    pl_serving = -gain_db[serving, ks]
    tx_dbm = np.minimum(radio.pmax_dbm, radio.p0_dbm + radio.alpha * pl_serving)
    tx_psd = db_to_lin(tx_dbm) / (beta * radio.bandwidth_hz)  # mW/Hz
    rx_psd = gain * tx_psd[None, :]  # (J, K)
    noise_psd = float(db_to_lin(BOLTZMANN_DBM_HZ + radio.noise_figure_db))

    interf = np.zeros((J, K))
    if radio.interference != "none":
        members = [np.flatnonzero(serving == c) for c in range(J)]
        if radio.interference == "expected":
            per_cell = np.stack([rx_psd[:, m].mean(axis=1) if len(m) else np.zeros(J)
                                 for m in members], axis=1)  # (J receivers, J sources)
            total = per_cell.sum(axis=1)
            interf = total[:, None] - per_cell[:, serving]
        else:
            rng = np.random.default_rng(seed)
            for c, m in enumerate(members):
                if not len(m):
                    continue
                pick = m[rng.integers(0, len(m), size=K)]
                contrib = rx_psd[:, pick]  # one co-scheduled user of cell c per user k
                contrib[:, serving == c] = 0.0
                interf += contrib
    ant = np.array([c.num_antennas for c in cells], dtype=float)
    return ant[:, None] * rx_psd / (noise_psd + interf)


def generate_scenario(num_sites=19, sectors_per_site=3, isd=100.0, avg_users_per_cell=10,
                      seed=0, radio: RadioParams | None = None, num_antennas=2) -> NetworkScenario:
    """Layout, user drop and SINR matrix from a single seed."""
    radio = radio or RadioParams()
    radio.validate()
    cells = generate_hex_layout(num_sites, sectors_per_site, isd, num_antennas)
    rng = np.random.default_rng(seed)
    drop = _drop(cells, avg_users_per_cell, rng, radio, isd)
    users = _users_from_drop(drop)
    sinr = compute_sinr_matrix(cells, users, radio, seed=rng, shadow_db=drop.shadow_db)
    return NetworkScenario(cells, users, sinr)


# ---------------------------------------------------------------------------
# neighborhoods


@dataclass(frozen=True, eq=False)
class SharingProblem:
    """A helper-cell allocation instance.

    ``ingress[k]`` lists the helper cells user ``k`` may request data from,
    in increasing cell id.  The flattened edge arrays enumerate every
    admissible (helper cell, user) pair; edge ``e`` for user ``k`` lives in
    ``ptr[k]:ptr[k+1]``.
    """

    scenario: NetworkScenario
    ingress: tuple[tuple[int, ...], ...]
    l_a: float
    l_t_bar: float
    s_min: float
    ptr: np.ndarray = field(init=False, repr=False)
    edge_cell: np.ndarray = field(init=False, repr=False)
    edge_user: np.ndarray = field(init=False, repr=False)
    edge_sinr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sc = self.scenario
        ingress = tuple(tuple(sorted(int(i) for i in nb)) for nb in self.ingress)
        object.__setattr__(self, "ingress", ingress)
        if len(ingress) != sc.num_users:
            raise ScenarioError("one ingress neighborhood per user required")
        if self.l_a < 0 or self.l_t_bar < 0:
            raise ScenarioError("aperture and egress limits must be nonnegative")
        serving = sc.serving
        ptr = np.zeros(sc.num_users + 1, dtype=np.intp)
        ptr[1:] = np.cumsum([len(nb) for nb in ingress])
        cell = np.fromiter((i for nb in ingress for i in nb), dtype=np.intp, count=ptr[-1])
        user = np.repeat(np.arange(sc.num_users, dtype=np.intp), np.diff(ptr))
        for k, nb in enumerate(ingress):
            if len(set(nb)) != len(nb):
                raise ScenarioError(f"duplicate helper in ingress set of user {k}")
            if serving[k] in nb:
                raise ScenarioError(f"user {k}: serving cell cannot be a helper")
            if any(not 0 <= i < sc.num_cells for i in nb):
                raise ScenarioError(f"user {k}: helper cell out of range")
        sinr = sc.sinr[cell, user].astype(float)
        if np.any(sinr <= 0):
            raise ScenarioError("every helper must have positive SINR")
        for name, arr in (("ptr", ptr), ("edge_cell", cell), ("edge_user", user), ("edge_sinr", sinr)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_cells(self) -> int:
        return self.scenario.num_cells

    @property
    def num_users(self) -> int:
        return self.scenario.num_users

    @property
    def num_edges(self) -> int:
        return len(self.edge_cell)

    @cached_property
    def l_r(self) -> np.ndarray:
        return _frozen(np.diff(self.ptr))

    @cached_property
    def l_eff(self) -> np.ndarray:
        """Effective ingress cap ``min(L_A, L_R(k))`` per user."""
        return _frozen(np.minimum(float(self.l_a), self.l_r.astype(float)))

    @cached_property
    def edge_beta(self) -> np.ndarray:
        return _frozen(self.scenario.beta[self.edge_user])

    def egress(self, i: int, j: int) -> set[int]:
        """Users of cell ``j`` that cell ``i`` may help."""
        serving = self.scenario.serving
        return {int(k) for k, c in zip(self.edge_user, self.edge_cell)
                if c == i and serving[k] == j and i != j}

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(k)): e for e, (i, k) in enumerate(zip(self.edge_cell, self.edge_user))}

    def with_limits(self, l_a=None, l_t_bar=None) -> "SharingProblem":
        return SharingProblem(self.scenario, self.ingress,
                              self.l_a if l_a is None else l_a,
                              self.l_t_bar if l_t_bar is None else l_t_bar, self.s_min)


def build_neighborhoods(scenario: NetworkScenario, s_min: float = 0.1, l_a: float = 3,
                        l_t_bar: float = 1.0) -> SharingProblem:
    """Admit helper ``i`` for user ``k`` when ``sinr[i, k] >= s_min`` (linear)."""
    if not s_min > 0:
        raise ScenarioError("admission threshold must be positive (linear scale)")
    serving = scenario.serving
    ingress = []
    for k in range(scenario.num_users):
        col = scenario.sinr[:, k]
        ingress.append(tuple(int(i) for i in np.flatnonzero(col >= s_min) if i != serving[k]))
    return SharingProblem(scenario, tuple(ingress), l_a, l_t_bar, s_min)


def four_cell_example(serving_db=10.0, helper_db=(3.0, -2.0), s_min=0.1, l_a=2,
                      l_t_bar=1.0) -> SharingProblem:
    """Hand-built 4-cell, 7-user ring topology (cells 0-2 and 1-3 never share).

    Users 0,1 sit in cell 0; 2 in cell 1; 3,4,5 in cell 2; 6 in cell 3.  Each
    user sees its two ring neighbours, the lower-numbered neighbour at
    ``helper_db[0]`` and the other at ``helper_db[1]``; the opposite cell
    receives nothing.
    """
    serving = [0, 0, 1, 2, 2, 2, 3]
    counts = np.bincount(serving, minlength=4)
    users = [User(k, (0.0, 0.0), s, 1.0 / counts[s]) for k, s in enumerate(serving)]
    cells = [CellSite(j, (0.0, 0.0), 2) for j in range(4)]
    sinr = np.zeros((4, 7))
    for k, s in enumerate(serving):
        sinr[s, k] = db_to_lin(serving_db)
        nbrs = sorted([(s - 1) % 4, (s + 1) % 4])
        for i, db in zip(nbrs, helper_db):
            sinr[i, k] = db_to_lin(db)
    return build_neighborhoods(NetworkScenario(cells, users, sinr), s_min, l_a, l_t_bar)


# ---------------------------------------------------------------------------
# scenario files


def _db_or_null(v):
    return None if v <= 0 else float(lin_to_db(v))


def scenario_to_dict(scenario: NetworkScenario, problem: SharingProblem | None = None,
                     meta: dict | None = None) -> dict:
    doc = {
        "format": SCENARIO_FORMAT,
        "version": SCENARIO_VERSION,
        "meta": meta or {},
        "cells": [{"id": c.id, "position": list(c.position), "num_antennas": c.num_antennas,
                   "azimuth": c.azimuth} for c in scenario.cells],
        "users": [{"id": u.id, "position": list(u.position), "serving_cell": u.serving_cell,
                   "beta": u.beta, "weight": u.weight} for u in scenario.users],
        # rows are cells, columns users; null is zero linear SINR
        "sinr_db": [[_db_or_null(v) for v in row] for row in scenario.sinr],
    }
    if problem is not None:
        doc["problem"] = {
            "s_min_db": float(lin_to_db(problem.s_min)),
            "l_a": problem.l_a,
            "l_t_bar": problem.l_t_bar,
            "ingress": [list(nb) for nb in problem.ingress],
        }
    return doc


def scenario_from_dict(doc: dict):
    """Inverse of :func:`scenario_to_dict`; returns ``(scenario, problem_or_None)``."""
    try:
        if doc.get("format") != SCENARIO_FORMAT:
            raise ScenarioError(f"not a scenario document (format={doc.get('format')!r})")
        cells = [CellSite(int(c["id"]), tuple(map(float, c["position"])),
                          int(c.get("num_antennas", 1)), c.get("azimuth"))
                 for c in doc["cells"]]
        users = [User(int(u["id"]), tuple(map(float, u.get("position", (0.0, 0.0)))),
                      int(u["serving_cell"]), float(u.get("beta", 1.0)), float(u.get("weight", 1.0)))
                 for u in doc["users"]]
        rows = doc["sinr_db"]
        sinr = np.array([[0.0 if v is None else 10.0 ** (float(v) / 10.0) for v in row]
                         for row in rows], dtype=float).reshape(len(cells), len(users))
        scenario = NetworkScenario(cells, users, sinr)
        problem = None
        if "problem" in doc:
            p = doc["problem"]
            s_min = float(db_to_lin(p.get("s_min_db", -10.0)))
            if "ingress" in p:
                problem = SharingProblem(scenario, tuple(tuple(nb) for nb in p["ingress"]),
                                         p.get("l_a", 3), p.get("l_t_bar", 1.0), s_min)
            else:
                problem = build_neighborhoods(scenario, s_min, p.get("l_a", 3), p.get("l_t_bar", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario document: {exc}") from exc
    return scenario, problem


def save_scenario(path, scenario, problem=None, meta=None):
    path = Path(path)
    text = json.dumps(scenario_to_dict(scenario, problem, meta), indent=1)
    path.write_text(text + "\n")
    return path


def load_scenario(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def radio_params_dict(radio: RadioParams) -> dict:
    return asdict(radio)


def random_instance(num_cells=10, users_per_cell=3, seed=0, helpers_per_user=(1, 4),
                    serving_db=(0.0, 20.0), helper_db=(-10.0, 6.0), l_a=2, l_t_bar=1.0,
                    s_min=0.1, weights=False) -> SharingProblem:
    """Synthetic instance with random SINRs, no geometry.

    Each user gets a random serving SINR and a random set of helper cells with
    SINRs drawn uniformly in dB from ``helper_db``, all above ``s_min``.
    """
    rng = np.random.default_rng(seed)
    K = num_cells * users_per_cell
    serving = np.repeat(np.arange(num_cells), users_per_cell)
    cells = [CellSite(j, (0.0, 0.0), 2) for j in range(num_cells)]
    w = rng.uniform(0.5, 2.0, size=K) if weights else np.ones(K)
    users = [User(k, (0.0, 0.0), int(serving[k]), 1.0 / users_per_cell, float(w[k])) for k in range(K)]
    sinr = np.zeros((num_cells, K))
    lo_db = max(helper_db[0], float(lin_to_db(s_min)))
    for k in range(K):
        sinr[serving[k], k] = db_to_lin(rng.uniform(*serving_db))
        others = np.delete(np.arange(num_cells), serving[k])
        n = int(rng.integers(helpers_per_user[0], min(helpers_per_user[1], len(others)) + 1))
        for i in rng.choice(others, size=n, replace=False):
            sinr[i, k] = db_to_lin(rng.uniform(lo_db, helper_db[1]))
    scenario = NetworkScenario(cells, users, sinr)
    return build_neighborhoods(scenario, s_min, l_a, l_t_bar)
