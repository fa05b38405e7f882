"""Comparison schemes: no cooperation, greedy aperture filling, random grants."""

from __future__ import annotations

import numpy as np

from .problem import SharingAllocation
from .scenario import SharingProblem


def no_comp(problem: SharingProblem) -> SharingAllocation:
    """Every user decodes from its serving cell alone."""
    return SharingAllocation(problem)


def greedy_maas(problem: SharingProblem) -> SharingAllocation:
    """Each user takes its ``min(L_A, L_R(k))`` strongest helpers, ignoring egress.

    Ties in SINR go to the lower cell id.
    """
    x = np.zeros(problem.num_edges)
    cap = int(np.floor(problem.l_a + 1e-12))
    for k in range(problem.num_users):
        lo, hi = problem.ptr[k], problem.ptr[k + 1]
        if hi == lo or cap == 0:
            continue
        order = np.lexsort((problem.edge_cell[lo:hi], -problem.edge_sinr[lo:hi]))
        x[lo + order[:cap]] = 1.0
    return SharingAllocation(problem, x)


def randomized_egress(problem: SharingProblem, seed=0, fractional: bool = False) -> SharingAllocation:
    """Helpers grant the greedy requests in random order until egress runs out.

    Each helper cell shuffles its incoming requests with its own generator
    (seeded by ``(seed, cell)``) and grants them whole while the forwarded
    bandwidth stays within ``L_T``.  The first request that does not fit
    ends the cell's granting; with ``fractional`` it first receives the
    remaining bandwidth as a partial grant.  Ungranted users do not
    re-request elsewhere.
    """
    requested = greedy_maas(problem).x
    beta = problem.edge_beta
    x = np.zeros(problem.num_edges)
    for i in range(problem.num_cells):
        edges = np.flatnonzero((problem.edge_cell == i) & (requested > 0))
        if len(edges) == 0:
            continue
        rng = np.random.default_rng([int(seed), i])
        load = 0.0
        for e in rng.permutation(edges):
            if load + beta[e] <= problem.l_t_bar + 1e-12:
                x[e] = 1.0
                load += beta[e]
                continue
            if fractional:
                rest = max(problem.l_t_bar - load, 0.0)
                x[e] = min(rest / beta[e], 1.0)
            break
    return SharingAllocation(problem, x)


ALGORITHMS = ("no_comp", "randomized_egress", "liquidmaas", "greedy_maas")
