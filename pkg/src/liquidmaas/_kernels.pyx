# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-user aperture selection.

Mirrors ``_kernels_py`` operation for operation; the two must stay
bit-identical (tests/test_kernels.py checks this).
"""

from libc.stdlib cimport malloc, free

cdef double SNAP = 1e-12


cdef inline bint _before(double ma, Py_ssize_t ca, double mb, Py_ssize_t cb) noexcept nogil:
    return ma < mb or (ma == mb and ca < cb)


cdef void _order(const double* m, const Py_ssize_t* cell, Py_ssize_t* idx,
                 Py_ssize_t n) noexcept nogil:
    # insertion sort by (metric, cell id); neighborhoods are small
    cdef Py_ssize_t a, b, t
    for a in range(n):
        idx[a] = a
    for a in range(1, n):
        t = idx[a]
        b = a - 1
        while b >= 0 and _before(m[t], cell[t], m[idx[b]], cell[idx[b]]):
            idx[b + 1] = idx[b]
            b -= 1
        idx[b + 1] = t


def primal_sweep(const Py_ssize_t[::1] ptr, const Py_ssize_t[::1] edge_cell,
                 const double[::1] edge_sinr, const double[::1] serving_sinr,
                 const double[::1] beta, const double[::1] weight,
                 const double[::1] psi, const double[::1] lam,
                 double[::1] x_out, double[::1] metric_out, double[::1] g_out,
                 double[::1] count_out, double[::1] demand_out):
    """Solve every user's price-adjusted subproblem.

    Writes x and metrics per edge, the combined SNR and selected count per
    user, and the forwarded bandwidth per cell.
    """
    cdef Py_ssize_t K = ptr.shape[0] - 1
    cdef Py_ssize_t k, lo, n, e, p, q, maxdeg = 0
    cdef double g, g_full, y, mk, denom, cnt
    cdef Py_ssize_t* idx
    for k in range(K):
        if ptr[k + 1] - ptr[k] > maxdeg:
            maxdeg = ptr[k + 1] - ptr[k]
    idx = <Py_ssize_t*> malloc((maxdeg + 1) * sizeof(Py_ssize_t))
    if idx == NULL:
        raise MemoryError()
    try:
        with nogil:
            for p in range(demand_out.shape[0]):
                demand_out[p] = 0.0
            for k in range(K):
                lo = ptr[k]
                n = ptr[k + 1] - lo
                denom = weight[k] * beta[k]
                for p in range(n):
                    e = lo + p
                    metric_out[e] = (beta[k] * psi[edge_cell[e]] + lam[k]) / (denom * edge_sinr[e])
                    x_out[e] = 0.0
                _order(&metric_out[lo], &edge_cell[lo], idx, n)
                g = 1.0 + serving_sinr[k]
                cnt = 0.0
                for q in range(n):
                    e = lo + idx[q]
                    mk = metric_out[e]
                    g_full = g + edge_sinr[e]
                    if 1.0 / g_full > mk:
                        x_out[e] = 1.0
                        g = g_full
                        cnt = cnt + 1.0
                        demand_out[edge_cell[e]] += beta[k]
                    else:
                        y = (1.0 / mk - g) / edge_sinr[e]
                        if y > 1.0:
                            y = 1.0
                        if y < SNAP:
                            y = 0.0
                        x_out[e] = y
                        g = g + edge_sinr[e] * y
                        cnt = cnt + y
                        demand_out[edge_cell[e]] += beta[k] * y
                        break
                g_out[k] = g
                count_out[k] = cnt
    finally:
        free(idx)
