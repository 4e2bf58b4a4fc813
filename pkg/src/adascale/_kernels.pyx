# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: initializedcheck=False
"""Compiled kernel core.

Mirrors `_pykernels` exactly: the reduction tree and the sweep kernels use
the same fixed arithmetic order (compiled with FP contraction off), so the
two cores are bitwise comparable on those routines.  Sweep kernels release
the GIL; the full cascade can run its column loops on an OpenMP gang.
"""

from cython.parallel cimport prange, threadid
from libc.math cimport fabs, isfinite, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

COMPILED = True

# Relative breakdown threshold for 1 + v.y pivot denominators.
DENOM_EPS_REL = 1e-12
cdef double _DENOM_EPS = 1e-12


cdef inline Py_ssize_t _next_pow2(Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t p = 1
    while p < k:
        p <<= 1
    return p


cdef double _tree_dot(const double *u, Py_ssize_t su,
                      const double *v, Py_ssize_t sv,
                      Py_ssize_t n, double *scratch) noexcept nogil:
    """Fixed pairwise-tree inner product; pads to a power of two with zeros."""
    cdef Py_ssize_t half, i
    cdef double hi
    if n == 1:
        return u[0] * v[0]
    half = _next_pow2(n) >> 1
    for i in range(half):
        if i + half < n:
            hi = u[(i + half) * su] * v[(i + half) * sv]
        else:
            hi = 0.0
        scratch[i] = u[i * su] * v[i * sv] + hi
    while half > 1:
        half >>= 1
        for i in range(half):
            scratch[i] = scratch[i] + scratch[i + half]
    return scratch[0]


def dot_tree(double[:] u, double[:] v):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t su = u.strides[0] // sizeof(double)
    cdef Py_ssize_t sv = v.strides[0] // sizeof(double)
    cdef double out
    cdef double *scratch
    if n == 1:
        return u[0] * v[0]
    scratch = <double *> malloc((_next_pow2(n) >> 1) * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            out = _tree_dot(&u[0], su, &v[0], sv, n, scratch)
    finally:
        free(scratch)
    return out


def mat_vec(double[::1, :] a, double[::1] x):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double *scratch = <double *> malloc(max(_next_pow2(n) >> 1, 1) * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                out[i] = _tree_dot(&a[i, 0], m, &x[0], 1, n, scratch)
    finally:
        free(scratch)
    return out_arr


def mat_t_vec(double[::1, :] a, double[::1] y):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j
    cdef double *scratch = <double *> malloc(max(_next_pow2(m) >> 1, 1) * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(n):
                out[j] = _tree_dot(&a[0, j], 1, &y[0], 1, m, scratch)
    finally:
        free(scratch)
    return out_arr


def gram(double[::1, :] a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    g_arr = np.zeros((m, m), dtype=np.float64, order="F")
    cdef double[::1, :] g = g_arr
    cdef Py_ssize_t i, j, k
    cdef double ajk
    with nogil:
        for k in range(n):
            for j in range(m):
                ajk = a[j, k]
                for i in range(j + 1):
                    g[i, j] = g[i, j] + a[i, k] * ajk
        for j in range(m):
            for i in range(j + 1, m):
                g[i, j] = g[j, i]
    return g_arr


def scaled_gram(double[::1, :] a, double[::1] d):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    g_arr = np.zeros((m, m), dtype=np.float64, order="F")
    cdef double[::1, :] g = g_arr
    cdef Py_ssize_t i, j, k
    cdef double w
    with nogil:
        for k in range(n):
            for j in range(m):
                w = a[j, k] * d[k]
                for i in range(j + 1):
                    g[i, j] = g[i, j] + a[i, k] * w
        for j in range(m):
            for i in range(j + 1, m):
                g[i, j] = g[j, i]
    return g_arr


def cholesky_factor(double[::1, :] g, double eps_rel):
    """Column Cholesky; returns (L, fail_index) with fail_index -1 on success."""
    cdef Py_ssize_t nn = g.shape[0]
    low_arr = np.zeros((nn, nn), dtype=np.float64, order="F")
    cdef double[::1, :] low = low_arr
    cdef Py_ssize_t i, j, k
    cdef double dmax = 0.0, eps, s, piv
    cdef Py_ssize_t fail = -1
    with nogil:
        for j in range(nn):
            if g[j, j] > dmax:
                dmax = g[j, j]
        eps = eps_rel * dmax
        for j in range(nn):
            s = g[j, j]
            for k in range(j):
                s -= low[j, k] * low[j, k]
            if not isfinite(s) or s <= eps:
                fail = j
                break
            piv = sqrt(s)
            low[j, j] = piv
            for i in range(j + 1, nn):
                s = g[i, j]
                for k in range(j):
                    s -= low[i, k] * low[j, k]
                low[i, j] = s / piv
    return low_arr, fail


def cholesky_solve_many(double[::1, :] low, double[::1, :] b):
    """Solve (L L^T) X = B column by column."""
    x_arr = np.array(b, dtype=np.float64, order="F", copy=True)
    cdef double[::1, :] x = x_arr
    cdef Py_ssize_t m = low.shape[0], ncols = x.shape[1]
    cdef Py_ssize_t c, i, j
    cdef double s
    with nogil:
        for c in range(ncols):
            for i in range(m):
                s = x[i, c]
                for j in range(i):
                    s -= low[i, j] * x[j, c]
                x[i, c] = s / low[i, i]
            for i in range(m - 1, -1, -1):
                s = x[i, c]
                for j in range(i + 1, m):
                    s -= low[j, i] * x[j, c]
                x[i, c] = s / low[i, i]
    return x_arr


def build_v(double[::1, :] a, Py_ssize_t l0, double dl, double[::1] v):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t i
    cdef double f = dl - 1.0
    with nogil:
        for i in range(m):
            v[i] = a[i, l0] * f


def sweep_phase1(double[::1, :] cols, double[::1] v, double[::1] inner,
                 Py_ssize_t k0, Py_ssize_t k1):
    """inner[k] = dot_tree(v, cols[:, k]) for k in [k0, k1)."""
    cdef Py_ssize_t m = cols.shape[0]
    cdef Py_ssize_t k
    cdef double *scratch = <double *> malloc(max(_next_pow2(m) >> 1, 1) * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(k0, k1):
                inner[k] = _tree_dot(&v[0], 1, &cols[0, k], 1, m, scratch)
    finally:
        free(scratch)


def sweep_phase2(double[::1, :] cols, Py_ssize_t l0, double[::1] inner,
                 double denom, Py_ssize_t k0, Py_ssize_t k1):
    """cols[:, k] -= (inner[k]/denom) * cols[:, l0]; caller keeps k0 > l0."""
    cdef Py_ssize_t m = cols.shape[0]
    cdef Py_ssize_t i, k
    cdef double f
    with nogil:
        for k in range(k0, k1):
            f = inner[k] / denom
            for i in range(m):
                cols[i, k] = cols[i, k] - f * cols[i, l0]


cdef int _cascade(double[::1, :] cols, double[::1, :] a, double[::1] d,
                  double[::1] inner, double[::1] v,
                  int nt, double *scratch, Py_ssize_t half) noexcept nogil:
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t l0, i, k
    cdef double dl, f, g, denom
    for l0 in range(n):
        dl = d[l0]
        if dl == 1.0:
            continue
        f = dl - 1.0
        for i in range(m):
            v[i] = a[i, l0] * f
        if nt == 1:
            for k in range(l0, n + 1):
                inner[k] = _tree_dot(&v[0], 1, &cols[0, k], 1, m, scratch)
        else:
            for k in prange(l0, n + 1, num_threads=nt, schedule="static"):
                inner[k] = _tree_dot(&v[0], 1, &cols[0, k], 1, m,
                                     scratch + threadid() * half)
        denom = 1.0 + inner[l0]
        if fabs(denom) <= _DENOM_EPS * (1.0 + fabs(inner[l0])):
            return <int> (l0 + 1)
        if nt == 1:
            for k in range(l0 + 1, n + 1):
                g = inner[k] / denom
                for i in range(m):
                    cols[i, k] = cols[i, k] - g * cols[i, l0]
        else:
            for k in prange(l0 + 1, n + 1, num_threads=nt, schedule="static"):
                g = inner[k] / denom
                for i in range(m):
                    cols[i, k] = cols[i, k] - g * cols[i, l0]
    return 0


def solve_sweeps(double[::1, :] cols, double[::1, :] a, double[::1] d,
                 double[::1] inner, double[::1] v, int workers):
    """Run the full rank-one cascade in place.

    Returns 0 on success or the 1-based step of a denominator breakdown.
    With workers > 1 the per-column loops run on an OpenMP gang; results
    are bitwise identical for every worker count because column work is
    independent and each column's arithmetic order is fixed.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef int nt = workers if workers > 1 else 1
    cdef Py_ssize_t half = max(_next_pow2(m) >> 1, 1)
    cdef int fail
    cdef double *scratch = <double *> malloc(nt * half * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            fail = _cascade(cols, a, d, inner, v, nt, scratch, half)
    finally:
        free(scratch)
    return fail
