# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
# distutils: language = c++
"""Compiled hot loops: Z/2 column reduction, DTW dynamic programme, H0 union-find.

Signatures and results are identical to ``tdapipe._pykernels``.
"""

from libcpp.vector cimport vector
from libc.math cimport fabs, INFINITY

import numpy as np

ctypedef long long i64


cdef void _xor_into(vector[i64]& a, vector[i64]& b, vector[i64]& tmp) noexcept nogil:
    cdef size_t i = 0
    cdef size_t j = 0
    tmp.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            tmp.push_back(a[i])
            i += 1
        elif a[i] > b[j]:
            tmp.push_back(b[j])
            j += 1
        else:
            i += 1
            j += 1
    while i < a.size():
        tmp.push_back(a[i])
        i += 1
    while j < b.size():
        tmp.push_back(b[j])
        j += 1
    a.swap(tmp)


cdef void _reduce_one(Py_ssize_t j, const i64[::1] indptr, const i64[::1] indices,
                      vector[vector[i64]]& cols, vector[i64]& pivot_of,
                      vector[char]& cleared, i64[::1] low, vector[i64]& tmp,
                      i64* n_additions) noexcept nogil:
    cdef i64 p, l, k
    if cleared[j]:
        return
    cols[j].clear()
    for p in range(indptr[j], indptr[j + 1]):
        cols[j].push_back(indices[p])
    while cols[j].size() > 0:
        l = cols[j].back()
        k = pivot_of[l]
        if k < 0:
            break
        _xor_into(cols[j], cols[k], tmp)
        n_additions[0] += 1
    if cols[j].size() > 0:
        l = cols[j].back()
        low[j] = l
        pivot_of[l] = j
        cleared[l] = 1


def reduce_columns(const i64[::1] indptr, const i64[::1] indices, const i64[::1] col_dims,
                   int max_dim, bint clearing=True, int min_dim=1):
    """Return ``(low, n_additions)``; ``low[j]`` is the pivot row of reduced column j or -1.

    Only columns of dimension ``min_dim..max_dim`` are reduced.
    """
    cdef Py_ssize_t m = col_dims.shape[0]
    cdef Py_ssize_t j
    cdef int d
    cdef i64 n_additions = 0
    low_arr = np.full(m, -1, dtype=np.int64)
    cdef i64[::1] low = low_arr
    cdef vector[vector[i64]] cols
    cdef vector[i64] pivot_of
    cdef vector[char] cleared
    cdef vector[i64] tmp
    cols.resize(m)
    pivot_of.assign(m, -1)
    cleared.assign(m, 0)
    with nogil:
        if clearing:
            d = max_dim
            while d >= min_dim:
                for j in range(m):
                    if col_dims[j] == d:
                        _reduce_one(j, indptr, indices, cols, pivot_of, cleared, low, tmp, &n_additions)
                d -= 1
        else:
            for j in range(m):
                if col_dims[j] >= min_dim and col_dims[j] <= max_dim:
                    _reduce_one(j, indptr, indices, cols, pivot_of, cleared, low, tmp, &n_additions)
    return low_arr, int(n_additions)


def dtw(const double[::1] x, const double[::1] y, Py_ssize_t band=-1):
    """Absolute-difference DTW; ``band < 0`` means unconstrained."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = y.shape[0]
    cdef Py_ssize_t i, j, lo, hi, w
    cdef double best, cost
    cdef vector[double] prev
    cdef vector[double] cur
    if n == 0 or m == 0:
        raise ValueError("DTW needs non-empty series")
    w = band
    if w >= 0 and w < (n - m if n > m else m - n):
        w = n - m if n > m else m - n
    prev.assign(m + 1, INFINITY)
    cur.assign(m + 1, INFINITY)
    prev[0] = 0.0
    with nogil:
        for i in range(1, n + 1):
            for j in range(m + 1):
                cur[j] = INFINITY
            lo = 1
            hi = m
            if w >= 0:
                if i - w > lo:
                    lo = i - w
                if i + w < hi:
                    hi = i + w
            for j in range(lo, hi + 1):
                cost = fabs(x[i - 1] - y[j - 1])
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = cost + best
            prev.swap(cur)
    return prev[m]


cdef i64 _find(vector[i64]& parent, i64 x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def h0_union_find(Py_ssize_t n, const i64[::1] eu, const i64[::1] ev, const i64[::1] vertex_rank):
    """Elder-rule merges over edges given in filtration order.

    Returns, per edge, the oldest vertex of the component that dies there,
    or -1 when the edge closes a cycle. Age is by ``vertex_rank`` (lower = older).
    """
    cdef Py_ssize_t e, n_edges = eu.shape[0]
    cdef i64 ru, rv, young, old
    cdef vector[i64] parent
    cdef vector[i64] oldest
    out_arr = np.full(n_edges, -1, dtype=np.int64)
    cdef i64[::1] out = out_arr
    parent.resize(n)
    oldest.resize(n)
    for e in range(n):
        parent[e] = e
        oldest[e] = e
    with nogil:
        for e in range(n_edges):
            ru = _find(parent, eu[e])
            rv = _find(parent, ev[e])
            if ru == rv:
                continue
            if vertex_rank[oldest[ru]] < vertex_rank[oldest[rv]]:
                old = ru
                young = rv
            else:
                old = rv
                young = ru
            out[e] = oldest[young]
            parent[young] = old
    return out_arr
