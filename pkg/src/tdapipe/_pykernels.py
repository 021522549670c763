"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def reduce_columns(indptr, indices, col_dims, max_dim, clearing=True, min_dim=1):
    """Return ``(low, n_additions)``; ``low[j]`` is the pivot row of reduced column j or -1.

    Only columns of dimension ``min_dim..max_dim`` are reduced.
    """
    indptr = [int(p) for p in indptr]
    indices = [int(i) for i in indices]
    col_dims = [int(d) for d in col_dims]
    m = len(col_dims)
    low = np.full(m, -1, dtype=np.int64)
    cols = {}
    pivot_of = {}
    cleared = set()
    additions = 0

    def reduce_one(j):
        nonlocal additions
        if j in cleared:
            return
        col = set(indices[indptr[j]:indptr[j + 1]])
        while col:
            pivot = max(col)
            k = pivot_of.get(pivot)
            if k is None:
                break
            col ^= cols[k]
            additions += 1
        if col:
            pivot = max(col)
            low[j] = pivot
            pivot_of[pivot] = j
            cols[j] = col
            cleared.add(pivot)

    if clearing:
        for d in range(max_dim, min_dim - 1, -1):
            for j in range(m):
                if col_dims[j] == d:
                    reduce_one(j)
    else:
        for j in range(m):
            if min_dim <= col_dims[j] <= max_dim:
                reduce_one(j)
    return low, additions


def dtw(x, y, band=-1):
    """Absolute-difference DTW; ``band < 0`` means unconstrained."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise ValueError("DTW needs non-empty series")
    w = band
    if 0 <= w < abs(n - m):
        w = abs(n - m)
    inf = float("inf")
    prev = [0.0] + [inf] * m
    for i in range(1, n + 1):
        cur = [inf] * (m + 1)
        lo, hi = 1, m
        if w >= 0:
            lo, hi = max(lo, i - w), min(hi, i + w)
        xi = x[i - 1]
        for j in range(lo, hi + 1):
            cur[j] = abs(xi - y[j - 1]) + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def h0_union_find(n, eu, ev, vertex_rank):
    """Elder-rule merges over edges given in filtration order.

    Returns, per edge, the oldest vertex of the component that dies there,
    or -1 when the edge closes a cycle. Age is by ``vertex_rank`` (lower = older).
    """
    parent = list(range(n))
    oldest = list(range(n))
    out = np.full(len(eu), -1, dtype=np.int64)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e, (u, v) in enumerate(zip(eu, ev)):
        ru, rv = find(int(u)), find(int(v))
        if ru == rv:
            continue
        if vertex_rank[oldest[ru]] < vertex_rank[oldest[rv]]:
            old, young = ru, rv
        else:
            old, young = rv, ru
        out[e] = oldest[young]
        parent[young] = old
    return out
