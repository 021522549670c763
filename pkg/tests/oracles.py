"""Independent reference implementations used only by the tests.

None of these import the code paths they check: boundaries are rebuilt
from vertex tuples, matchings are enumerated, DTW paths are enumerated,
breakpoints come from the standard library.
"""

import itertools
import math
from statistics import NormalDist

import numpy as np


def naive_pairing(simplices):
    """Textbook left-to-right Z/2 reduction on a dense matrix.

    ``simplices``: list of vertex tuples in filtration order. Returns
    (set of (birth_index, death_index), set of essential indices).
    """
    index = {s: i for i, s in enumerate(simplices)}
    m = len(simplices)
    mat = np.zeros((m, m), dtype=np.uint8)
    for j, s in enumerate(simplices):
        if len(s) > 1:
            for drop in range(len(s)):
                mat[index[s[:drop] + s[drop + 1:]], j] = 1

    def low(col):
        nz = np.flatnonzero(col)
        return int(nz[-1]) if nz.size else -1

    lows = [-1] * m
    owner = {}
    for j in range(m):
        col = mat[:, j]
        lj = low(col)
        while lj >= 0 and lj in owner:
            col ^= mat[:, owner[lj]]
            lj = low(col)
        lows[j] = lj
        if lj >= 0:
            owner[lj] = j
    pairs = {(lows[j], j) for j in range(m) if lows[j] >= 0}
    paired = {i for p in pairs for i in p}
    essential = {i for i in range(m) if i not in paired}
    return pairs, essential


def clique_simplices(d, max_value, max_dim):
    """All simplices of the Rips complex from pairwise checks, with values."""
    n = len(d)
    out = []
    for k in range(1, max_dim + 2):
        for combo in itertools.combinations(range(n), k):
            edges = [d[a][b] for a, b in itertools.combinations(combo, 2)]
            if all(e <= max_value for e in edges):
                out.append((combo, max(edges) if edges else 0.0))
    return out


def _l_inf(p, q):
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def _diag(p):
    return (p[1] - p[0]) / 2


def matching_costs(a, b):
    """Yield the cost list of every partial matching between point lists a and b."""
    nb = len(b)

    def rec(i, used):
        if i == len(a):
            yield [_diag(b[j]) for j in range(nb) if j not in used]
            return
        for rest in rec(i + 1, used):
            yield [_diag(a[i])] + rest
        for j in range(nb):
            if j not in used:
                for rest in rec(i + 1, used | {j}):
                    yield [_l_inf(a[i], b[j])] + rest

    yield from rec(0, frozenset())


def brute_bottleneck(a, b):
    return min((max(c) if c else 0.0) for c in matching_costs(a, b))


def brute_wasserstein(a, b, q=1.0):
    return min(sum(x ** q for x in c) for c in matching_costs(a, b)) ** (1.0 / q)


def brute_dtw(x, y):
    """Minimum over all monotone warping paths, enumerated explicitly."""
    n, m = len(x), len(y)
    best = math.inf

    def walk(i, j, acc):
        nonlocal best
        acc += abs(x[i] - y[j])
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            return
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best


def stdlib_breakpoints(a):
    nd = NormalDist()
    return [nd.inv_cdf(i / a) for i in range(1, a)]


def scan_symbol(value, breakpoints):
    return sum(1 for b in breakpoints if b <= value)


def repeat_paa(x, w):
    """PAA by repeating each sample w times and averaging blocks of len(x)."""
    n = len(x)
    rep = np.repeat(np.asarray(x, dtype=float), w)
    return rep.reshape(w, n).mean(axis=1)


def meb_diameter_grid(points, steps=401):
    """Twice the minimum enclosing-ball radius of planar points by grid search."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(hi - lo) or 1.0
    center = (lo + hi) / 2
    best = math.inf
    for scale in (span, span / 20, span / 400):
        xs = np.linspace(center[0] - scale, center[0] + scale, steps)
        ys = np.linspace(center[1] - scale, center[1] + scale, steps)
        gx, gy = np.meshgrid(xs, ys)
        radius = np.max(np.hypot(gx[..., None] - pts[:, 0], gy[..., None] - pts[:, 1]), axis=-1)
        k = np.unravel_index(np.argmin(radius), radius.shape)
        if radius[k] < best:
            best = radius[k]
            center = np.array([gx[k], gy[k]])
    return 2 * best


def naive_linkage_heights(d, linkage):
    """Agglomeration recomputing cluster distances from member sets."""
    n = len(d)
    clusters = {i: [i] for i in range(n)}
    nxt = n
    heights = []

    def dist(p, q):
        vals = [d[i][j] for i in p for j in q]
        if linkage == "single":
            return min(vals)
        if linkage == "complete":
            return max(vals)
        return sum(vals) / len(vals)

    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            h = dist(clusters[a], clusters[b])
            if best is None or (h, (a, b)) < (best[0], best[1]):
                best = (h, (a, b))
        h, (a, b) = best
        clusters[nxt] = clusters.pop(a) + clusters.pop(b)
        nxt += 1
        heights.append(h)
    return heights


def fnn_bruteforce(v, m, tau, r_tol, tie_rtol=1e-9):
    """Loop-based Kennel false-nearest-neighbour share; near-equal distances tie to the lowest index."""
    v = list(map(float, v))
    count = len(v) - m * tau
    pts = [[v[i + k * tau] for k in range(m)] for i in range(count)]
    false = 0
    for i in range(count):
        dists = [math.inf if j == i else math.sqrt(sum((pts[i][k] - pts[j][k]) ** 2 for k in range(m)))
                 for j in range(count)]
        best = min(dists)
        nn = next(j for j, dd in enumerate(dists) if dd <= best * (1 + tie_rtol))
        near = dists[nn]
        gap = abs(v[i + m * tau] - v[nn + m * tau])
        if (near > 0 and gap > r_tol * near) or (near == 0 and gap > 0):
            false += 1
    return false / count


def mp_davies_bouldin(x, labels, digits=40):
    """Davies-Bouldin index evaluated in mpmath at `digits` significant digits."""
    import mpmath as mp

    with mp.workdps(digits):
        pts = [[mp.mpf(float(v)) for v in row] for row in x]
        groups = {}
        for p, lab in zip(pts, labels):
            groups.setdefault(int(lab), []).append(p)
        keys = sorted(groups)
        dims = range(len(pts[0]))
        cent = {c: [mp.fsum(p[d] for p in g) / len(g) for d in dims] for c, g in groups.items()}

        def dist(a, b):
            return mp.sqrt(mp.fsum((a[d] - b[d]) ** 2 for d in dims))

        spread = {c: mp.fsum(dist(p, cent[c]) for p in groups[c]) / len(groups[c]) for c in keys}
        worst = [max((spread[i] + spread[j]) / dist(cent[i], cent[j]) for j in keys if j != i) for i in keys]
        return float(mp.fsum(worst) / len(keys))
