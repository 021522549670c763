"""Diagram summaries, diagram distances and the topological stability index."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ConfigError, ScaleError, ValidationError
from .persistence import PersistenceDiagram, betti_at

__all__ = [
    "Landscape",
    "BettiCurve",
    "LifetimeSet",
    "TsiSeries",
    "EmptyLifetimesWarning",
    "BOTTLENECK_CAP",
    "WASSERSTEIN_CAP",
    "lifetimes",
    "total_persistence",
    "lifetime_stats",
    "tsi",
    "ntsi",
    "landscape",
    "betti_curve",
    "bottleneck",
    "wasserstein",
    "rolling_tsi",
    "indicator_records",
]

BOTTLENECK_CAP = 64
WASSERSTEIN_CAP = 256


class EmptyLifetimesWarning(UserWarning):
    """No finite pair in the requested dimensions; statistics defaulted to 0."""


@dataclass(frozen=True, eq=False)
class Landscape:
    k_max: int
    grid: np.ndarray
    values: np.ndarray  # (k_max, len(grid))


@dataclass(frozen=True, eq=False)
class BettiCurve:
    dim: int
    grid: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True, eq=False)
class LifetimeSet:
    lifetimes: np.ndarray
    window_id: object = None


@dataclass(frozen=True, eq=False)
class TsiSeries:
    window_ids: tuple
    tsi: np.ndarray
    ntsi: np.ndarray
    tp: np.ndarray  # pooled total persistence per window
    tp_by_dim: tuple  # one {dim: TP} dict per window
    epsilon: float
    dims: tuple = (0, 1)

    def __len__(self):
        return len(self.window_ids)


def _check_dim(dgm: PersistenceDiagram, k: int):
    if not 0 <= k <= dgm.max_dim:
        raise ValidationError(f"dimension {k} outside 0..{dgm.max_dim}")


def lifetimes(dgm: PersistenceDiagram, dims: Iterable[int] = (0, 1), window_id=None) -> LifetimeSet:
    """Pooled finite lifetimes; essential classes are left out."""
    dims = sorted(set(dims))
    for k in dims:
        _check_dim(dgm, k)
    vals = [p.death - p.birth for p in dgm.pairs
            if p.dim in dims and not p.is_essential and p.death > p.birth]
    return LifetimeSet(np.array(vals, dtype=float), window_id)


def total_persistence(dgm: PersistenceDiagram, k: int) -> float:
    _check_dim(dgm, k)
    return float(sum(p.death - p.birth for p in dgm.pairs if p.dim == k and not p.is_essential))


def lifetime_stats(dgm: PersistenceDiagram, dims: Iterable[int] = (0, 1)) -> tuple[float, float]:
    """Population variance and Shannon entropy of normalised finite lifetimes."""
    ell = lifetimes(dgm, dims).lifetimes
    if ell.size == 0:
        warnings.warn("no finite persistence pairs; variance and entropy set to 0",
                      EmptyLifetimesWarning, stacklevel=2)
        return 0.0, 0.0
    p = ell / ell.sum()
    entropy = float(-(p * np.log(p)).sum())
    return float(ell.var()), max(entropy, 0.0)


def tsi(ls: LifetimeSet) -> float:
    """Population variance of a window's lifetimes (0 for an empty window)."""
    ell = ls.lifetimes if isinstance(ls, LifetimeSet) else np.asarray(ls, dtype=float)
    if ell.size == 0:
        return 0.0
    return float(ell.var())


def ntsi(ls: LifetimeSet, tp: float, eps: float = 1e-9) -> float:
    if not eps > 0:
        raise ConfigError("nTSI epsilon must be positive")
    return tsi(ls) / (tp + eps)


def _grid(dgm: PersistenceDiagram, grid_n: int) -> np.ndarray:
    if grid_n < 2:
        raise ValidationError("grid needs at least 2 points")
    top = dgm.filtration_max
    if not math.isfinite(top):
        finite = [p.death for p in dgm.pairs if not p.is_essential] + [p.birth for p in dgm.pairs]
        top = max(finite, default=1.0)
    return np.linspace(0.0, top, grid_n)


def landscape(dgm: PersistenceDiagram, k: int, k_max: int = 3, grid_n: int = 100) -> Landscape:
    """Sampled landscape functions; essential deaths are cut at ``filtration_max``."""
    _check_dim(dgm, k)
    grid = _grid(dgm, grid_n)
    top = grid[-1]
    pts = [(p.birth, min(p.death, top)) for p in dgm.in_dim(k)]
    values = np.zeros((k_max, grid.size))
    if pts:
        pts = np.array(pts)
        tents = np.maximum(0.0, np.minimum(grid[None, :] - pts[:, :1], pts[:, 1:] - grid[None, :]))
        tents = -np.sort(-tents, axis=0)
        rows = min(k_max, tents.shape[0])
        values[:rows] = tents[:rows]
    return Landscape(k_max, grid, values)


def betti_curve(dgm: PersistenceDiagram, k: int, grid_n: int = 100) -> BettiCurve:
    _check_dim(dgm, k)
    grid = _grid(dgm, grid_n)
    counts = np.array([betti_at(dgm, float(t), k) for t in grid], dtype=np.int64)
    return BettiCurve(k, grid, counts)


def _split(dgm: PersistenceDiagram, k: int):
    _check_dim(dgm, k)
    return dgm.finite(k), np.sort(dgm.essential(k))


def _essential_costs(ea, eb):
    if ea.size != eb.size:
        return None
    return np.abs(ea - eb)  # sorted matching is optimal on the line


def bottleneck(a: PersistenceDiagram, b: PersistenceDiagram, k: int) -> float:
    """Exact bottleneck distance in dimension ``k`` under the L-infinity ground metric.

    Searches the sorted candidate radii with a perfect-matching feasibility
    test on the diagonal-augmented bipartite graph.
    """
    fa, ea = _split(a, k)
    fb, eb = _split(b, k)
    ess = _essential_costs(ea, eb)
    if ess is None:
        return math.inf
    if len(fa) > BOTTLENECK_CAP or len(fb) > BOTTLENECK_CAP:
        raise ScaleError(f"bottleneck solver capped at {BOTTLENECK_CAP} points per diagram; "
                         "use wasserstein for larger diagrams")
    floor = float(ess.max()) if ess.size else 0.0
    na, nb = len(fa), len(fb)
    if na + nb == 0:
        return floor
    cross = np.maximum(np.abs(fa[:, None, 0] - fb[None, :, 0]), np.abs(fa[:, None, 1] - fb[None, :, 1]))
    diag_a = (fa[:, 1] - fa[:, 0]) / 2
    diag_b = (fb[:, 1] - fb[:, 0]) / 2
    candidates = np.unique(np.concatenate([cross.ravel(), diag_a, diag_b, [0.0]]))

    # rows: A points then B's diagonal copies; columns: B points then A's diagonal copies
    def feasible(r):
        adj = np.zeros((na + nb, nb + na), dtype=bool)
        adj[:na, :nb] = cross <= r
        adj[np.arange(na), nb + np.arange(na)] = diag_a <= r
        adj[na + np.arange(nb), np.arange(nb)] = diag_b <= r
        adj[na:, nb:] = True
        match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(candidates[lo]), floor)


def wasserstein(a: PersistenceDiagram, b: PersistenceDiagram, k: int, q: float = 1.0) -> float:
    """q-Wasserstein distance in dimension ``k`` with L-infinity ground metric.

    Solved exactly as a square assignment on the diagonal-augmented cost matrix.
    """
    if not q >= 1:
        raise ConfigError("Wasserstein order q must be >= 1")
    fa, ea = _split(a, k)
    fb, eb = _split(b, k)
    ess = _essential_costs(ea, eb)
    if ess is None:
        return math.inf
    if len(fa) > WASSERSTEIN_CAP or len(fb) > WASSERSTEIN_CAP:
        raise ScaleError(f"Wasserstein solver capped at {WASSERSTEIN_CAP} points per diagram")
    # fixed orientation and an exactly rounded sum keep W(a, b) == W(b, a) bit for bit
    if (len(fb), fb.tobytes()) < (len(fa), fa.tobytes()):
        fa, fb = fb, fa
    parts = (ess ** q).tolist()
    na, nb = len(fa), len(fb)
    if na + nb:
        cross = np.maximum(np.abs(fa[:, None, 0] - fb[None, :, 0]), np.abs(fa[:, None, 1] - fb[None, :, 1]))
        diag_a = (fa[:, 1] - fa[:, 0]) / 2
        diag_b = (fb[:, 1] - fb[:, 0]) / 2
        big = np.inf
        cost = np.zeros((na + nb, nb + na))
        cost[:na, :nb] = cross ** q
        block_a = np.full((na, na), big)
        block_a[np.arange(na), np.arange(na)] = diag_a ** q
        block_b = np.full((nb, nb), big)
        block_b[np.arange(nb), np.arange(nb)] = diag_b ** q
        cost[:na, nb:] = block_a
        cost[na:, :nb] = block_b
        rows, cols = linear_sum_assignment(cost)
        parts.extend(cost[rows, cols].tolist())
    return math.fsum(parts) ** (1.0 / q)


def rolling_tsi(diagrams: Sequence[PersistenceDiagram], dims: Iterable[int] = (0, 1),
                eps: float = 1e-9, window_ids: Sequence | None = None) -> TsiSeries:
    """TSI and nTSI per window from pooled finite lifetimes in ``dims``."""
    if not eps > 0:
        raise ConfigError("nTSI epsilon must be positive")
    dims = tuple(sorted(set(dims)))
    ids = tuple(range(len(diagrams))) if window_ids is None else tuple(window_ids)
    if len(ids) != len(diagrams):
        raise ValidationError("one window id per diagram required")
    t_vals, n_vals, tp_vals, by_dim = [], [], [], []
    for wid, dgm in zip(ids, diagrams):
        ls = lifetimes(dgm, dims, wid)
        tp = float(ls.lifetimes.sum())
        t_vals.append(tsi(ls))
        n_vals.append(ntsi(ls, tp, eps))
        tp_vals.append(tp)
        by_dim.append({k: total_persistence(dgm, k) for k in dims})
    return TsiSeries(ids, np.array(t_vals), np.array(n_vals), np.array(tp_vals),
                     tuple(by_dim), eps, dims)


def indicator_records(series: TsiSeries, diagrams: Sequence[PersistenceDiagram]) -> list[dict]:
    """One JSON-ready indicator object per window."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyLifetimesWarning)
        for i, dgm in enumerate(diagrams):
            var, ent = lifetime_stats(dgm, series.dims)
            out.append({
                "window_id": series.window_ids[i],
                "tsi": float(series.tsi[i]),
                "ntsi": float(series.ntsi[i]),
                "tp": float(series.tp[i]),
                "tp_by_dim": {str(k): v for k, v in series.tp_by_dim[i].items()},
                "variance": var,
                "entropy": ent,
            })
    return out
