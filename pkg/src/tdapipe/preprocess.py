"""Normalisation, returns, sliding windows, delay embedding and FNN selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .ingest import TimeSeries

__all__ = [
    "WindowSet",
    "PointCloud",
    "DEGENERATE_STD",
    "z_normalize",
    "log_returns",
    "sliding_windows",
    "delay_embed",
    "fnn_ratio",
    "select_embedding",
    "select_embedding_panel",
]

DEGENERATE_STD = 1e-12
NN_TIE_RTOL = 1e-9  # relative slack under which two neighbour distances count as tied

_PROVENANCE = ("raw_features", "window_embedding", "delay_embedding", "mds_embedding")


@dataclass(frozen=True)
class WindowSet:
    source_id: str
    windows: np.ndarray  # (count, length)
    start_indices: np.ndarray

    def __len__(self) -> int:
        return len(self.start_indices)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """``n`` points in ``R^d`` with a tag saying how they were produced."""

    points: np.ndarray
    provenance: str = "raw_features"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValidationError("point cloud must be an (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("point cloud contains non-finite coordinates")
        if self.provenance not in _PROVENANCE:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValidationError("expected a one-dimensional vector")
    return arr


def z_normalize(v) -> np.ndarray:
    """Zero mean, unit population std. Near-constant input maps to zeros."""
    x = _vector(v)
    if x.size < 2:
        raise ValidationError("z-normalisation needs at least 2 values")
    mu = x.mean()
    sd = x.std()
    if sd < DEGENERATE_STD:
        return np.zeros_like(x)
    return (x - mu) / sd


def log_returns(prices) -> np.ndarray:
    p = _vector(prices)
    if np.any(p <= 0):
        raise ValidationError("log returns need strictly positive prices")
    return np.diff(np.log(p))


def sliding_windows(s, length: int, stride: int = 1) -> WindowSet:
    """Contiguous windows of ``length`` samples whose starts advance by ``stride``."""
    if isinstance(s, TimeSeries):
        sid, x = s.id, s.array
    else:
        sid, x = "", _vector(s)
    n = x.size
    if length < 1 or stride < 1:
        raise ValidationError("window length and stride must be positive")
    if length > n:
        raise ValidationError(f"window length {length} exceeds series length {n}")
    starts = np.arange(0, n - length + 1, stride)
    windows = np.stack([x[s0:s0 + length] for s0 in starts])
    return WindowSet(sid, windows, starts)


def delay_embed(v, m: int, tau: int) -> PointCloud:
    x = _vector(v)
    if m < 1 or tau < 1:
        raise ValidationError("embedding dimension and delay must be positive")
    count = x.size - (m - 1) * tau
    if count < 1:
        raise ValidationError(f"series of length {x.size} too short for m={m}, tau={tau}")
    idx = np.arange(count)[:, None] + tau * np.arange(m)[None, :]
    return PointCloud(x[idx], "delay_embedding")


def fnn_ratio(v, m: int, tau: int, r_tol: float = 10.0) -> float:
    """Share of false nearest neighbours when lifting an embedding from m to m+1.

    Kennel's ratio test: the neighbour is false when the added coordinate
    separates the pair by more than ``r_tol`` times their distance in ``m``
    dimensions. Only points that exist in both embeddings take part.
    Distances within a relative ``NN_TIE_RTOL`` of the nearest count as
    ties, and ties go to the lowest index, so round-off cannot flip the choice.
    """
    x = _vector(v)
    count = x.size - m * tau
    if count < 2:
        raise ValidationError(f"fewer than 2 points in the (m+1)-embedding for m={m}, tau={tau}")
    if x.std() < DEGENERATE_STD:
        return 0.0
    pts = delay_embed(x, m, tau).points[:count]
    extra = x[m * tau: m * tau + count]
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    dmin = d2.min(axis=1, keepdims=True)
    nn = np.argmax(d2 <= dmin * (1 + NN_TIE_RTOL) ** 2, axis=1)  # argmax returns the first True
    dist = np.sqrt(d2[np.arange(count), nn])
    gap = np.abs(extra - extra[nn])
    with np.errstate(divide="ignore", invalid="ignore"):
        false = np.where(dist > 0, gap > r_tol * dist, gap > 0)
    return float(false.mean())


def _grid(x, m_max, tau_max, r_tol):
    if m_max < 1 or tau_max < 1:
        raise ValidationError("m_max and tau_max must be at least 1")
    ratios = np.full((m_max, tau_max), np.nan)
    for m in range(1, m_max + 1):
        for tau in range(1, tau_max + 1):
            if x.size - m * tau >= 2:
                ratios[m - 1, tau - 1] = fnn_ratio(x, m, tau, r_tol)
    return ratios


def _argmin_grid(ratios) -> tuple[int, int]:
    if np.all(np.isnan(ratios)):
        raise ValidationError("no feasible (m, tau) in the search grid")
    best = np.nanmin(ratios)
    # row-major scan gives the smaller m first, then the smaller tau
    m_idx, tau_idx = np.argwhere(ratios == best)[0]
    return int(m_idx) + 1, int(tau_idx) + 1


def select_embedding(v, m_max: int, tau_max: int, r_tol: float = 10.0) -> tuple[int, int]:
    """Grid argmin of :func:`fnn_ratio`; ties prefer smaller m, then smaller tau."""
    x = _vector(v)
    if m_max < 1 or tau_max < 1:
        raise ValidationError("m_max and tau_max must be at least 1")
    if x.size >= 2 and x.std() < DEGENERATE_STD:
        return 1, 1
    return _argmin_grid(_grid(x, m_max, tau_max, r_tol))


def select_embedding_panel(series: Sequence, m_max: int, tau_max: int,
                           r_tol: float = 10.0) -> tuple[int, int]:
    """Same grid search on the FNN ratio averaged across a panel of series."""
    grids = [_grid(_vector(v), m_max, tau_max, r_tol) for v in series]
    if not grids:
        raise ValidationError("empty panel")
    return _argmin_grid(np.mean(grids, axis=0))
