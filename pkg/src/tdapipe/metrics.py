"""Pairwise dissimilarity matrices under the supported metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateInputError, ValidationError
from .preprocess import DEGENERATE_STD, PointCloud
from .symbolic import PaaVector

__all__ = [
    "DistanceMatrix",
    "euclidean_matrix",
    "correlation_matrix",
    "cosine_matrix",
    "dtw_distance",
    "dtw_matrix",
    "matrix_from_paa",
    "perturb",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, zero-diagonal, non-negative matrix with point labels.

    ``is_true_metric`` is False only for DTW, which can break the triangle
    inequality.
    """

    labels: tuple
    d: np.ndarray
    metric_name: str
    is_true_metric: bool = True

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        n = len(self.labels)
        if d.shape != (n, n):
            raise ValidationError(f"matrix shape {d.shape} does not match {n} labels")
        if not np.all(np.isfinite(d)):
            raise ValidationError("distance matrix has non-finite entries")
        if np.any(d < 0):
            raise ValidationError("distance matrix has negative entries")
        if np.any(np.diag(d) != 0):
            raise ValidationError("distance matrix diagonal must be zero")
        if n and np.max(np.abs(d - d.T)) > _SYM_TOL:
            raise ValidationError("distance matrix is not symmetric")
        if not self.is_true_metric and self.metric_name != "dtw":
            raise ValidationError("only DTW matrices may be flagged as pseudo-metrics")
        d = 0.5 * (d + d.T)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "labels", tuple(str(lab) for lab in self.labels))

    @property
    def n(self) -> int:
        return len(self.labels)

    def max_entry(self) -> float:
        return float(self.d.max()) if self.n else 0.0

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "rows": self.d.tolist(), "metric_name": self.metric_name}

    @classmethod
    def from_dict(cls, obj: dict) -> "DistanceMatrix":
        name = obj["metric_name"]
        return cls(tuple(obj["labels"]), np.array(obj["rows"], dtype=float), name, name != "dtw")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + list(self.labels))
        for lab, row in zip(self.labels, self.d):
            w.writerow([lab] + [repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metric_name: str) -> "DistanceMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        labels = rows[0][1:]
        d = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        return cls(tuple(labels), d, metric_name, metric_name != "dtw")


def _labels(labels, n):
    if labels is None:
        return tuple(str(i) for i in range(n))
    if len(labels) != n:
        raise ValidationError(f"{len(labels)} labels for {n} items")
    return tuple(labels)


def _points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    try:
        pts = np.asarray(cloud, dtype=float)
    except ValueError:
        raise ValidationError("points have inconsistent dimensions") from None
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValidationError("points have inconsistent dimensions")
    return pts


def _finish(d: np.ndarray) -> np.ndarray:
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return np.clip(d, 0.0, None)


def euclidean_matrix(cloud, labels=None) -> DistanceMatrix:
    pts = _points(cloud)
    if pts.shape[0] < 1:
        raise ValidationError("need at least one point")
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    return DistanceMatrix(_labels(labels, len(pts)), _finish(d), "euclidean")


def correlation_matrix(series: Sequence, labels=None) -> DistanceMatrix:
    """``sqrt(2 (1 - rho))`` with Pearson rho clamped to [-1, 1]."""
    try:
        x = np.asarray([np.asarray(s, dtype=float) for s in series])
    except ValueError:
        raise ValidationError("correlation needs equal-length vectors") from None
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValidationError("correlation needs equal-length vectors of length >= 2")
    labs = _labels(labels, x.shape[0])
    centred = x - x.mean(axis=1, keepdims=True)
    sd = np.sqrt((centred ** 2).mean(axis=1))
    for lab, s in zip(labs, sd):
        if s < DEGENERATE_STD:
            raise DegenerateInputError(f"series {lab!r} is constant; correlation undefined")
    z = centred / sd[:, None]
    rho = np.clip(z @ z.T / x.shape[1], -1.0, 1.0)
    return DistanceMatrix(labs, _finish(np.sqrt(2.0 * (1.0 - rho))), "correlation")


def cosine_matrix(cloud, labels=None) -> DistanceMatrix:
    pts = _points(cloud)
    norms = np.linalg.norm(pts, axis=1)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise DegenerateInputError(f"zero vector at index {int(bad[0])}; cosine undefined")
    u = pts / norms[:, None]
    cos = np.clip(u @ u.T, -1.0, 1.0)
    return DistanceMatrix(_labels(labels, len(pts)), _finish(1.0 - cos), "cosine")


def dtw_distance(x, y, band: int | None = None) -> float:
    """Sum of |x_i - y_j| along the cheapest warping path.

    ``band`` is a Sakoe-Chiba radius; it is widened to the length difference
    so the end cell stays reachable.
    """
    if band is not None and band < 1:
        raise ValidationError("DTW band must be >= 1")
    xa = np.ascontiguousarray(x, dtype=float)
    ya = np.ascontiguousarray(y, dtype=float)
    if xa.size == 0 or ya.size == 0:
        raise ValidationError("DTW needs non-empty series")
    return float(kernels.dtw(xa, ya, -1 if band is None else int(band)))


def dtw_matrix(series: Sequence, band: int | None = None, labels=None) -> DistanceMatrix:
    if band is not None and band < 1:
        raise ValidationError("DTW band must be >= 1")
    arrs = [np.ascontiguousarray(s, dtype=float) for s in series]
    if any(a.size == 0 for a in arrs):
        raise ValidationError("DTW needs non-empty series")
    n = len(arrs)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = dtw_distance(arrs[i], arrs[j], band)
    return DistanceMatrix(_labels(labels, n), d, "dtw", is_true_metric=False)


def matrix_from_paa(paas: Sequence, labels=None) -> DistanceMatrix:
    vecs = [p.values if isinstance(p, PaaVector) else np.asarray(p, dtype=float) for p in paas]
    if len({v.shape for v in vecs}) > 1:
        raise ValidationError("PAA vectors differ in length")
    dm = euclidean_matrix(np.stack(vecs), labels)
    return DistanceMatrix(dm.labels, dm.d, "sax-paa")


def perturb(dm: DistanceMatrix, delta: float, seed: int = 0) -> DistanceMatrix:
    """Shift each off-diagonal pair by U[-delta, delta], clamp at 0, keep symmetry."""
    if delta < 0:
        raise ValidationError("perturbation size must be non-negative")
    n = dm.n
    rng = np.random.default_rng(seed)
    noise = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    noise[iu] = rng.uniform(-delta, delta, size=len(iu[0]))
    noise = noise + noise.T
    d = np.clip(dm.d + noise, 0.0, None)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(dm.labels, d, dm.metric_name, dm.is_true_metric)
