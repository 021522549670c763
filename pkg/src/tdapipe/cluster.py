"""Hierarchical clustering, classical MDS, k-means and internal validity indices."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ValidationError
from .metrics import DistanceMatrix
from .preprocess import PointCloud

__all__ = [
    "Dendrogram",
    "ClusterAssignment",
    "ValidityReport",
    "MdsResult",
    "hierarchical",
    "cut",
    "classical_mds",
    "kmeans",
    "silhouette",
    "davies_bouldin",
    "calinski_harabasz",
    "validity_report",
]

LINKAGES = ("single", "complete", "average")


@dataclass(frozen=True)
class Dendrogram:
    """``merges[i] = (left, right, height, new_id)``; leaves are 0..n-1, new ids start at n."""

    merges: tuple
    linkage: str
    labels: tuple = ()

    @property
    def n_leaves(self) -> int:
        return len(self.merges) + 1

    def heights(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def to_dict(self) -> dict:
        return {
            "linkage": self.linkage,
            "labels": list(self.labels),
            "merges": [{"left": l, "right": r, "height": h, "id": i} for l, r, h, i in self.merges],
        }


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float | None = None

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or np.any(lab < 0) or np.any(lab >= self.k):
            raise ValidationError("cluster labels must lie in [0, K)")
        if len(np.unique(lab)) != self.k:
            raise ValidationError("every cluster must be non-empty")
        object.__setattr__(self, "labels", lab)

    def to_csv(self, ids) -> str:
        lines = ["id,cluster"] + [f"{i},{int(c)}" for i, c in zip(ids, self.labels)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidityReport:
    silhouette: float
    davies_bouldin: float | None = None
    calinski_harabasz: float | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "davies_bouldin": self.davies_bouldin,
            "calinski_harabasz": self.calinski_harabasz,
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class MdsResult:
    cloud: PointCloud
    eigenvalues: np.ndarray
    negative_mass: float  # sum of |negative eigenvalues|
    reconstruction_error: float  # max |embedded distance - input distance|
    notes: tuple = field(default=())


def hierarchical(dm: DistanceMatrix, linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering with Lance-Williams distance updates.

    At equal height the pair with the lexicographically smallest
    (min id, max id) merges first.
    """
    if linkage not in LINKAGES:
        raise ValidationError(f"linkage must be one of {LINKAGES}")
    n = dm.n
    if n < 2:
        raise ValidationError("hierarchical clustering needs at least 2 points")
    dist = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(dm.d[i, j])
    size = {i: 1 for i in range(n)}
    merges = []
    next_id = n
    while len(size) > 1:
        (a, b), h = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        new = next_id
        next_id += 1
        for c in size:
            if c in (a, b):
                continue
            da = dist.pop((min(a, c), max(a, c)))
            db = dist.pop((min(b, c), max(b, c)))
            if linkage == "single":
                dn = min(da, db)
            elif linkage == "complete":
                dn = max(da, db)
            else:
                dn = (size[a] * da + size[b] * db) / (size[a] + size[b])
            dist[(c, new)] = dn
        del dist[(a, b)]
        size[new] = size.pop(a) + size.pop(b)
        merges.append((a, b, h, new))
    return Dendrogram(tuple(merges), linkage, dm.labels)


def cut(dend: Dendrogram, k: int) -> ClusterAssignment:
    """Undo the last ``k - 1`` merges; clusters numbered by their smallest leaf."""
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise ValidationError(f"K must lie in [1, {n}]")
    members = {i: [i] for i in range(n)}
    for left, right, _, new in dend.merges[: n - k]:
        members[new] = members.pop(left) + members.pop(right)
    groups = sorted((min(m), m) for m in members.values())
    labels = np.empty(n, dtype=np.int64)
    for c, (_, m) in enumerate(groups):
        labels[m] = c
    return ClusterAssignment(labels, k)


def classical_mds(dm: DistanceMatrix, dims: int = 2) -> MdsResult:
    """Torgerson scaling: eigenvectors of the double-centred squared distances.

    Non-positive eigenvalues are dropped and their magnitude reported. Each
    axis is oriented so its largest-magnitude coordinate is positive.
    """
    n = dm.n
    if not 1 <= dims <= max(n - 1, 1):
        raise ValidationError(f"MDS dimension must lie in [1, {max(n - 1, 1)}]")
    d2 = dm.d ** 2
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ d2 @ j
    b = 0.5 * (b + b.T)
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]
    tol = 1e-10 * max(1.0, float(np.abs(evals).max()) if n else 1.0)
    positive = int(np.sum(evals > tol))
    notes = []
    use = min(dims, positive)
    if use < dims:
        msg = f"only {positive} positive eigenvalues; embedding has {use} dims instead of {dims}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    vecs = evecs[:, :use].copy()
    for c in range(use):
        if vecs[np.argmax(np.abs(vecs[:, c])), c] < 0:
            vecs[:, c] = -vecs[:, c]
    coords = vecs * np.sqrt(evals[:use])
    if use == 0:
        coords = np.zeros((n, 1))
    neg = float(-evals[evals < -tol].sum())
    diff = coords[:, None, :] - coords[None, :, :]
    recon = np.sqrt((diff ** 2).sum(axis=-1))
    err = float(np.abs(recon - dm.d).max()) if n else 0.0
    return MdsResult(PointCloud(coords, "mds_embedding"), evals, neg, err, tuple(notes))


def _coords(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(np.asarray(cloud, dtype=float))


def _relabel(labels: np.ndarray) -> np.ndarray:
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    mapping = np.empty(labels.max() + 1, dtype=np.int64)
    mapping[np.unique(labels)[order]] = np.arange(len(order))
    return mapping[labels]


def _kmeans_once(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float):
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = x[idx]
        closest = np.minimum(closest, ((x - centers[c]) ** 2).sum(axis=1))
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        labels = np.argmin(d2, axis=1)
        new = centers.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new[c] = x[mask].mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(n), labels]))
                new[c] = x[far]
                labels[far] = c
                d2[far] = 0.0
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift < tol:
            break
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(cloud, k: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 300, tol: float = 1e-9) -> ClusterAssignment:
    """k-means++ seeding and Lloyd iterations; best inertia over seeded restarts."""
    x = _coords(cloud)
    n = len(x)
    if not 1 <= k <= n:
        raise ValidationError(f"K={k} must lie in [1, {n}]")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for r, ss in enumerate(streams):
        labels, inertia = _kmeans_once(x, k, np.random.default_rng(ss), max_iter, tol)
        if len(np.unique(labels)) < k:
            continue
        if best is None or (inertia, r) < (best[1], best[2]):
            best = (labels, inertia, r)
    if best is None:
        raise DegenerateInputError(f"fewer than {k} distinct points; cannot form {k} non-empty clusters")
    return ClusterAssignment(_relabel(best[0]), k, best[1])


def _labels(labels) -> np.ndarray:
    return labels.labels if isinstance(labels, ClusterAssignment) else np.asarray(labels, dtype=np.int64)


def silhouette(dm: DistanceMatrix, labels) -> float:
    """Mean silhouette from a distance matrix; singletons and a = b = 0 score 0."""
    lab = _labels(labels)
    if len(lab) != dm.n:
        raise ValidationError("one label per point required")
    ks = np.unique(lab)
    if len(ks) < 2:
        raise ValidationError("silhouette needs at least 2 clusters")
    d = dm.d
    scores = np.zeros(dm.n)
    for i in range(dm.n):
        own = lab == lab[i]
        if own.sum() == 1:
            continue
        a = d[i, own].sum() / (own.sum() - 1)
        b = min(d[i, lab == c].mean() for c in ks if c != lab[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def _centroids(x, lab):
    ks = np.unique(lab)
    return ks, np.stack([x[lab == c].mean(axis=0) for c in ks])


def davies_bouldin(cloud, labels) -> float:
    x = _coords(cloud)
    lab = _labels(labels)
    ks, cents = _centroids(x, lab)
    if len(ks) < 2:
        raise ValidationError("Davies-Bouldin needs at least 2 clusters")
    spread = np.array([np.linalg.norm(x[lab == c] - cents[i], axis=1).mean() for i, c in enumerate(ks)])
    sep = np.linalg.norm(cents[:, None, :] - cents[None, :, :], axis=-1)
    worst = []
    for i in range(len(ks)):
        ratios = []
        for j in range(len(ks)):
            if i == j:
                continue
            if sep[i, j] == 0:
                raise DegenerateInputError(f"clusters {int(ks[i])} and {int(ks[j])} have coincident centroids")
            ratios.append((spread[i] + spread[j]) / sep[i, j])
        worst.append(max(ratios))
    return float(np.mean(worst))


def calinski_harabasz(cloud, labels) -> float:
    """Between/within dispersion ratio; ``inf`` (with a warning) when clusters are points."""
    x = _coords(cloud)
    lab = _labels(labels)
    n = len(x)
    ks, cents = _centroids(x, lab)
    k = len(ks)
    if k < 2 or n <= k:
        raise ValidationError("Calinski-Harabasz needs 2 <= K < n")
    mean = x.mean(axis=0)
    counts = np.array([(lab == c).sum() for c in ks])
    between = float((counts * ((cents - mean) ** 2).sum(axis=1)).sum())
    within = float(sum(((x[lab == c] - cents[i]) ** 2).sum() for i, c in enumerate(ks)))
    if within == 0:
        warnings.warn("zero within-cluster dispersion; Calinski-Harabasz is infinite", stacklevel=2)
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def validity_report(dm: DistanceMatrix, labels, cloud=None) -> ValidityReport:
    """Silhouette from the matrix; DBI and CH only when coordinates exist."""
    lab = _labels(labels)
    sil = silhouette(dm, lab)
    if cloud is None:
        return ValidityReport(sil, None, None, ("no coordinates: DBI and CH not defined",))
    notes = []
    try:
        dbi = davies_bouldin(cloud, lab)
    except DegenerateInputError as exc:
        dbi = None
        notes.append(str(exc))
    if len(lab) > len(np.unique(lab)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ch = calinski_harabasz(cloud, lab)
    else:
        ch = None
        notes.append("K = n: Calinski-Harabasz undefined")
    return ValidityReport(sil, dbi, ch, tuple(notes))


def dendrogram_json(dend: Dendrogram) -> str:
    return json.dumps(dend.to_dict(), sort_keys=True, indent=2) + "\n"
