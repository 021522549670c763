"""Vietoris-Rips filtrations and a small Cech oracle for the inclusion check."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvariantError, ScaleError, ValidationError
from .metrics import DistanceMatrix, euclidean_matrix
from .preprocess import PointCloud

__all__ = [
    "FiltrationSimplex",
    "Filtration",
    "rips_filtration",
    "cech_value",
    "verify_inclusion",
]

CECH_MAX_POINTS = 12


@dataclass(frozen=True)
class FiltrationSimplex:
    vertices: tuple
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class Filtration:
    """Simplices in (value, dim, lexicographic vertices) order.

    Stored column-wise: ``dims``, ``values`` and ``vertices`` (rows padded
    with -1 past ``dim + 1`` entries).
    """

    def __init__(self, dims, values, vertices, n_vertices: int, max_value: float,
                 check: bool = True, skeleton_dim: int | None = None):
        self.dims = np.asarray(dims, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.n_vertices = int(n_vertices)
        self.max_value = float(max_value)
        self._boundary = None
        self.skeleton_dim = self.max_dim if skeleton_dim is None else int(skeleton_dim)
        if check:
            self.check()

    @property
    def max_dim(self) -> int:
        return int(self.dims.max()) if len(self.dims) else 0

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        for k, val, row in zip(self.dims, self.values, self.vertices):
            yield FiltrationSimplex(tuple(int(v) for v in row[:k + 1]), float(val))

    @property
    def simplices(self) -> list[FiltrationSimplex]:
        return list(self)

    def counts(self) -> dict[int, int]:
        ks, cs = np.unique(self.dims, return_counts=True)
        return {int(k): int(c) for k, c in zip(ks, cs)}

    def boundary(self):
        """CSR boundary matrix: column j lists face positions in ascending order."""
        if self._boundary is None:
            self._boundary = _boundary(self)
        return self._boundary

    def check(self) -> None:
        """Raise :class:`InvariantError` unless order and face monotonicity hold."""
        m = len(self)
        if m == 0:
            return
        v0 = self.dims == 0
        if np.any(self.values[v0] != 0):
            raise InvariantError("vertices must enter at value 0")
        keys = _sort_keys(self.dims, self.values, self.vertices)
        order = np.lexsort(keys)
        if np.any(order != np.arange(m)):
            raise InvariantError("simplices are not in (value, dim, vertices) order")
        for k in range(1, self.max_dim + 1):
            rows = self.vertices[self.dims == k, :k + 1]
            if rows.size and np.any(np.diff(rows, axis=1) <= 0):
                raise InvariantError("simplex vertices must be strictly increasing")
        indptr, indices = self.boundary()
        owner = np.repeat(np.arange(m), np.diff(indptr))
        bad = (indices >= owner) | (self.values[indices] > self.values[owner])
        if np.any(bad):
            raise InvariantError(f"face order violated at simplex {int(owner[np.argmax(bad)])}")

    def truncate(self, value: float) -> "Filtration":
        keep = self.values <= value
        return Filtration(self.dims[keep], self.values[keep], self.vertices[keep],
                          self.n_vertices, value, check=False, skeleton_dim=self.skeleton_dim)

    def dump(self) -> str:
        """Debug listing: one ``value dim v0 v1 ...`` line per simplex."""
        lines = []
        for s in self:
            lines.append(" ".join([repr(s.value), str(s.dim)] + [str(v) for v in s.vertices]))
        return "\n".join(lines) + ("\n" if lines else "")


def _sort_keys(dims, values, vertices):
    # np.lexsort sorts by the last key first
    return tuple(vertices[:, c] for c in range(vertices.shape[1] - 1, -1, -1)) + (dims, values)


def _encode(rows: np.ndarray, n: int) -> np.ndarray:
    key = np.zeros(len(rows), dtype=np.int64)
    for c in range(rows.shape[1]):
        key = key * n + rows[:, c]
    return key


def _boundary(f: Filtration):
    m = len(f)
    n = max(f.n_vertices, 1)
    indptr = np.zeros(m + 1, dtype=np.int64)
    counts = np.where(f.dims > 0, f.dims + 1, 0)
    indptr[1:] = np.cumsum(counts)
    indices = np.zeros(indptr[-1], dtype=np.int64)
    pos = np.arange(m)
    lookup = {}
    for k in range(0, f.max_dim + 1):
        sel = np.flatnonzero(f.dims == k)
        keys = _encode(f.vertices[sel, :k + 1], n)
        order = np.argsort(keys)
        lookup[k] = (keys[order], pos[sel][order])
    for k in range(1, f.max_dim + 1):
        sel = np.flatnonzero(f.dims == k)
        if sel.size == 0:
            continue
        rows = f.vertices[sel, :k + 1]
        sorted_keys, positions = lookup[k - 1]
        faces = np.empty((sel.size, k + 1), dtype=np.int64)
        for drop in range(k + 1):
            face_rows = np.delete(rows, drop, axis=1)
            fk = _encode(face_rows, n)
            at = np.searchsorted(sorted_keys, fk)
            if np.any(at >= sorted_keys.size) or np.any(sorted_keys[np.minimum(at, sorted_keys.size - 1)] != fk):
                raise InvariantError(f"a face of a {k}-simplex is missing from the filtration")
            faces[:, drop] = positions[at]
        faces.sort(axis=1)
        for row, j in zip(faces, sel):
            indices[indptr[j]:indptr[j + 1]] = row
    return indptr, indices


def _resolve_max(dm: DistanceMatrix, max_value) -> float:
    if max_value is None or max_value == "auto":
        return dm.max_entry()
    max_value = float(max_value)
    if not max_value > 0:
        raise ConfigError("filtration max_value must be positive")
    return max_value


def rips_filtration(dm: DistanceMatrix, max_dim: int = 2, max_value="auto") -> Filtration:
    """Clique filtration of the ``d <= max_value`` neighbourhood graph.

    A k-simplex enters at the largest of its edge lengths. ``max_value``
    ``"auto"`` takes the largest matrix entry, so the complex ends connected.
    """
    if max_dim not in (1, 2, 3):
        raise ConfigError(f"Rips max_dim must be 1, 2 or 3; got {max_dim}")
    cap = _resolve_max(dm, max_value)
    n = dm.n
    d = dm.d
    dims = [np.zeros(n, dtype=np.int64)]
    values = [np.zeros(n)]
    verts = [np.column_stack([np.arange(n)] + [np.full(n, -1)] * max_dim)]
    adj = d <= cap
    for k in range(1, max_dim + 1):
        if n < k + 1:
            break
        combos = np.array(list(itertools.combinations(range(n), k + 1)), dtype=np.int64)
        ok = np.ones(len(combos), dtype=bool)
        val = np.zeros(len(combos))
        for a, b in itertools.combinations(range(k + 1), 2):
            ok &= adj[combos[:, a], combos[:, b]]
            val = np.maximum(val, d[combos[:, a], combos[:, b]])
        combos, val = combos[ok], val[ok]
        if combos.size == 0:
            break
        pad = np.full((len(combos), max_dim - k), -1, dtype=np.int64)
        dims.append(np.full(len(combos), k, dtype=np.int64))
        values.append(val)
        verts.append(np.hstack([combos, pad]))
    dims = np.concatenate(dims)
    values = np.concatenate(values)
    verts = np.vstack(verts)
    order = np.lexsort(_sort_keys(dims, values, verts))
    return Filtration(dims[order], values[order], verts[order], n, cap, check=False, skeleton_dim=max_dim)


def cech_value(points) -> float:
    """Scale (ball diameter) at which at most three points gain a common Cech simplex.

    Equals twice the radius of the minimum enclosing ball: the longest side
    for right, obtuse or degenerate triangles, the circumdiameter otherwise.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    k = len(pts)
    if k == 0:
        raise ValidationError("need at least one point")
    if k > 3:
        raise ScaleError("the Cech oracle supports at most 3 points (dimension <= 2)")
    if k == 1:
        return 0.0
    if k == 2:
        return float(np.linalg.norm(pts[0] - pts[1]))
    sides = sorted(float(np.linalg.norm(pts[i] - pts[j])) for i, j in ((0, 1), (0, 2), (1, 2)))
    a, b, c = sides
    # right or obtuse: the longest side is a diameter of the enclosing ball
    if a * a + b * b <= c * c:
        return c
    s = 0.5 * (a + b + c)
    area = math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    return a * b * c / (2.0 * area)


def verify_inclusion(cloud, eps: float) -> bool:
    """Check that every Cech simplex (dim <= 2) at scale ``eps`` is in Rips at ``2 eps``."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n > CECH_MAX_POINTS:
        raise ScaleError(f"inclusion check limited to {CECH_MAX_POINTS} points, got {n}")
    if eps < 0:
        raise ValidationError("scale must be non-negative")
    dm = euclidean_matrix(pts)
    if n == 0:
        return True
    cap = 2 * eps if eps > 0 else np.nextafter(0.0, 1.0)
    present = {s.vertices for s in rips_filtration(dm, 2, cap)}
    for k in (1, 2, 3):
        for simplex in itertools.combinations(range(n), k):
            if cech_value(pts[list(simplex)]) <= eps and simplex not in present:
                return False
    return True
