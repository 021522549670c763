"""Persistent homology over Z/2 by boundary-matrix column reduction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .complex import Filtration
from .errors import ValidationError

__all__ = [
    "PersistencePair",
    "PersistenceDiagram",
    "reduce",
    "h0_union_find",
    "betti_at",
]


@dataclass(frozen=True)
class PersistencePair:
    """A homology class born at ``birth`` and killed at ``death`` (``inf`` if never).

    ``birth_simplex`` / ``death_simplex`` are positions in the filtration.
    """

    dim: int
    birth: float
    death: float
    birth_simplex: int | None = None
    death_simplex: int | None = None

    @property
    def is_essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    pairs: tuple
    max_dim: int
    filtration_max: float
    stats: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        ordered = sorted(self.pairs, key=lambda p: (p.dim, p.birth, p.death,
                                                    -1 if p.birth_simplex is None else p.birth_simplex))
        object.__setattr__(self, "pairs", tuple(ordered))

    def in_dim(self, k: int) -> list[PersistencePair]:
        return [p for p in self.pairs if p.dim == k]

    def finite(self, k: int) -> np.ndarray:
        """(m, 2) array of finite (birth, death) points in dimension ``k``."""
        pts = [(p.birth, p.death) for p in self.pairs if p.dim == k and not p.is_essential]
        return np.array(pts, dtype=float).reshape(-1, 2)

    def essential(self, k: int) -> np.ndarray:
        return np.array([p.birth for p in self.pairs if p.dim == k and p.is_essential], dtype=float)

    def to_dict(self) -> dict:
        return {
            "max_dim": self.max_dim,
            "filtration_max": self.filtration_max,
            "pairs": [
                {"dim": p.dim, "birth": p.birth, "death": None if p.is_essential else p.death}
                for p in self.pairs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "PersistenceDiagram":
        pairs = tuple(
            PersistencePair(int(p["dim"]), float(p["birth"]),
                            math.inf if p.get("death") is None else float(p["death"]))
            for p in obj["pairs"]
        )
        return cls(pairs, int(obj["max_dim"]), float(obj.get("filtration_max", math.inf)))


def _homology_dim(f: Filtration, max_dim):
    if max_dim is None:
        max_dim = max(f.skeleton_dim - 1, 0)
    if not 0 <= max_dim <= max(f.skeleton_dim, 0):
        raise ValidationError(f"homology dimension {max_dim} needs a {max_dim + 1}-skeleton")
    return max_dim


def _vertex_rank(f: Filtration) -> np.ndarray:
    rank = np.zeros(f.n_vertices, dtype=np.int64)
    pos = np.flatnonzero(f.dims == 0)
    rank[f.vertices[pos, 0]] = pos
    return rank


def _union_find_deaths(f: Filtration, backend):
    edges = np.flatnonzero(f.dims == 1)
    eu = np.ascontiguousarray(f.vertices[edges, 0])
    ev = np.ascontiguousarray(f.vertices[edges, 1])
    rank = _vertex_rank(f)
    dying = backend.h0_union_find(f.n_vertices, eu, ev, rank)
    return edges, rank[dying[dying >= 0]], edges[dying >= 0]


def reduce(f: Filtration, max_dim: int | None = None, *, keep_zero: bool = False,
           clearing: bool = True, fast_h0: bool = False, backend: str | None = None,
           check: bool = True) -> PersistenceDiagram:
    """Persistence pairs of ``f`` in dimensions ``0..max_dim``.

    Columns are reduced from the top dimension down so that pivot rows can be
    cleared; ``clearing=False`` gives the textbook left-to-right reduction
    with identical output. With ``fast_h0`` the dimension-0 pairs come from
    union-find instead of reducing edge columns.
    """
    k_max = _homology_dim(f, max_dim)
    if check:
        f.check()
    impl = kernels.get_backend(backend) if backend else kernels
    top = min(k_max + 1, f.max_dim)
    indptr, indices = f.boundary()
    dims, values = f.dims, f.values
    low = np.full(len(f), -1, dtype=np.int64)
    n_add = 0
    min_dim = 2 if fast_h0 else 1
    if top >= min_dim:
        low, n_add = impl.reduce_columns(indptr, indices, dims, top, clearing, min_dim)
    births = low[low >= 0]
    deaths = np.flatnonzero(low >= 0)
    if fast_h0:
        _, h0_births, h0_deaths = _union_find_deaths(f, impl)
        births = np.concatenate([h0_births, births])
        deaths = np.concatenate([h0_deaths, deaths])

    pairs = []
    paired = np.zeros(len(f), dtype=bool)
    paired[births] = True
    paired[deaths] = True
    for b, d in zip(births.tolist(), deaths.tolist()):
        k = int(dims[b])
        if k > k_max:
            continue
        if values[d] == values[b] and not keep_zero:
            continue
        pairs.append(PersistencePair(k, float(values[b]), float(values[d]), b, d))
    for s in np.flatnonzero(~paired & (dims <= k_max)).tolist():
        pairs.append(PersistencePair(int(dims[s]), float(values[s]), math.inf, s, None))
    stats = {"n_simplices": len(f), "column_additions": int(n_add)}
    return PersistenceDiagram(tuple(pairs), k_max, f.max_value, stats)


def h0_union_find(f: Filtration, *, keep_zero: bool = False, backend: str | None = None) -> list[PersistencePair]:
    """Dimension-0 pairs by the elder rule.

    When an edge joins two components the one whose oldest vertex comes
    later in the filtration dies at the edge's value.
    """
    impl = kernels.get_backend(backend) if backend else kernels
    _, births, deaths = _union_find_deaths(f, impl)
    values = f.values
    pairs = [
        PersistencePair(0, float(values[b]), float(values[d]), int(b), int(d))
        for b, d in zip(births.tolist(), deaths.tolist())
        if keep_zero or values[d] != values[b]
    ]
    killed = set(births.tolist())
    for s in np.flatnonzero(f.dims == 0).tolist():
        if s not in killed:
            pairs.append(PersistencePair(0, float(values[s]), math.inf, s, None))
    return sorted(pairs, key=lambda p: (p.birth, p.death, p.birth_simplex))


def betti_at(dgm: PersistenceDiagram, eps: float, k: int) -> int:
    """Number of dimension-``k`` classes alive at scale ``eps`` (birth <= eps < death)."""
    if not 0 <= k <= dgm.max_dim:
        raise ValidationError(f"dimension {k} outside 0..{dgm.max_dim}")
    return sum(1 for p in dgm.pairs if p.dim == k and p.birth <= eps < p.death)
