"""Piecewise aggregate approximation and SAX / eSAX symbolic words."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, ValidationError
from .preprocess import z_normalize

__all__ = [
    "PaaVector",
    "SaxWord",
    "EsaxWord",
    "paa",
    "gaussian_breakpoints",
    "sax",
    "sax_word",
    "esax",
    "symbolic_distance",
]


@dataclass(frozen=True, eq=False)
class PaaVector:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0 or not np.all(np.isfinite(vals)):
            raise ValidationError("PAA vector must be a non-empty finite 1-d array")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class SaxWord:
    symbols: tuple
    alphabet_size: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if any(s < 0 or s >= self.alphabet_size for s in self.symbols):
            raise ValidationError("SAX symbol outside the alphabet")

    def __str__(self):
        return "".join(chr(ord("a") + s) for s in self.symbols)


@dataclass(frozen=True)
class EsaxWord:
    """Per-segment (min, mean, max) symbol triples."""

    triples: tuple
    alphabet_size: int

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(tuple(int(s) for s in t) for t in self.triples))
        for lo, mid, hi in self.triples:
            if not 0 <= lo <= mid <= hi < self.alphabet_size:
                raise ValidationError(f"eSAX triple {(lo, mid, hi)} is not ordered within the alphabet")

    def flatten(self, order: str = "min-mean-max") -> tuple:
        if order == "min-mean-max":
            return tuple(s for t in self.triples for s in t)
        if order == "max-min-mean":
            return tuple(s for lo, mid, hi in self.triples for s in (hi, lo, mid))
        raise ConfigError(f"unknown eSAX flattening order {order!r}")

    def __str__(self):
        return "".join(chr(ord("a") + s) for s in self.flatten())


def _frame_weights(n: int, w: int) -> np.ndarray:
    """(w, n) overlap of frame i = [i*n/w, (i+1)*n/w) with sample k = [k, k+1).

    Computed in units of 1/w so integer arithmetic stays exact.
    """
    bounds = np.arange(w + 1) * n  # frame boundaries scaled by w
    lo = np.arange(n) * w
    hi = lo + w
    start = np.maximum(bounds[:-1, None], lo[None, :])
    stop = np.minimum(bounds[1:, None], hi[None, :])
    return np.clip(stop - start, 0, None).astype(float)


def paa(v, w: int) -> PaaVector:
    """Means over ``w`` equal frames; a sample straddling two frames is split by overlap."""
    x = np.asarray(v, dtype=float)
    n = x.size
    if not 1 <= w <= n:
        raise ValidationError(f"segment count {w} must lie in [1, {n}]")
    if n % w == 0:
        return PaaVector(x.reshape(w, n // w).mean(axis=1))
    weights = _frame_weights(n, w)
    return PaaVector(weights @ x / n)


@lru_cache(maxsize=None)
def _breakpoints(a: int) -> tuple:
    return tuple(float(b) for b in norm.ppf(np.arange(1, a) / a))


def gaussian_breakpoints(a: int) -> np.ndarray:
    """Standard-normal quantiles at i/a, i = 1..a-1."""
    if not 2 <= a <= 20:
        raise ValidationError(f"alphabet size {a} outside [2, 20]")
    return np.array(_breakpoints(a))


def _quantize(x, a: int) -> np.ndarray:
    # side="right" counts breakpoints <= x, sending exact ties to the upper bucket
    return np.searchsorted(gaussian_breakpoints(a), x, side="right")


def sax(p: PaaVector, a: int) -> SaxWord:
    vals = p.values if isinstance(p, PaaVector) else np.asarray(p, dtype=float)
    return SaxWord(tuple(_quantize(vals, a)), a)


def sax_word(v, w: int, a: int) -> SaxWord:
    """z-normalise, reduce with PAA and quantise."""
    return sax(paa(z_normalize(v), w), a)


def _segment_bounds(n: int, w: int) -> list[tuple[int, int]]:
    return [(math.floor(i * n / w), math.ceil((i + 1) * n / w)) for i in range(w)]


def esax(v, w: int, a: int) -> EsaxWord:
    """Quantise per-segment minimum, mean and maximum of an already normalised series.

    Min and max come from every sample that overlaps the frame, so they
    bracket the fractional mean and the symbol order holds.
    """
    x = np.asarray(v, dtype=float)
    means = paa(x, w).values
    lows, highs = [], []
    for lo, hi in _segment_bounds(x.size, w):
        seg = x[lo:hi]
        lows.append(seg.min())
        highs.append(seg.max())
    qs = [_quantize(np.asarray(arr), a) for arr in (lows, means, highs)]
    return EsaxWord(tuple(zip(*qs)), a)


def symbolic_distance(x: PaaVector, y: PaaVector) -> float:
    xv = x.values if isinstance(x, PaaVector) else np.asarray(x, dtype=float)
    yv = y.values if isinstance(y, PaaVector) else np.asarray(y, dtype=float)
    if xv.shape != yv.shape:
        raise ValidationError(f"PAA length mismatch: {xv.size} vs {yv.size}")
    return float(np.linalg.norm(xv - yv))
