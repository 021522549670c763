"""Deterministic synthetic datasets for tests and demos."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .ingest import TimeSeries

__all__ = ["KINDS", "DEFAULTS", "synth", "regime_shift_values"]

DEFAULTS = {
    "circle": {"n": 20, "radius": 1.0, "noise": 0.0},
    "two_clusters": {"n_per_cluster": 2, "separation": 10.0, "spread": 0.1, "noise": 0.0},
    "regime_shift": {"period": 12, "n_uniform": 4, "n_hetero": 6, "n_series": 4,
                     "growth": 0.5, "noise": 0.0},
    "noisy_sine": {"n": 200, "period": 20.0, "noise": 0.1, "n_series": 1},
}
KINDS = tuple(DEFAULTS)


def _params(kind, params):
    if kind not in DEFAULTS:
        raise ValidationError(f"unknown synthetic kind {kind!r}; choose from {', '.join(KINDS)}")
    merged = dict(DEFAULTS[kind])
    for key, value in (params or {}).items():
        if key not in merged:
            raise ValidationError(f"{kind}: unknown parameter {key!r}")
        merged[key] = type(merged[key])(value)
    return merged


def regime_shift_values(period: int, n_uniform: int, n_hetero: int, growth: float,
                        reverse: bool = False) -> np.ndarray:
    """Sawtooth whose per-period spacing turns from uniform to alternating.

    Every period-aligned window of a uniform period holds equally spaced
    values; heterogeneous period ``s`` alternates gaps ``1`` and
    ``1 + growth * s``, so lifetime dispersion grows with ``s``.
    """
    if period < 3 or n_uniform < 1 or n_hetero < 1 or growth <= 0:
        raise ValidationError("regime_shift needs period >= 3, n_uniform, n_hetero >= 1, growth > 0")
    blocks = [np.arange(period, dtype=float) for _ in range(n_uniform)]
    for s in range(1, n_hetero + 1):
        gaps = np.where(np.arange(period - 1) % 2 == 0, 1.0, 1.0 + growth * s)
        blocks.append(np.concatenate([[0.0], np.cumsum(gaps)]))
    if reverse:
        blocks = blocks[::-1]
    return np.concatenate(blocks)


def synth(kind: str, params: dict | None = None, seed: int = 0) -> list[TimeSeries]:
    """Generate ``kind`` as a list of series sharing integer timestamps.

    Point-cloud kinds (circle, two_clusters) put one coordinate per column
    and one point per row.
    """
    p = _params(kind, params)
    rng = np.random.default_rng(seed)
    if kind == "circle":
        n = int(p["n"])
        if n < 3:
            raise ValidationError("circle needs n >= 3")
        t = 2 * np.pi * np.arange(n) / n
        xy = p["radius"] * np.column_stack([np.cos(t), np.sin(t)])
        if p["noise"] > 0:
            xy = xy + rng.normal(0, p["noise"], xy.shape)
        cols = {"x": xy[:, 0], "y": xy[:, 1]}
    elif kind == "two_clusters":
        m = int(p["n_per_cluster"])
        if m < 1:
            raise ValidationError("two_clusters needs n_per_cluster >= 1")
        offsets = np.arange(m) * p["spread"] / max(m - 1, 1) if m > 1 else np.zeros(1)
        x = np.concatenate([offsets, p["separation"] + offsets])
        if p["noise"] > 0:
            x = x + rng.normal(0, p["noise"], x.shape)
        cols = {"x": x}
    elif kind == "regime_shift":
        cols = {}
        for j in range(int(p["n_series"])):
            growth = p["growth"] * (1.0 + 0.5 * (j // 2))
            v = regime_shift_values(int(p["period"]), int(p["n_uniform"]), int(p["n_hetero"]),
                                    growth, reverse=bool(j % 2))
            v = v * (1.0 + 0.5 * j)
            if p["noise"] > 0:
                v = v + rng.normal(0, p["noise"], v.shape)
            cols[f"s{j}"] = v
    else:
        n = int(p["n"])
        t = np.arange(n)
        cols = {}
        for j in range(int(p["n_series"])):
            phase = 2 * np.pi * j / max(int(p["n_series"]), 1)
            cols[f"s{j}"] = np.sin(2 * np.pi * t / p["period"] + phase) + rng.normal(0, p["noise"], n)
    length = len(next(iter(cols.values())))
    stamps = list(range(length))
    return [TimeSeries(name, stamps, vals) for name, vals in cols.items()]
