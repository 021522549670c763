"""CSV loading, pipeline configuration and the run manifest."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, ParseError, ValidationError

__all__ = [
    "TimeSeries",
    "PipelineConfig",
    "RunManifest",
    "load_csv",
    "write_csv",
    "load_config",
    "dump_config",
    "validate_config",
    "parse_config_value",
    "config_keys",
]


@dataclass(frozen=True)
class TimeSeries:
    """A labelled, strictly ordered sequence of finite observations.

    Timestamps are kept for reporting only; every downstream computation is
    index-based.
    """

    id: str
    timestamps: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.timestamps):
            raise ValidationError(
                f"series {self.id!r}: {len(self.values)} values for {len(self.timestamps)} timestamps"
            )
        if len(self.values) < 2:
            raise ValidationError(f"series {self.id!r} has fewer than 2 observations")
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError(f"series {self.id!r} contains non-finite values")
        keys = [_ts_key(t) for t in self.timestamps]
        for i in range(1, len(keys)):
            if keys[i] == keys[i - 1]:
                raise ValidationError(f"series {self.id!r}: duplicate timestamp {self.timestamps[i]!r}")
            if keys[i] < keys[i - 1]:
                raise ValidationError(f"series {self.id!r}: timestamps not increasing at {self.timestamps[i]!r}")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)


def _parse_timestamp(raw: str, where: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        datetime.fromisoformat(raw)
    except ValueError:
        raise ParseError(f"{where}: timestamp {raw!r} is neither an integer index nor ISO-8601") from None
    return raw


def _ts_key(t):
    if isinstance(t, (int, np.integer)):
        return (0, int(t), None)
    return (1, 0, datetime.fromisoformat(str(t)))


def _parse_value(raw: str, where: str) -> float:
    text = raw.strip()
    if text == "":
        raise ParseError(f"{where}: blank cell (missing values are not imputed)")
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{where}: cannot parse {raw!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(f"{where}: non-finite value {raw!r}")
    return value


def load_csv(path, layout: str = "wide") -> list[TimeSeries]:
    """Read time series from a CSV file.

    ``wide``: the first column holds timestamps, every further column is one
    series named by its header.  ``long``: columns ``id, timestamp, value``;
    rows may come in any order and are sorted by timestamp within each id.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file, header row required")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if layout == "wide":
        return _load_wide(path, header, body)
    if layout == "long":
        return _load_long(path, header, body)
    raise ConfigError(f"unknown CSV layout {layout!r}")


def _load_wide(path, header, body):
    if len(header) < 2:
        raise ParseError(f"{path}: wide layout needs a timestamp column and at least one series")
    if len(set(header[1:])) != len(header) - 1:
        raise ParseError(f"{path}: duplicate series names in header")
    stamps, columns = [], [[] for _ in header[1:]]
    for r, row in enumerate(body, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        stamps.append(_parse_timestamp(row[0], f"{path}: row {r}, column {header[0]!r}"))
        for c, cell in enumerate(row[1:]):
            columns[c].append(_parse_value(cell, f"{path}: row {r}, column {header[c + 1]!r}"))
    if not stamps:
        raise ValidationError(f"{path}: no data rows")
    return [TimeSeries(name, stamps, col) for name, col in zip(header[1:], columns)]


def _load_long(path, header, body):
    if [h.lower() for h in header[:3]] != ["id", "timestamp", "value"] or len(header) != 3:
        raise ParseError(f"{path}: long layout header must be id,timestamp,value")
    grouped: dict[str, list] = {}
    for r, row in enumerate(body, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"{path}: row {r} has {len(row)} cells, expected 3")
        sid = row[0].strip()
        if not sid:
            raise ParseError(f"{path}: row {r}, column 'id': blank id")
        ts = _parse_timestamp(row[1], f"{path}: row {r}, column 'timestamp'")
        val = _parse_value(row[2], f"{path}: row {r}, column 'value'")
        grouped.setdefault(sid, []).append((ts, val))
    if not grouped:
        raise ValidationError(f"{path}: no data rows")
    out = []
    for sid, items in grouped.items():
        items.sort(key=lambda tv: _ts_key(tv[0]))
        out.append(TimeSeries(sid, [t for t, _ in items], [v for _, v in items]))
    return out


def write_csv(series: Sequence[TimeSeries], path, layout: str = "wide") -> None:
    """Inverse of :func:`load_csv`. Wide layout requires shared timestamps."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if layout == "wide":
            stamps = series[0].timestamps
            if any(s.timestamps != stamps for s in series):
                raise ValidationError("wide layout requires identical timestamps across series")
            w.writerow(["t"] + [s.id for s in series])
            for i, t in enumerate(stamps):
                w.writerow([t] + [repr(s.values[i]) for s in series])
        elif layout == "long":
            w.writerow(["id", "timestamp", "value"])
            for s in series:
                for t, v in zip(s.timestamps, s.values):
                    w.writerow([s.id, t, repr(v)])
        else:
            raise ConfigError(f"unknown CSV layout {layout!r}")


_METRICS = ("euclidean", "correlation", "cosine", "dtw", "sax-paa")
_POINT_CLOUDS = ("auto", "series", "delay", "rows")


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative pipeline settings; one config-file key per field."""

    data: str = ""
    layout: str = "wide"
    transform: str = "none"  # none | log_returns
    normalize: str = "series"  # none | series | window
    metric: str = "euclidean"
    point_cloud: str = "auto"
    complex: str = "rips"
    max_homology_dim: int = 1
    window_length: int = 12
    stride: int = 1
    embedding_dim: int = 1
    embedding_delay: int = 1
    embedding_select: str = "off"  # off | per_series | panel
    fnn_m_max: int = 8
    fnn_tau_max: int = 4
    fnn_rtol: float = 10.0
    dtw_band: int | None = None
    sax_segments: int = 8
    sax_alphabet: int = 7
    esax_order: str = "min-mean-max"
    filtration_max: float | str = "auto"
    keep_zero_persistence: bool = False
    tsi_dims: tuple = (0, 1)
    tsi_epsilon: float = 1e-9
    landscape_k: int = 3
    grid_n: int = 50
    n_clusters: int = 2
    linkage: str = "average"
    kmeans_restarts: int = 10
    mds_dims: int = 2
    cluster_max_points: int = 60
    rng_seed: int = 0
    threads: int = 0
    interpretation: str = "H0 lifetimes read as cluster separation; H1 as cyclic co-movement; TSI as lifetime dispersion"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tsi_dims"] = list(self.tsi_dims)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}
_INT_KEYS = {
    "max_homology_dim", "window_length", "stride", "embedding_dim", "embedding_delay",
    "fnn_m_max", "fnn_tau_max", "sax_segments", "sax_alphabet", "landscape_k", "grid_n",
    "n_clusters", "kmeans_restarts", "mds_dims", "cluster_max_points", "rng_seed", "threads",
}
_FLOAT_KEYS = {"fnn_rtol", "tsi_epsilon"}


def config_keys() -> list[str]:
    return list(_FIELDS)


def parse_config_value(key: str, raw: str) -> Any:
    """Convert the textual form of ``key`` to its typed value."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key == "dtw_band":
            return None if text.lower() in ("", "none") else int(text)
        if key == "filtration_max":
            return "auto" if text.lower() == "auto" else float(text)
        if key == "keep_zero_persistence":
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if key == "tsi_dims":
            return tuple(sorted({int(p) for p in text.replace(" ", "").split(",") if p}))
    except ValueError:
        raise ConfigError(f"config key {key!r}: invalid value {raw!r}") from None
    return text


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Parse a flat ``key = value`` file (``#`` starts a comment).

    A relative ``data`` path is resolved against the config file's directory.
    ``overrides`` maps keys to raw strings and wins over the file.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, Any] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = parse_config_value(key, raw)
    for key, raw in (overrides or {}).items():
        values[key] = parse_config_value(key, raw) if isinstance(raw, str) else raw
    if values.get("data") and not os.path.isabs(values["data"]):
        values["data"] = str((path.parent / values["data"]).resolve())
    return PipelineConfig(**values)


def dump_config(cfg: PipelineConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key} must be one of {', '.join(allowed)}; got {value!r}")


def validate_config(cfg: PipelineConfig, series: Sequence[TimeSeries] = ()) -> PipelineConfig:
    """Check every config invariant and resolve ``point_cloud = auto``.

    ``filtration_max = auto`` stays symbolic here: it resolves per window to
    the largest pairwise distance, and the realised range goes to the manifest.
    """
    _choice("metric", cfg.metric, _METRICS)
    _choice("complex", cfg.complex, ("rips",))
    _choice("layout", cfg.layout, ("wide", "long"))
    _choice("transform", cfg.transform, ("none", "log_returns"))
    _choice("normalize", cfg.normalize, ("none", "series", "window"))
    _choice("point_cloud", cfg.point_cloud, _POINT_CLOUDS)
    _choice("embedding_select", cfg.embedding_select, ("off", "per_series", "panel"))
    _choice("esax_order", cfg.esax_order, ("min-mean-max", "max-min-mean"))
    _choice("linkage", cfg.linkage, ("single", "complete", "average"))
    if cfg.max_homology_dim not in (0, 1, 2):
        raise ConfigError("max_homology_dim must be 0, 1 or 2")
    for key in ("window_length", "stride", "embedding_dim", "embedding_delay", "sax_segments",
                "fnn_m_max", "fnn_tau_max", "landscape_k", "n_clusters", "kmeans_restarts",
                "mds_dims", "cluster_max_points"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be a positive integer")
    if cfg.grid_n < 2:
        raise ConfigError("grid_n must be at least 2")
    if cfg.threads < 0 or cfg.rng_seed < 0:
        raise ConfigError("threads and rng_seed must be non-negative")
    if not 2 <= cfg.sax_alphabet <= 20:
        raise ConfigError("sax_alphabet must lie in [2, 20]")
    if not (cfg.tsi_epsilon > 0):
        raise ConfigError("tsi_epsilon must be positive")
    if cfg.fnn_rtol <= 0:
        raise ConfigError("fnn_rtol must be positive")
    if cfg.filtration_max != "auto" and not (isinstance(cfg.filtration_max, float) and cfg.filtration_max > 0):
        raise ConfigError("filtration_max must be a positive real or 'auto'")
    if cfg.dtw_band is not None and cfg.dtw_band < 1:
        raise ConfigError("dtw_band must be >= 1")
    if not cfg.tsi_dims or any(k < 0 or k > cfg.max_homology_dim for k in cfg.tsi_dims):
        raise ConfigError("tsi_dims must be a non-empty subset of the computed homology dimensions")
    if cfg.stride > cfg.window_length:
        raise ConfigError(f"stride {cfg.stride} exceeds window_length {cfg.window_length}")

    point_cloud = cfg.point_cloud
    if point_cloud == "auto":
        point_cloud = "delay" if cfg.metric in ("euclidean", "cosine") else "series"
    if point_cloud in ("delay", "rows") and cfg.metric not in ("euclidean", "cosine"):
        raise ConfigError(f"metric {cfg.metric!r} compares whole series; use point_cloud = series")
    if point_cloud == "delay" and cfg.embedding_select == "off":
        span = cfg.embedding_dim * cfg.embedding_delay
        if span > cfg.window_length:
            raise ConfigError(
                f"embedding_dim*embedding_delay = {span} exceeds window_length {cfg.window_length}"
            )
    if cfg.metric == "sax-paa" and cfg.sax_segments > cfg.window_length:
        raise ConfigError("sax_segments exceeds window_length")

    if series:
        n = min(len(s) for s in series) - (1 if cfg.transform == "log_returns" else 0)
        if cfg.window_length > n:
            raise ConfigError(f"window_length {cfg.window_length} exceeds usable series length {n}")
        if point_cloud == "series" and len(series) < 2:
            raise ConfigError("point_cloud = series needs at least two series")
        if point_cloud in ("series", "rows"):
            stamps = series[0].timestamps
            if any(s.timestamps != stamps for s in series):
                raise ConfigError("panel point clouds need all series on identical timestamps")
    return dataclasses.replace(cfg, point_cloud=point_cloud)


_MANIFEST_FIELDS = (
    "data_descriptor",
    "preprocessing_steps",
    "metric",
    "complex_type",
    "filtration_range",
    "homology_dims",
    "software_version",
    "summary_stats",
    "interpretation_framework",
    "validation_notes",
)


@dataclass
class RunManifest:
    """One field per reporting-checklist row; ``run_info`` holds volatile data."""

    data_descriptor: dict = field(default_factory=dict)
    preprocessing_steps: list = field(default_factory=list)
    metric: dict = field(default_factory=dict)
    complex_type: str = ""
    filtration_range: dict = field(default_factory=dict)
    homology_dims: list = field(default_factory=list)
    software_version: dict = field(default_factory=dict)
    summary_stats: dict = field(default_factory=dict)
    interpretation_framework: str = ""
    validation_notes: list = field(default_factory=list)
    run_info: dict = field(default_factory=dict)

    def missing_fields(self) -> list[str]:
        out = []
        for name in _MANIFEST_FIELDS:
            value = getattr(self, name)
            if value is None or (hasattr(value, "__len__") and len(value) == 0):
                out.append(name)
        return out

    def to_json(self) -> str:
        missing = self.missing_fields()
        if missing:
            raise ValidationError(f"manifest incomplete: {', '.join(missing)}")
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"
