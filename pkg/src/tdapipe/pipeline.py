"""End-to-end run: ingest, windows, Rips persistence, indicators, clustering, report."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import platform
import shutil
import tempfile
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels, plotting
from .cluster import (classical_mds, cut, hierarchical, kmeans, validity_report)
from .complex import rips_filtration
from .errors import DegenerateInputError, TdaError, ValidationError
from .ingest import PipelineConfig, RunManifest, dump_config, load_csv, validate_config
from .metrics import (DistanceMatrix, correlation_matrix, cosine_matrix, dtw_matrix,
                      euclidean_matrix, matrix_from_paa, perturb)
from .persistence import PersistenceDiagram, reduce
from .preprocess import (delay_embed, log_returns, select_embedding, select_embedding_panel,
                         sliding_windows, z_normalize)
from .summaries import (BOTTLENECK_CAP, EmptyLifetimesWarning, betti_curve, bottleneck,
                        indicator_records, landscape, lifetime_stats, rolling_tsi, wasserstein)
from .symbolic import esax, paa, sax

__all__ = ["StageError", "RunReport", "WindowResult", "run_pipeline", "config_hash",
           "window_diagrams"]

log = logging.getLogger(__name__)


class StageError(TdaError):
    """Wraps a stage failure; carries the original error's exit code."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error
        self.exit_code = getattr(error, "exit_code", 4)


@dataclass
class WindowResult:
    stream: str
    window_id: int
    start: int
    diagram: PersistenceDiagram
    n_points: int
    filtration_max: float
    n_simplices: int


@dataclass
class RunReport:
    manifest: RunManifest
    run_dir: Path
    diagram_paths: list = field(default_factory=list)
    indicator_paths: list = field(default_factory=list)
    clustering_paths: list = field(default_factory=list)
    plot_paths: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            if isinstance(exc, (TdaError, ValueError)):
                raise StageError(self.name, exc) from exc
        return False


def config_hash(cfg: PipelineConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _file_sha(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _finite(obj):
    # JSON has no infinities; non-finite sentinels become null and are explained in notes
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_finite(obj), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _prepare(series, cfg: PipelineConfig):
    """Apply returns and whole-series normalisation; returns arrays keyed by id."""
    out = {}
    for s in series:
        x = s.array
        if cfg.transform == "log_returns":
            x = log_returns(x)
        if cfg.normalize == "series":
            x = z_normalize(x)
        out[s.id] = x
    return out


def _embedding_params(arrays: dict, cfg: PipelineConfig):
    if cfg.embedding_select == "off":
        return {sid: (cfg.embedding_dim, cfg.embedding_delay) for sid in arrays}, "fixed by config"
    if cfg.embedding_select == "panel":
        m, tau = select_embedding_panel(list(arrays.values()), cfg.fnn_m_max, cfg.fnn_tau_max, cfg.fnn_rtol)
        return {sid: (m, tau) for sid in arrays}, f"FNN panel average (r_tol={cfg.fnn_rtol})"
    chosen = {sid: select_embedding(x, cfg.fnn_m_max, cfg.fnn_tau_max, cfg.fnn_rtol)
              for sid, x in arrays.items()}
    return chosen, f"FNN per series (r_tol={cfg.fnn_rtol})"


def _window_norm(x, cfg):
    return z_normalize(x) if cfg.normalize == "window" else x


def _series_matrix(segments, labels, cfg) -> DistanceMatrix:
    if cfg.metric == "correlation":
        return correlation_matrix(segments, labels)
    if cfg.metric == "dtw":
        return dtw_matrix(segments, cfg.dtw_band, labels)
    if cfg.metric == "sax-paa":
        return matrix_from_paa([paa(z_normalize(s), cfg.sax_segments) for s in segments], labels)
    if cfg.metric == "cosine":
        return cosine_matrix(np.stack(segments), labels)
    return euclidean_matrix(np.stack(segments), labels)


def _cloud_matrix(points, cfg) -> DistanceMatrix:
    if cfg.metric == "cosine":
        return cosine_matrix(points)
    return euclidean_matrix(points)


def _window_jobs(arrays: dict, emb: dict, cfg: PipelineConfig):
    """Yield (stream, window_id, start, matrix-builder) in output order."""
    ids = list(arrays)
    length = min(x.size for x in arrays.values())
    starts = sliding_windows(np.zeros(length), cfg.window_length, cfg.stride).start_indices
    jobs = []
    if cfg.point_cloud == "series":
        for w, s0 in enumerate(starts):
            segs = [_window_norm(arrays[i][s0:s0 + cfg.window_length], cfg) for i in ids]
            jobs.append(("panel", w, int(s0), lambda segs=segs: _series_matrix(segs, ids, cfg)))
    elif cfg.point_cloud == "rows":
        panel = np.column_stack([arrays[i][:length] for i in ids])
        for w, s0 in enumerate(starts):
            pts = panel[s0:s0 + cfg.window_length]
            if cfg.normalize == "window":
                pts = np.column_stack([z_normalize(c) for c in pts.T])
            jobs.append(("rows", w, int(s0), lambda pts=pts: _cloud_matrix(pts, cfg)))
    else:
        for sid in ids:
            m, tau = emb[sid]
            x = arrays[sid]
            sid_starts = sliding_windows(x, cfg.window_length, cfg.stride).start_indices
            for w, s0 in enumerate(sid_starts):
                seg = _window_norm(x[s0:s0 + cfg.window_length], cfg)

                def build(seg=seg, m=m, tau=tau):
                    return _cloud_matrix(delay_embed(seg, m, tau).points, cfg)
                jobs.append((sid, w, int(s0), build))
    return jobs


def _persist(dm: DistanceMatrix, cfg: PipelineConfig) -> tuple[PersistenceDiagram, float, int]:
    f = rips_filtration(dm, cfg.max_homology_dim + 1, cfg.filtration_max)
    dgm = reduce(f, cfg.max_homology_dim, keep_zero=cfg.keep_zero_persistence, fast_h0=True,
                 check=False)
    return dgm, f.max_value, len(f)


def window_diagrams(cfg: PipelineConfig, series, threads: int = 1) -> list[WindowResult]:
    """Per-window diagrams for an already validated config (library entry point)."""
    arrays = _prepare(series, cfg)
    emb, _ = _embedding_params(arrays, cfg)
    return _compute_windows(arrays, emb, cfg, threads)


def _compute_windows(arrays, emb, cfg, threads) -> list[WindowResult]:
    jobs = _window_jobs(arrays, emb, cfg)

    def work(job):
        stream, wid, s0, build = job
        with _Stage("metrics"):
            dm = build()
        dgm, fmax, count = _persist(dm, cfg)
        return WindowResult(stream, wid, s0, dgm, dm.n, fmax, count)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, jobs))
    return [work(j) for j in jobs]


def _subsample(points: np.ndarray, cap: int) -> np.ndarray:
    if len(points) <= cap:
        return points
    idx = np.unique(np.round(np.linspace(0, len(points) - 1, cap)).astype(int))
    return points[idx]


def _diagram_distance(a, b, max_dim) -> float:
    return float(sum(wasserstein(a, b, k, 1.0) for k in range(max_dim + 1)))


def _cluster_space(dm: DistanceMatrix, coords, cfg, space):
    rows = []
    outputs = {}
    dend = hierarchical(dm, cfg.linkage)
    hier = cut(dend, cfg.n_clusters)
    rep = validity_report(dm, hier, coords)
    rows.append({"space": space, "method": "hierarchical", **rep.to_dict()})
    outputs["hierarchical"] = hier
    try:
        km = kmeans(coords, cfg.n_clusters, cfg.rng_seed, cfg.kmeans_restarts)
    except DegenerateInputError as exc:
        rows.append({"space": space, "method": "kmeans", "silhouette": None, "davies_bouldin": None,
                     "calinski_harabasz": None, "notes": [f"k-means not run: {exc}"]})
    else:
        rep = validity_report(dm, km, coords)
        rows.append({"space": space, "method": "kmeans", **rep.to_dict()})
        outputs["kmeans"] = km
    outputs["dendrogram"] = dend
    return rows, outputs


def _clustering(arrays, emb, cfg, out: Path, report: RunReport, manifest_notes: list):
    ids = list(arrays)
    n = len(ids)
    if n < 3 or cfg.n_clusters >= n:
        manifest_notes.append(f"clustering skipped: {n} series for K={cfg.n_clusters} (needs n > K >= 2)")
        return None
    if cfg.n_clusters < 2:
        manifest_notes.append("clustering skipped: n_clusters < 2")
        return None
    cdir = out / "clustering"
    cdir.mkdir(parents=True, exist_ok=True)

    # symbolic feature space: PAA of each z-normalised series
    paas = [paa(z_normalize(arrays[i]), min(cfg.sax_segments, arrays[i].size)) for i in ids]
    sym_dm = matrix_from_paa(paas, ids)
    sym_coords = np.stack([p.values for p in paas])
    words = {}
    for sid, p in zip(ids, paas):
        ew = esax(z_normalize(arrays[sid]), min(cfg.sax_segments, arrays[sid].size), cfg.sax_alphabet)
        flat = ew.flatten(cfg.esax_order)
        words[sid] = {"sax": str(sax(p, cfg.sax_alphabet)),
                      "esax": "".join(chr(ord("a") + s) for s in flat)}
    _dump(cdir / "symbolic_words.json", {"alphabet": cfg.sax_alphabet, "esax_order": cfg.esax_order,
                                         "segments": cfg.sax_segments, "words": words})

    # topological feature space: one diagram per full series, Wasserstein(q=1) between them
    diagrams = []
    for sid in ids:
        m, tau = emb[sid]
        pts = _subsample(delay_embed(arrays[sid], m, tau).points, cfg.cluster_max_points)
        dgm, _, _ = _persist(_cloud_matrix(pts, cfg), dataclasses.replace(cfg, filtration_max="auto"))
        diagrams.append(dgm)
    wd = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            wd[i, j] = wd[j, i] = _diagram_distance(diagrams[i], diagrams[j], cfg.max_homology_dim)
    tda_dm = DistanceMatrix(tuple(ids), wd, "wasserstein")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mds = classical_mds(tda_dm, min(cfg.mds_dims, n - 1))

    table = []
    for space, dm, coords in (("symbolic", sym_dm, sym_coords), ("tda", tda_dm, mds.cloud.points)):
        rows, outputs = _cluster_space(dm, coords, cfg, space)
        table.extend(rows)
        _dump(cdir / f"{space}_dendrogram.json", outputs["dendrogram"].to_dict())
        for method in ("hierarchical", "kmeans"):
            if method not in outputs:
                continue
            path = cdir / f"{space}_{method}_assignment.csv"
            path.write_text(outputs[method].to_csv(ids), encoding="utf-8")
            report.clustering_paths.append(path)
    _dump(cdir / "wasserstein_matrix.json", tda_dm.to_dict())
    (cdir / "wasserstein_matrix.csv").write_text(tda_dm.to_csv(), encoding="utf-8")
    _dump(cdir / "mds.json", {"coordinates": mds.cloud.points.tolist(), "eigenvalues": mds.eigenvalues.tolist(),
                              "negative_eigenvalue_mass": mds.negative_mass,
                              "reconstruction_error": mds.reconstruction_error, "notes": list(mds.notes)})
    _dump(cdir / "validity.json", {"rows": table})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["space", "method", "silhouette", "davies_bouldin", "calinski_harabasz"])
    for r in table:
        w.writerow([r["space"], r["method"]] + ["" if r[k] is None else repr(r[k])
                                                for k in ("silhouette", "davies_bouldin", "calinski_harabasz")])
    (cdir / "comparison.csv").write_text(buf.getvalue(), encoding="utf-8")
    report.clustering_paths += [cdir / f for f in ("validity.json", "comparison.csv", "mds.json",
                                                   "wasserstein_matrix.json", "symbolic_words.json",
                                                   "symbolic_dendrogram.json", "tda_dendrogram.json")]
    return table


def _matrix_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _stability_note(first: WindowResult, dm: DistanceMatrix, cfg: PipelineConfig) -> str:
    delta = 0.01 * dm.max_entry()
    if delta == 0:
        return "stability check skipped: zero distance matrix"
    shaken, _, _ = _persist(perturb(dm, delta, cfg.rng_seed), cfg)
    worst = []
    for k in range(cfg.max_homology_dim + 1):
        if max(len(first.diagram.finite(k)), len(shaken.finite(k))) > BOTTLENECK_CAP:
            return "stability check skipped: diagram exceeds bottleneck solver cap"
        worst.append(bottleneck(first.diagram, shaken, k))
    ok = all(b <= delta + 1e-12 for b in worst)
    return (f"stability check on window {first.stream}/{first.window_id}: matrix perturbed by "
            f"delta={delta:.6g}, bottleneck per dim {[round(b, 12) for b in worst]} "
            f"{'<=' if ok else 'EXCEEDS'} delta")


def run_pipeline(cfg: PipelineConfig, out_dir, threads: int | None = None) -> RunReport:
    """Execute the full pipeline and write every artifact under ``out_dir/run-<hash>``.

    Outputs are assembled in a temporary directory and moved into place only
    on success, so a failed run leaves nothing behind.
    """
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    with _Stage("ingest"):
        if not cfg.data:
            raise ValidationError("config has no data path")
        series = load_csv(cfg.data, cfg.layout)
    with _Stage("config"):
        cfg = validate_config(cfg, series)
    threads = threads if threads is not None else (cfg.threads or os.cpu_count() or 1)

    out_dir.mkdir(parents=True, exist_ok=True)
    final = out_dir / f"run-{config_hash(cfg)}"
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-run-", dir=out_dir))
    report = RunReport(RunManifest(), final)
    try:
        _run_into(cfg, series, tmp, report, threads, t0)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    tmp.rename(final)

    def move(paths):
        return [final / Path(p).relative_to(tmp) for p in paths]
    report.diagram_paths = move(report.diagram_paths)
    report.indicator_paths = move(report.indicator_paths)
    report.clustering_paths = move(report.clustering_paths)
    report.plot_paths = move(report.plot_paths)
    log.info("wrote %s (%d windows)", final, report.stats.get("windows", 0))
    return report


def _run_into(cfg, series, out: Path, report: RunReport, threads: int, t0: float):
    with _Stage("preprocess"):
        arrays = _prepare(series, cfg)
        emb, emb_rule = _embedding_params(arrays, cfg)
        if cfg.point_cloud == "delay":
            for sid, (m, tau) in emb.items():
                if m * tau > cfg.window_length:
                    raise ValidationError(f"{sid}: selected m*tau={m * tau} exceeds window_length")

    with _Stage("persistence"):
        results = _compute_windows(arrays, emb, cfg, threads)
    if not results:
        raise StageError("persistence", ValidationError("no windows produced"))

    streams: dict[str, list[WindowResult]] = {}
    for r in results:
        streams.setdefault(r.stream, []).append(r)

    with _Stage("summaries"), warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyLifetimesWarning)
        summary = {}
        for stream, items in streams.items():
            ddir = out / "diagrams" / stream
            ddir.mkdir(parents=True, exist_ok=True)
            for r in items:
                path = ddir / f"w{r.window_id:04d}.json"
                _dump(path, {**r.diagram.to_dict(), "window_id": r.window_id, "start": r.start})
                report.diagram_paths.append(path)
            dgms = [r.diagram for r in items]
            ts = rolling_tsi(dgms, cfg.tsi_dims, cfg.tsi_epsilon, [r.window_id for r in items])
            records = indicator_records(ts, dgms)
            for rec, r in zip(records, items):
                rec["start"] = r.start
            ipath = out / "indicators" / f"{stream}.json"
            _dump(ipath, records)
            report.indicator_paths.append(ipath)

            sdir = out / "summaries" / stream
            sdir.mkdir(parents=True, exist_ok=True)
            for k in range(cfg.max_homology_dim + 1):
                lrows, brows = [], []
                for r in items:
                    land = landscape(r.diagram, k, cfg.landscape_k, cfg.grid_n)
                    bc = betti_curve(r.diagram, k, cfg.grid_n)
                    for lvl in range(cfg.landscape_k):
                        lrows.append([r.window_id, lvl + 1] + [float(v) for v in land.values[lvl]])
                    brows.append([r.window_id] + [int(c) for c in bc.counts])
                # grids differ per window when filtration_max is auto; header carries the index
                head = [f"g{i}" for i in range(cfg.grid_n)]
                (sdir / f"landscape_h{k}.csv").write_text(
                    _matrix_csv(["window_id", "level"] + head, lrows), encoding="utf-8")
                (sdir / f"betti_h{k}.csv").write_text(
                    _matrix_csv(["window_id"] + head, brows), encoding="utf-8")
                _dump(sdir / f"grid_h{k}.json",
                      {str(r.window_id): [0.0, float(r.diagram.filtration_max), cfg.grid_n] for r in items})

            pdir = out / "plots" / stream
            pdir.mkdir(parents=True, exist_ok=True)
            for tag, r in (("first", items[0]), ("last", items[-1])):
                for kind, fn in (("barcode", plotting.barcode_svg), ("diagram", plotting.diagram_svg)):
                    path = pdir / f"{kind}_{tag}.svg"
                    path.write_text(fn(r.diagram, f"{stream} window {r.window_id} {kind}"), encoding="utf-8")
                    report.plot_paths.append(path)
            last = items[-1].diagram
            top_k = min(1, cfg.max_homology_dim)
            for kind, svg in (
                ("landscape", plotting.landscape_svg(landscape(last, top_k, cfg.landscape_k, cfg.grid_n))),
                ("betti", plotting.betti_svg(betti_curve(last, 0, cfg.grid_n))),
                ("tsi", plotting.tsi_svg(records, f"{stream} TSI")),
            ):
                path = pdir / f"{kind}.svg"
                path.write_text(svg, encoding="utf-8")
                report.plot_paths.append(path)

            all_var = [lifetime_stats(d, cfg.tsi_dims)[0] for d in dgms]
            summary[stream] = {
                "windows": len(items),
                "tsi_mean": float(np.mean(ts.tsi)),
                "tsi_max": float(np.max(ts.tsi)),
                "tsi_first": float(ts.tsi[0]),
                "tsi_last": float(ts.tsi[-1]),
                "ntsi_mean": float(np.mean(ts.ntsi)),
                "tp_mean": float(np.mean(ts.tp)),
                "lifetime_variance_mean": float(np.mean(all_var)),
                "entropy_mean": float(np.mean([rec["entropy"] for rec in records])),
            }

    notes = []
    with _Stage("cluster"):
        table = _clustering(arrays, emb, cfg, out, report, notes)

    with _Stage("report"):
        first = results[0]
        first_dm = _window_jobs(arrays, emb, cfg)[0][3]()
        notes.insert(0, _stability_note(first, first_dm, cfg))
        notes.append("single configuration run; sensitivity requires reruns over metric, "
                     "window_length and filtration_max (each run directory is keyed by config hash)")
        if table:
            notes.append(f"clustering compared on symbolic and topological feature spaces: {len(table)} rows")
        fvals = [r.filtration_max for r in results]
        counts = [r.n_simplices for r in results]
        m = report.manifest
        m.data_descriptor = {
            "path": str(cfg.data),
            "sha256": _file_sha(cfg.data),
            "layout": cfg.layout,
            "n_series": len(series),
            "series_ids": [s.id for s in series],
            "length": [len(s) for s in series],
            "time_span": [str(series[0].timestamps[0]), str(series[0].timestamps[-1])],
            "frequency": "index-based; timestamps carried but unused",
        }
        m.preprocessing_steps = [
            f"transform: {cfg.transform}",
            f"normalization: {cfg.normalize} (z-score, population std; constant input -> zeros)",
            "missing data: blank or non-finite cells rejected at load, no imputation",
            "calendar gaps (non-trading days, missing weeks): not detected; rows used in file order",
            f"windowing: length {cfg.window_length}, stride {cfg.stride}, point cloud '{cfg.point_cloud}'",
            f"embedding: {emb_rule}; (m, tau) by series {json.dumps({k: list(v) for k, v in emb.items()}, sort_keys=True)}",
        ]
        m.metric = {"name": cfg.metric, "dtw_band": cfg.dtw_band,
                    "sax_segments": cfg.sax_segments, "sax_alphabet": cfg.sax_alphabet,
                    "is_true_metric": cfg.metric != "dtw",
                    "diagram_distance": "Wasserstein q=1, L-infinity ground metric, summed over dims"}
        m.complex_type = "vietoris-rips (clique rule, closed threshold d <= filtration_max)"
        m.filtration_range = {"setting": cfg.filtration_max, "min": float(min(fvals)), "max": float(max(fvals))}
        m.homology_dims = list(range(cfg.max_homology_dim + 1))
        m.software_version = {
            "package": f"tdapipe {__version__}",
            "kernel_backend": kernels.BACKEND,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "precision": "float64",
            "coefficients": "Z/2",
            "reduction": "column reduction with clearing; union-find H0",
            "essential_classes": "excluded from TP/TSI; truncated at filtration_max in landscapes",
            "zero_persistence": "kept" if cfg.keep_zero_persistence else "dropped",
            "config_hash": config_hash(cfg),
            "config": cfg.to_dict(),
        }
        m.summary_stats = {"by_stream": summary, "tsi_dims": list(cfg.tsi_dims),
                           "tsi_epsilon": cfg.tsi_epsilon, "variance": "population"}
        m.interpretation_framework = cfg.interpretation
        m.validation_notes = notes
        m.run_info = {
            "created_at": datetime.now(timezone.utc).isoformat(),
            "wall_clock_s": round(time.perf_counter() - t0, 3),
            "threads": threads,
        }
        report.stats = {
            "windows": len(results),
            "simplices_total": int(sum(counts)),
            "simplices_max": int(max(counts)),
            "wall_clock_s": m.run_info["wall_clock_s"],
        }
        m.run_info["simplices_total"] = report.stats["simplices_total"]
        (out / "manifest.json").write_text(m.to_json(), encoding="utf-8")
        (out / "config.cfg").write_text(dump_config(cfg), encoding="utf-8")
