"""Command line entry point: ``run``, ``validate-config``, ``plot`` and ``synth``.

Config precedence, lowest first: config file, ``TDAPIPE_<KEY>`` environment
variables, command-line flags. Exit codes: 0 ok, 2 config error, 3 data
error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import plotting
from .errors import ConfigError, TdaError, ValidationError
from .ingest import config_keys, dump_config, load_config, load_csv, validate_config, write_csv
from .persistence import PersistenceDiagram
from .pipeline import run_pipeline
from .summaries import betti_curve, landscape
from .synth import KINDS, synth

ENV_PREFIX = "TDAPIPE_"
_SKIP_FLAGS = {"rng_seed", "threads"}  # exposed as --seed / --threads


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--seed", type=int, help="overrides rng_seed")
    p.add_argument("--threads", type=int, help="worker threads for per-window persistence")
    group = p.add_argument_group("config overrides (one flag per config key)")
    for key in config_keys():
        if key not in _SKIP_FLAGS:
            group.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar="VALUE")


def _overrides(args) -> dict:
    out = {}
    for key in config_keys():
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            out[key] = env
    for key in config_keys():
        val = getattr(args, f"cfg_{key}", None)
        if val is not None:
            out[key] = val
    if getattr(args, "seed", None) is not None:
        out["rng_seed"] = str(args.seed)
    if getattr(args, "threads", None) is not None:
        out["threads"] = str(args.threads)
    return out


def _config(args):
    return load_config(args.config, _overrides(args))


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run_pipeline(cfg, args.out, cfg.threads or None)
    print(f"run directory: {report.run_dir}")
    print(f"windows: {report.stats['windows']}, simplices: {report.stats['simplices_total']}, "
          f"wall clock: {report.stats['wall_clock_s']} s")
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    series = load_csv(cfg.data, cfg.layout) if cfg.data else ()
    cfg = validate_config(cfg, series)
    sys.stdout.write(dump_config(cfg))
    return 0


def cmd_plot(args) -> int:
    src = Path(args.input)
    if not src.exists():
        raise ValidationError(f"input not found: {src}")
    obj = json.loads(src.read_text(encoding="utf-8"))
    if args.kind == "tsi":
        svg = plotting.tsi_svg(obj if isinstance(obj, list) else obj.get("records", []))
    else:
        dgm = PersistenceDiagram.from_dict(obj)
        if args.kind == "diagram":
            svg = plotting.diagram_svg(dgm)
        elif args.kind == "barcode":
            svg = plotting.barcode_svg(dgm)
        elif args.kind == "landscape":
            svg = plotting.landscape_svg(landscape(dgm, args.dim, args.levels, args.grid))
        else:
            svg = plotting.betti_svg(betti_curve(dgm, args.dim, args.grid))
    Path(args.out).write_text(svg, encoding="utf-8")
    print(args.out)
    return 0


def cmd_synth(args) -> int:
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    series = synth(args.kind, params, args.seed)
    write_csv(series, args.out, "wide")
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdapipe", description="persistent-homology pipeline for time series")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the full pipeline")
    _add_config_flags(p)
    p.add_argument("--out", default="runs", help="parent directory for run-<config hash>/")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate-config", help="check a config and print it resolved")
    _add_config_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render an artifact as SVG")
    p.add_argument("kind", choices=plotting.PLOT_KINDS)
    p.add_argument("--input", required=True, help="diagram JSON (or indicator JSON for tsi)")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=0)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--grid", type=int, default=100)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("synth", help="write a synthetic dataset as wide CSV")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TdaError as exc:
        print(f"tdapipe: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"tdapipe: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
