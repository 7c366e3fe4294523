"""Command-line entry point.

    cmcalloc run CONFIG [--out-dir DIR] [--trials N] [--seed S] [--schemes PS,RSA,...]
                        [--no-swipt] [--trace] [--dump-channels] [--workers W]
    cmcalloc init-config PATH

``run`` writes ``results.csv``, ``summary.csv``, ``plot_<metric>.svg`` and a
copy of the resolved config (``config.yaml``).  On failure it exits with
status 1 (bad input) or 2 (run error) and prints one JSON line
``{"error": ..., "type": ..., "detail": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..baselines import BaselineKind
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .io import emit_csv, emit_summary, emit_traces
from .plotting import emit_plot
from .runner import run_experiment_with_traces


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmcalloc", description="CMC scheduling and allocation simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment from a YAML config")
    run.add_argument("config", type=Path)
    run.add_argument("--out-dir", type=Path, default=None)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--schemes", type=str, default=None, help="comma-separated, e.g. PS,RSA,ES")
    run.add_argument("--no-swipt", action="store_true", help="disable the harvest term")
    run.add_argument("--trace", action="store_true", help="write Dinkelbach and dual iterates to trace.csv")
    run.add_argument("--dump-channels", action="store_true", help="write per-trial gain matrices")
    run.add_argument("--workers", type=int, default=None)

    init = sub.add_parser("init-config", help="write the default config")
    init.add_argument("path", type=Path)
    return parser


def _fail(kind: str, exc: Exception, code: int) -> int:
    line = {"error": kind, "type": type(exc).__name__, "detail": str(exc)}
    print(json.dumps(line, sort_keys=True), file=sys.stderr)
    return code


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.schemes:
        changes["schemes"] = tuple(BaselineKind.parse(s) for s in args.schemes.split(",") if s.strip())
    if args.no_swipt:
        changes["swipt_enabled"] = False
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out_dir is not None:
        changes["out_dir"] = str(args.out_dir)
    return cfg.replace(**changes) if changes else cfg


def run(args) -> int:
    try:
        cfg = _resolve(args)
    except (OSError, ConfigError, ValueError) as exc:
        return _fail("config", exc, 1)
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        dump_dir = out / "channels" if args.dump_channels else None
        records, traces = run_experiment_with_traces(cfg, trace=args.trace, dump_dir=dump_dir)
        dump_config(cfg, out / "config.yaml")
        emit_csv(records, out / "results.csv")
        emit_summary(records, out / "summary.csv")
        for metric in cfg.plots:
            emit_plot(records, metric, out / f"plot_{metric}.svg")
        if args.trace:
            emit_traces(traces, out / "trace.csv")
    except Exception as exc:  # report anything as one machine-readable line
        return _fail("run", exc, 2)
    infeasible = sum(not r.feasible for r in records)
    print(f"wrote {len(records)} records ({infeasible} infeasible) to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "run":
        return run(args)
    try:
        dump_config(ExperimentConfig(), args.path)
    except OSError as exc:
        return _fail("io", exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
