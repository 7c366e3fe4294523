"""CSV emission and parsing.

``results.csv`` columns follow :data:`cmcalloc.sim.runner.COLUMNS`.  Floats
are written with 9 significant digits (``%.9g``), missing values as ``nan``,
and quoting is RFC-4180 minimal.  Parsing a file and writing it again yields
the same bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..baselines import BaselineKind
from .runner import COLUMNS, SCHEME_ORDER, TRACE_COLUMNS, ResultRecord

_TYPES = {f.name: f.type for f in fields(ResultRecord)}
METRICS = ("ec_mt", "ec_system", "net", "mt_net", "q_harvest_total")


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.9g}"
    return str(v)


def _parse(name: str, text: str):
    kind = _TYPES[name]
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def emit_csv(records, path) -> Path:
    return _write_rows(path, COLUMNS, ([getattr(r, c) for c in COLUMNS] for r in records))


def read_csv(path) -> list[ResultRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected results header {header}")
        return [ResultRecord(**{c: _parse(c, v) for c, v in zip(header, row)}) for row in reader]


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    sweep_parameter: str
    sweep_value: float
    trials: int
    feasible: int
    mean: dict
    stderr: dict


def summarize(records) -> list[SummaryRow]:
    """Mean and standard error of each metric per (scheme, sweep value), over feasible trials."""
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.sweep_index, r.scheme), []).append(r)
    out = []
    keyed = sorted(groups.items(), key=lambda kv: (kv[0][0], SCHEME_ORDER[BaselineKind(kv[0][1])]))
    for (_, scheme), rows in keyed:
        ok = [r for r in rows if r.feasible]
        mean, se = {}, {}
        for m in METRICS:
            x = np.array([getattr(r, m) for r in ok], dtype=float)
            mean[m] = float(np.mean(x)) if x.size else math.nan
            se[m] = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
        out.append(SummaryRow(scheme, rows[0].sweep_parameter, rows[0].sweep_value,
                              len(rows), len(ok), mean, se))
    return out


def emit_summary(records, path) -> Path:
    header = ["scheme", "sweep_parameter", "sweep_value", "trials", "feasible"]
    for m in METRICS:
        header += [f"mean_{m}", f"se_{m}"]
    rows = []
    for s in summarize(records):
        row = [s.scheme, s.sweep_parameter, s.sweep_value, s.trials, s.feasible]
        for m in METRICS:
            row += [s.mean[m], s.stderr[m]]
        rows.append(row)
    return _write_rows(path, header, rows)


def emit_traces(traces, path) -> Path:
    return _write_rows(path, TRACE_COLUMNS, traces)
