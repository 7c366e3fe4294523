"""Static SVG plots: mean metric with standard-error bars versus the sweep value.

Figures are built on the object API (no pyplot state) with a fixed hash
salt and no date metadata, so identical input produces identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

from .io import summarize  # noqa: E402

LABELS = {
    "ec_mt": "MT-side EC ratio (%)",
    "ec_system": "System EC ratio (%)",
    "net": "Net energy per segment (J)",
    "mt_net": "MT net energy per segment (J)",
    "q_harvest_total": "Harvested energy (J)",
}
XLABELS = {
    "rate_ratio": "R_S,min / R_L,min",
    "num_mts": "Number of MTs K",
    "theta": "Conversion efficiency",
    "none": "",
}
MARKERS = "osD^v<>"


@dataclass(frozen=True)
class AxisSpec:
    metric: str = "ec_mt"
    xlabel: str | None = None
    ylabel: str | None = None
    title: str = ""


def emit_plot(records, axis: AxisSpec | str, path) -> Path:
    """One series per scheme, mean +/- standard error; zero line when any mean is negative."""
    if isinstance(axis, str):
        axis = AxisSpec(metric=axis)
    rows = summarize(records)
    series: dict[str, list] = {}
    for s in rows:
        series.setdefault(s.scheme, []).append((s.sweep_value, s.mean[axis.metric], s.stderr[axis.metric]))
    param = rows[0].sweep_parameter if rows else "none"

    matplotlib.rcParams["svg.hashsalt"] = "cmcalloc"
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot()
    lowest = 0.0
    for n, (scheme, pts) in enumerate(series.items()):
        x, y, e = zip(*pts)
        e = [0.0 if v != v else v for v in e]
        ax.errorbar(x, y, yerr=e, marker=MARKERS[n % len(MARKERS)], capsize=3, label=scheme)
        lowest = min([lowest] + [v for v in y if v == v])
    if lowest < 0:
        ax.axhline(0.0, color="black", linewidth=0.8, linestyle="--", gid="zero-line")
    ax.set_xlabel(axis.xlabel if axis.xlabel is not None else XLABELS.get(param, param))
    ax.set_ylabel(axis.ylabel if axis.ylabel is not None else LABELS.get(axis.metric, axis.metric))
    if axis.title:
        ax.set_title(axis.title)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path
