"""Monte-Carlo driver: one work item per (sweep value, trial), all schemes paired.

Every scheme in a work item sees the same :class:`ScenarioRealization`, and
both EC ratios are normalized by that realization's multicast reference.
Infeasible trials are recorded with ``status="infeasible"`` and an error
message instead of aborting the run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .. import baselines
from ..baselines import BaselineKind
from ..dualalloc import InfeasibleProblemError
from ..energy import AllocationDecision, EnergyBreakdown, ec_ratio_mt, ec_ratio_system, evaluate_decision
from ..fracprog import NonConvergenceError
from ..scenario import dump_gains_csv, realize
from ..scheduler import solve_joint
from .config import ExperimentConfig
from .seeds import trial_seed

SCHEME_ORDER = {kind: n for n, kind in enumerate(BaselineKind)}


@dataclass(frozen=True)
class ResultRecord:
    """One row of ``results.csv``; field order is the column order."""

    scheme: str
    sweep_parameter: str
    sweep_index: int
    sweep_value: float
    trial: int
    seed: int
    status: str
    imt: int
    lr_subchannel: int
    sr_subchannel: int
    lr_power: float
    sr_power: float
    lr_rate: float
    sr_rate: float
    e_bs_tx: float
    e_imt_lr_rx: float
    e_imt_sr_tx: float
    e_emt_sr_rx_total: float
    q_harvest_total: float
    net: float
    mt_net: float
    ec_mt: float
    ec_system: float
    error: str

    @property
    def feasible(self) -> bool:
        return self.status == "ok"


COLUMNS = tuple(f.name for f in fields(ResultRecord))


@dataclass(frozen=True)
class TrialOutput:
    records: list[ResultRecord]
    traces: list[tuple]


def _record(scheme, cfg, sweep_index, value, trial, seed, decision: AllocationDecision | None,
            bd: EnergyBreakdown | None, ec_mt, ec_sys, error="") -> ResultRecord:
    nan = math.nan
    d = decision
    return ResultRecord(
        scheme=scheme.value, sweep_parameter=cfg.sweep.parameter, sweep_index=sweep_index,
        sweep_value=float(value), trial=trial, seed=seed,
        status="ok" if bd is not None else "infeasible",
        imt=d.imt if d else -1,
        lr_subchannel=d.lr_subchannel if d else -1,
        sr_subchannel=(d.sr_subchannel if d.sr_subchannel is not None else -1) if d else -1,
        lr_power=d.lr_power if d else nan, sr_power=d.sr_power if d else nan,
        lr_rate=bd.lr_rate if bd else nan, sr_rate=bd.sr_rate if bd else nan,
        e_bs_tx=bd.e_bs_tx if bd else nan, e_imt_lr_rx=bd.e_imt_lr_rx if bd else nan,
        e_imt_sr_tx=bd.e_imt_sr_tx if bd else nan,
        e_emt_sr_rx_total=bd.e_emt_sr_rx_total if bd else nan,
        q_harvest_total=bd.q_harvest_total if bd else nan,
        net=bd.net if bd else nan, mt_net=bd.mt_net if bd else nan,
        ec_mt=ec_mt, ec_system=ec_sys, error=error,
    )


def channel_seed(cfg: ExperimentConfig, sweep_index: int, trial: int) -> int:
    """Seed of the realization for a work item; shared across the sweep when ``common_channels``."""
    return trial_seed(cfg.seed, 0 if cfg.common_channels else sweep_index, trial)


def run_trial(cfg: ExperimentConfig, sweep_index: int, trial: int, trace: bool = False,
              dump_dir: str | None = None) -> TrialOutput:
    value = cfg.sweep.values[sweep_index]
    scenario, constants, segment = cfg.point(value)
    seed = trial_seed(cfg.seed, sweep_index, trial)
    realization = realize(scenario.replace(seed=channel_seed(cfg, sweep_index, trial)))
    if dump_dir is not None:
        dump_gains_csv(realization, dump_dir, tag=f"_s{sweep_index}_t{trial}")
    ref = baselines.multicast_baseline(realization, constants, segment)

    out: list[ResultRecord] = []
    traces: list[tuple] = []
    ps_imt = None
    # PS runs first so RSA can reuse its IMT
    order = sorted(cfg.schemes, key=lambda s: (s is not BaselineKind.PS, SCHEME_ORDER[s]))
    for scheme in order:
        rng = np.random.default_rng([seed, SCHEME_ORDER[scheme]])
        try:
            decision = _solve(scheme, realization, constants, segment, cfg, rng, ps_imt, trace, traces)
            if scheme is BaselineKind.MULTICAST:
                # the BS serves every MT directly, so no IMT and no SR phase
                decision = AllocationDecision(imt=-1, lr_subchannel=ref.subchannel, sr_subchannel=None,
                                              lr_power=ref.power, sr_power=0.0)
                bd = ref.breakdown
            else:
                bd = evaluate_decision(realization, constants, segment, decision)
            if scheme is BaselineKind.PS:
                ps_imt = decision.imt if decision is not None else None
            out.append(_record(scheme, cfg, sweep_index, value, trial, seed, decision, bd,
                               ec_ratio_mt(bd, ref.rx_total), ec_ratio_system(bd, ref.rx_total, ref.bs_tx)))
        except (InfeasibleProblemError, NonConvergenceError, baselines.BudgetExceededError) as exc:
            out.append(_record(scheme, cfg, sweep_index, value, trial, seed, None, None,
                               math.nan, math.nan, error=f"{type(exc).__name__}: {exc}"))
    out.sort(key=lambda r: SCHEME_ORDER[BaselineKind(r.scheme)])
    return TrialOutput(records=out, traces=[(sweep_index, trial) + t for t in traces])


def _solve(scheme, realization, constants, segment, cfg, rng, ps_imt, trace, traces):
    if scheme is BaselineKind.PS:
        sol = solve_joint(realization, constants, segment, record=trace)
        if trace:
            for cand in sol.candidates:
                for name, link in (("LR", cand.lr), ("SR", cand.sr)):
                    if link is None:
                        continue
                    for n, step in enumerate(link.trace.iterations):
                        traces.append(("dinkelbach", cand.imt, name, n, step.q, step.f_value,
                                       "", "", "", "", "", ""))
                    for row in link.dual_trace:
                        traces.append(("dual", cand.imt, name, row[1], row[0], "") + tuple(row[2:]))
        return sol.decision
    if scheme is BaselineKind.RSA:
        if ps_imt is None:
            ps_imt = solve_joint(realization, constants, segment).decision.imt
        return baselines.rsa_allocate(realization, constants, segment, ps_imt, rng)
    if scheme is BaselineKind.RUS_RSA:
        return baselines.rus_rsa_allocate(realization, constants, segment, rng)
    if scheme is BaselineKind.MAX:
        return baselines.max_schedule(realization, constants, segment)
    if scheme is BaselineKind.ES:
        return baselines.exhaustive_search(realization, constants, segment, cfg.es_grid_points).decision
    if scheme is BaselineKind.MULTICAST:
        return None
    raise ValueError(f"unhandled scheme {scheme}")


def _work(args) -> TrialOutput:
    return run_trial(*args)


def run_experiment(cfg: ExperimentConfig, *, workers: int | None = None, trace: bool = False,
                   dump_dir: str | Path | None = None) -> list[ResultRecord]:
    """Run every (sweep value, trial) and return records sorted by (sweep, trial, scheme)."""
    return run_experiment_with_traces(cfg, workers=workers, trace=trace, dump_dir=dump_dir)[0]


def run_experiment_with_traces(cfg: ExperimentConfig, *, workers: int | None = None, trace: bool = False,
                               dump_dir: str | Path | None = None) -> tuple[list[ResultRecord], list[tuple]]:
    workers = cfg.workers if workers is None else int(workers)
    dump = str(dump_dir) if dump_dir is not None else None
    items = [(cfg, s, t, trace, dump) for s in range(len(cfg.sweep.values)) for t in range(cfg.trials)]
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_work, items, chunksize=max(1, len(items) // (4 * workers))))
    else:
        outputs = [_work(it) for it in items]
    records = [r for o in outputs for r in o.records]
    records.sort(key=lambda r: (r.sweep_index, r.trial, SCHEME_ORDER[BaselineKind(r.scheme)]))
    traces = sorted((t for o in outputs for t in o.traces), key=lambda t: t[:2])
    return records, traces


TRACE_COLUMNS = ("sweep_index", "trial", "kind", "imt", "link", "iteration", "q", "f_value",
                 "mu", "theta", "subchannel", "power", "res_rate", "res_power")
