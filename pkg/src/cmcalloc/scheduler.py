"""IMT selection and the joint scheduling / allocation loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import fracprog
from .dualalloc import InfeasibleProblemError, LinkProblem, solve_inner
from .energy import (
    AllocationDecision,
    EnergyBreakdown,
    PowerConstants,
    SegmentSpec,
    evaluate_decision,
    harvest_factor,
    lr_circuit_power,
    sr_circuit_power,
)
from .scenario import ScenarioRealization

__all__ = [
    "AllocationDecision", "CandidateResult", "JointSolution", "LinkSolution",
    "candidate_metric", "lr_link", "select_imt", "solve_joint", "solve_link", "sr_link",
]

log = logging.getLogger(__name__)


@dataclass
class LinkSolution:
    subchannel: int
    power: float
    q: float
    rate: float
    trace: fracprog.DinkelbachTrace = field(repr=False)
    dual_trace: list = field(default_factory=list, repr=False)


@dataclass
class CandidateResult:
    imt: int
    lr: LinkSolution | None
    sr: LinkSolution | None
    metric: float
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.metric)


@dataclass
class JointSolution:
    decision: AllocationDecision
    breakdown: EnergyBreakdown
    candidates: list[CandidateResult]
    outer_iterations: int

    @property
    def metrics(self) -> np.ndarray:
        return np.array([c.metric for c in self.candidates])


def lr_link(realization: ScenarioRealization, constants: PowerConstants, segment: SegmentSpec,
            imt: int) -> LinkProblem:
    return LinkProblem(
        gain=realization.lr_gain[imt],
        harvest=harvest_factor(realization, constants, imt),
        circuit=lr_circuit_power(constants),
        s_t=segment.s_t, r_min=segment.r_l_min, p_max=segment.p_s_max,
        noise_var=constants.noise_var, name=f"LR[{imt}]",
    )


def sr_link(realization: ScenarioRealization, constants: PowerConstants, segment: SegmentSpec,
            imt: int) -> LinkProblem:
    return LinkProblem(
        gain=realization.sr_worst_gain[imt],
        harvest=0.0,
        circuit=sr_circuit_power(constants, realization.num_mts),
        s_t=segment.s_t, r_min=segment.r_s_min, p_max=segment.p_k_max,
        noise_var=constants.noise_var, name=f"SR[{imt}]",
    )


def link_fractional_problem(link: LinkProblem, form: str = "lagrangian",
                            dual_trace: list | None = None) -> fracprog.FractionalProblem:
    def inner(q):
        sol = solve_inner(q, link, form=form, record=dual_trace is not None)
        if dual_trace is not None:
            dual_trace.extend((q,) + row for row in sol.trace)
        return sol.chosen_subchannel, sol.power

    feasible = link.feasible()
    if not feasible.any():
        raise InfeasibleProblemError(
            f"{link.name}: rate {link.r_min} unreachable at power cap {link.p_max}",
            constraint="rate threshold under power cap",
        )
    i0 = int(np.argmax(np.where(feasible, link.gain, -np.inf)))
    return fracprog.FractionalProblem(
        numerator=lambda x: float(link.numerator(x[0], x[1])),
        denominator=lambda x: float(link.rate(x[0], x[1])),
        inner=inner,
        feasible_point=(i0, float(link.min_power()[i0])),
    )


def solve_link(link: LinkProblem, q0: float | None = None, tol: float = 1e-8, max_iter: int = 100,
               form: str = "lagrangian", record: bool = False) -> LinkSolution:
    """Dinkelbach over (subchannel, power) with the dual-decomposition inner solver."""
    dual_trace = [] if record else None
    problem = link_fractional_problem(link, form, dual_trace)
    res = fracprog.solve(problem, q0=q0, tol=tol, max_iter=max_iter)
    i, p = res.x
    return LinkSolution(subchannel=int(i), power=float(p), q=res.q,
                        rate=float(link.rate(i, p)), trace=res.trace, dual_trace=dual_trace or [])


def candidate_metric(lr: LinkSolution, sr: LinkSolution | None) -> float:
    """Per-candidate energy: long-range ratio plus short-range ratio (if any)."""
    return lr.q + (sr.q if sr is not None else 0.0)


def select_imt(metrics) -> int:
    """Candidate with the least energy metric; lowest index on ties."""
    m = np.asarray(metrics, dtype=float)
    if m.size == 0:
        raise ValueError("no scheduling candidates")
    if not np.isfinite(m).any():
        raise InfeasibleProblemError("no feasible candidate", constraint="all candidates infeasible")
    return int(np.argmin(np.where(np.isnan(m), np.inf, m)))


def solve_candidate(realization, constants, segment, k, q0=(None, None), tol=1e-8,
                    form="lagrangian", record=False) -> CandidateResult:
    try:
        lr = solve_link(lr_link(realization, constants, segment, k), q0=q0[0], tol=tol,
                        form=form, record=record)
        sr = None
        if realization.num_mts > 1:
            sr = solve_link(sr_link(realization, constants, segment, k), q0=q0[1], tol=tol,
                            form=form, record=record)
    except (InfeasibleProblemError, fracprog.NonConvergenceError) as exc:
        log.debug("candidate %d excluded: %s", k, exc)
        return CandidateResult(imt=k, lr=None, sr=None, metric=math.inf, reason=str(exc))
    return CandidateResult(imt=k, lr=lr, sr=sr, metric=candidate_metric(lr, sr))


def decision_from(candidate: CandidateResult) -> AllocationDecision:
    sr = candidate.sr
    return AllocationDecision(
        imt=candidate.imt,
        lr_subchannel=candidate.lr.subchannel,
        sr_subchannel=sr.subchannel if sr else None,
        lr_power=candidate.lr.power,
        sr_power=sr.power if sr else 0.0,
    )


def solve_joint(realization: ScenarioRealization, constants: PowerConstants, segment: SegmentSpec,
                *, tol: float = 1e-8, form: str = "lagrangian", max_outer: int = 10,
                candidates: list[int] | None = None, record: bool = False) -> JointSolution:
    """Joint IMT selection, subchannel assignment and power allocation.

    Each outer sweep solves every candidate's long- and short-range links
    (warm-started from the previous sweep's ratios) and picks the candidate
    of least metric; the loop ends when the selection and all ratios repeat.
    """
    ks = list(range(realization.num_mts)) if candidates is None else list(candidates)
    q_prev = {k: (None, None) for k in ks}
    chosen_prev = None
    results: list[CandidateResult] = []
    history = []
    for outer in range(1, max_outer + 1):
        results = [solve_candidate(realization, constants, segment, k, q_prev[k], tol, form, record)
                   for k in ks]
        metrics = [r.metric for r in results]
        pos = select_imt(metrics)
        q_now = {r.imt: ((r.lr.q, r.sr.q if r.sr else None) if r.feasible else (None, None))
                 for r in results}
        same_q = all(_close_pair(q_prev[k], q_now[k], tol) for k in ks)
        history.append(ks[pos])
        if chosen_prev == ks[pos] and same_q:
            break
        chosen_prev, q_prev = ks[pos], q_now
    if len(history) > 2 and len(set(history[-3:])) > 1 and history[-1] != history[-2]:
        log.warning("IMT selection oscillated: %s", history)
    best = results[pos]
    decision = decision_from(best)
    return JointSolution(
        decision=decision,
        breakdown=evaluate_decision(realization, constants, segment, decision),
        candidates=results,
        outer_iterations=outer,
    )


def _close_pair(a, b, tol) -> bool:
    for x, y in zip(a, b):
        if x is None and y is None:
            continue
        if x is None or y is None or abs(x - y) > tol * max(1.0, abs(y)):
            return False
    return True
