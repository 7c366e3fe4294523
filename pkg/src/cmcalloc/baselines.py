"""Reference schemes: random subchannels, random scheduling, max-channel
scheduling, conventional multicast and the exhaustive-search oracle."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dualalloc import InfeasibleProblemError
from .energy import (
    AllocationDecision,
    EnergyBreakdown,
    PowerConstants,
    SegmentSpec,
    harvest_factor,
    lr_rate,
    min_power_for_rate,
    sr_rate,
)
from .scenario import ScenarioRealization
from .scheduler import lr_link, solve_joint, solve_link, sr_link


class BaselineKind(str, enum.Enum):
    PS = "PS"
    RSA = "RSA"
    RUS_RSA = "RUS+RSA"
    MAX = "MAX"
    MULTICAST = "Multicast"
    ES = "ES"

    @classmethod
    def parse(cls, name: str) -> "BaselineKind":
        key = name.strip().upper().replace("_", "+")
        for kind in cls:
            if kind.value.upper() == key or kind.name == name.strip().upper():
                return kind
        raise ValueError(f"unknown scheme {name!r}; choose from {[k.value for k in cls]}")


class BudgetExceededError(ValueError):
    pass


def _random_subchannel_solution(link, rng: np.random.Generator, tries: int):
    """Draw subchannels uniformly until one is feasible, then optimize its power."""
    n = link.num_subchannels
    feasible = link.feasible()
    for _ in range(tries):
        i = int(rng.integers(n))
        if feasible[i]:
            sol = solve_link(link.restrict(i))
            sol.subchannel = i
            return sol
    raise InfeasibleProblemError(f"{link.name}: no feasible subchannel in {tries} random draws",
                                 constraint="random subchannel infeasible")


def rsa_allocate(realization: ScenarioRealization, constants: PowerConstants, segment: SegmentSpec,
                 imt: int, rng: np.random.Generator | int) -> AllocationDecision:
    """Uniformly random LR and SR subchannels for ``imt``; powers optimized per subchannel."""
    rng = np.random.default_rng(rng)
    n = realization.num_subchannels
    lr = _random_subchannel_solution(lr_link(realization, constants, segment, imt), rng, n)
    sr = None
    if realization.num_mts > 1:
        sr = _random_subchannel_solution(sr_link(realization, constants, segment, imt), rng, n)
    return AllocationDecision(
        imt=imt, lr_subchannel=lr.subchannel, sr_subchannel=sr.subchannel if sr else None,
        lr_power=lr.power, sr_power=sr.power if sr else 0.0,
    )


def feasible_candidates(realization, constants, segment) -> list[int]:
    out = []
    for k in range(realization.num_mts):
        ok = lr_link(realization, constants, segment, k).feasible().any()
        if ok and realization.num_mts > 1:
            ok = sr_link(realization, constants, segment, k).feasible().any()
        if ok:
            out.append(k)
    return out


def rus_rsa_allocate(realization, constants, segment, rng: np.random.Generator | int) -> AllocationDecision:
    """IMT uniformly among feasible candidates, then :func:`rsa_allocate`."""
    rng = np.random.default_rng(rng)
    cands = feasible_candidates(realization, constants, segment)
    if not cands:
        raise InfeasibleProblemError("no feasible candidate", constraint="all candidates infeasible")
    k = cands[int(rng.integers(len(cands)))]
    return rsa_allocate(realization, constants, segment, k, rng)


def max_schedule(realization, constants, segment) -> AllocationDecision:
    """IMT with the strongest BS channel on any subchannel; proposed allocation for it."""
    k = int(np.argmax(realization.lr_gain.max(axis=1)))
    return solve_joint(realization, constants, segment, candidates=[k]).decision


@dataclass(frozen=True)
class MulticastBaseline:
    breakdown: EnergyBreakdown
    rx_total: float
    bs_tx: float
    subchannel: int
    power: float
    rate: float


def multicast_baseline(realization, constants: PowerConstants, segment: SegmentSpec) -> MulticastBaseline:
    """BS multicasts the whole segment to every MT on the best common subchannel.

    The rate is set by the weakest MT on that subchannel, at the least power
    meeting ``r_l_min``; if that exceeds the BS cap the cap is used and the
    rate falls below the threshold.
    """
    worst = realization.lr_gain.min(axis=0)
    i = int(np.argmax(worst))
    p = float(min_power_for_rate(segment.r_l_min, worst[i], constants.noise_var))
    if segment.r_l_min <= 0 or p > segment.p_s_max:
        p = segment.p_s_max
    r = float(lr_rate(p, worst[i], constants.noise_var))
    t = segment.s_t / r
    rx = realization.num_mts * (constants.p_rx + constants.p_e) * t
    bs = (p + constants.p_b) * t
    bd = EnergyBreakdown(e_bs_tx=bs, e_imt_lr_rx=rx, e_imt_sr_tx=0.0, e_emt_sr_rx_total=0.0,
                         q_harvest_total=0.0, net=bs + rx, lr_rate=r)
    return MulticastBaseline(breakdown=bd, rx_total=rx, bs_tx=bs, subchannel=i, power=p, rate=r)


def power_grid(min_power: np.ndarray, p_max: float, points: int) -> np.ndarray:
    """Geometric grid from each subchannel's minimum power to the cap, shape (N, points).

    Infeasible subchannels get a NaN row.
    """
    lo = np.maximum(np.asarray(min_power, dtype=float), p_max * 1e-9)
    grid = np.full((lo.size, points), np.nan)
    ok = lo <= p_max
    if ok.any():
        t = np.linspace(0.0, 1.0, points)
        grid[ok] = np.exp(np.log(lo[ok])[:, None] + t[None, :] * np.log(p_max / lo[ok])[:, None])
        grid[ok, -1] = p_max
        grid[ok, 0] = lo[ok]
    return grid


@dataclass(frozen=True)
class SearchResult:
    decision: AllocationDecision
    net: float
    evaluations: int


def _lr_table(realization, constants, segment, k, points):
    g = realization.lr_gain[k]
    need = min_power_for_rate(segment.r_l_min, g, constants.noise_var)
    grid = power_grid(need, segment.p_s_max, points)
    r = lr_rate(grid, g[:, None], constants.noise_var)
    t = segment.s_t / r
    h = harvest_factor(realization, constants, k)[:, None]
    e = ((grid + constants.p_b) + (constants.p_rx + constants.p_e) - h * grid) * t
    return grid, np.where(np.isnan(e), np.inf, e)


def _sr_table(realization, constants, segment, k, points):
    num = realization.num_mts
    g = realization.sr_worst_gain[k]
    need = min_power_for_rate(segment.r_s_min, g, constants.noise_var)
    grid = power_grid(need, segment.p_k_max, points)
    r = sr_rate(grid, g[:, None], constants.noise_var)
    t = segment.s_t / r
    e = (grid + constants.p_e) * t + (num - 1) * (constants.p_rx + constants.p_e) * t
    return grid, np.where(np.isnan(e), np.inf, e)


def exhaustive_search(realization: ScenarioRealization, constants: PowerConstants, segment: SegmentSpec,
                      grid_points: int = 200, *, separable: bool = True,
                      max_evaluations: float = 1e8) -> SearchResult:
    """Global minimizer of the net segment energy over (IMT, LR sc, SR sc, gridded powers).

    The objective is evaluated directly from the per-phase energies.  With
    ``separable=True`` the long- and short-range tables of each IMT are
    minimized independently, which is exact because the objective is a sum
    of the two phases and the constraints do not couple them; the full
    Cartesian enumeration is available for small instances.
    """
    num, n = realization.num_mts, realization.num_subchannels
    has_sr = num > 1
    if separable:
        evals = num * n * grid_points * (2 if has_sr else 1)
    else:
        evals = num * n * grid_points * ((n * grid_points) if has_sr else 1)
    if evals > max_evaluations:
        raise BudgetExceededError(
            f"{evals:.3g} evaluations exceed budget {max_evaluations:.3g}; use a smaller instance")

    best = (math.inf, None)
    for k in range(num):
        lg, le = _lr_table(realization, constants, segment, k, grid_points)
        if not has_sr:
            a = int(np.argmin(le))
            v = le.flat[a]
            if v < best[0]:
                i, pi = divmod(a, grid_points)
                best = (v, AllocationDecision(k, i, None, float(lg[i, pi]), 0.0))
            continue
        sg, se = _sr_table(realization, constants, segment, k, grid_points)
        if separable:
            a, b = int(np.argmin(le)), int(np.argmin(se))
            v = le.flat[a] + se.flat[b]
        else:
            total = le.reshape(-1)[:, None] + se.reshape(-1)[None, :]
            a, b = np.unravel_index(int(np.argmin(total)), total.shape)
            v = total[a, b]
        if v < best[0]:
            i, pi = divmod(int(a), grid_points)
            j, pj = divmod(int(b), grid_points)
            best = (float(v), AllocationDecision(k, i, j, float(lg[i, pi]), float(sg[j, pj])))
    if best[1] is None:
        raise InfeasibleProblemError("no feasible (IMT, subchannel, power) combination",
                                     constraint="all candidates infeasible")
    return SearchResult(decision=best[1], net=best[0], evaluations=int(evals))
