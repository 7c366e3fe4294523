"""Rates, per-phase energies and the net per-segment objective.

Bandwidth per subchannel is normalized to 1, so a rate in bps/Hz is used as
bits per second and a phase lasting ``s_t / rate`` seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SR_CIRCUIT_MODELS = ("all_terminals", "link_pair")


class InfeasibleLinkError(ValueError):
    """Raised when a link has zero rate, i.e. an unbounded transmission time."""


@dataclass(frozen=True)
class PowerConstants:
    """Circuit and RF constants.

    ``sr_circuit_model`` picks the short-range baseband accounting used by the
    optimizer: ``"all_terminals"`` charges ``(K-1)*p_rx + K*p_e`` (every
    terminal taking part in the multicast), ``"link_pair"`` charges only
    ``p_rx + 2*p_e`` (one transmitter, one receiver).
    """

    p_rx: float = 0.1
    p_e: float = 0.1
    p_b: float = 1.0
    theta: float | tuple[float, ...] = 0.5
    noise_var: float = 1.0
    swipt: bool = True
    sr_circuit_model: str = "all_terminals"

    def __post_init__(self):
        for name in ("p_rx", "p_e", "p_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be > 0")
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if np.any(th <= 0) or np.any(th > 1):
            raise ValueError("conversion efficiency must lie in (0, 1]")
        if not isinstance(self.theta, (int, float)):
            object.__setattr__(self, "theta", tuple(float(t) for t in th))
        if self.sr_circuit_model not in SR_CIRCUIT_MODELS:
            raise ValueError(f"sr_circuit_model must be one of {SR_CIRCUIT_MODELS}")

    def theta_vector(self, num_mts: int) -> np.ndarray:
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if th.size == 1:
            return np.full(num_mts, th[0])
        if th.size != num_mts:
            raise ValueError(f"theta has {th.size} entries for {num_mts} MTs")
        return th

    def replace(self, **changes) -> "PowerConstants":
        return replace(self, **changes)


@dataclass(frozen=True)
class SegmentSpec:
    s_t: float = 1.0
    r_l_min: float = 1.0
    r_s_min: float = 5.0
    p_s_max: float = 100.0
    p_k_max: float = 50.0

    def __post_init__(self):
        if not self.s_t > 0:
            raise ValueError("s_t must be > 0")
        if self.r_l_min < 0 or self.r_s_min < 0:
            raise ValueError("rate thresholds must be >= 0")
        if not (self.p_s_max > 0 and self.p_k_max > 0):
            raise ValueError("power caps must be > 0")

    def replace(self, **changes) -> "SegmentSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class AllocationDecision:
    imt: int
    lr_subchannel: int
    sr_subchannel: int | None
    lr_power: float
    sr_power: float = 0.0


@dataclass(frozen=True)
class EnergyBreakdown:
    e_bs_tx: float
    e_imt_lr_rx: float
    e_imt_sr_tx: float
    e_emt_sr_rx_total: float
    q_harvest_total: float
    net: float
    lr_rate: float = field(default=math.nan, compare=False)
    sr_rate: float = field(default=math.nan, compare=False)

    @property
    def mt_consumed(self) -> float:
        """Energy spent by terminals (E_{k,i,j}), before harvest credit."""
        return self.e_imt_lr_rx + self.e_imt_sr_tx + self.e_emt_sr_rx_total

    @property
    def mt_net(self) -> float:
        return self.mt_consumed - self.q_harvest_total


def lr_rate(p_tx, gain, noise_var=1.0):
    return np.log2(1.0 + np.asarray(p_tx) * np.asarray(gain) / noise_var)


def sr_rate(p_tx, worst_gain, noise_var=1.0):
    return lr_rate(p_tx, worst_gain, noise_var)


def min_power_for_rate(rate, gain, noise_var=1.0):
    """Inverse of :func:`lr_rate`: power reaching ``rate`` on ``gain``."""
    return (np.exp2(rate) - 1.0) * noise_var / np.asarray(gain)


def harvested_power(theta, p_tx, gain):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta > 1):
        raise ValueError("conversion efficiency must lie in (0, 1]")
    return theta * p_tx * gain


def _duration(s_t: float, rate: float) -> float:
    if not rate > 0:
        raise InfeasibleLinkError(f"link rate {rate!r} gives unbounded duration")
    return s_t / rate


def receive_energy(p_rx: float, p_e: float, s_t: float, rate: float) -> float:
    return (p_rx + p_e) * _duration(s_t, rate)


def sr_tx_energy(p_s_tx: float, p_e: float, s_t: float, sr_rate: float) -> float:
    return (p_s_tx + p_e) * _duration(s_t, sr_rate)


def bs_energy(p_l_tx: float, p_b: float, s_t: float, lr_rate: float) -> float:
    return (p_l_tx + p_b) * _duration(s_t, lr_rate)


def lr_circuit_power(constants: PowerConstants) -> float:
    """Fixed power while the long-range phase is on: BS baseband plus IMT receiver."""
    return constants.p_b + constants.p_rx + constants.p_e


def sr_circuit_power(constants: PowerConstants, num_mts: int, model: str | None = None) -> float:
    model = model or constants.sr_circuit_model
    if num_mts < 2:
        return 0.0
    if model == "link_pair":
        return constants.p_rx + 2.0 * constants.p_e
    return (num_mts - 1) * constants.p_rx + num_mts * constants.p_e


def harvest_factor(realization, constants: PowerConstants, imt: int) -> np.ndarray:
    """Sum over EMTs n != imt of theta_n * gain[n, i], per LR subchannel."""
    g = realization.harvest_gain
    k = g.shape[0]
    if not constants.swipt or k < 2:
        return np.zeros(g.shape[1])
    th = constants.theta_vector(k)
    mask = np.ones(k, dtype=bool)
    mask[imt] = False
    return th[mask] @ g[mask]


def lr_ratio(p_l: float, gain: float, harvest: float, constants: PowerConstants, segment: SegmentSpec) -> float:
    """Long-range term U1/R1 of the separable objective."""
    r = float(lr_rate(p_l, gain, constants.noise_var))
    u = segment.s_t * (p_l + lr_circuit_power(constants) - harvest * p_l)
    if not r > 0:
        raise InfeasibleLinkError("zero long-range rate")
    return u / r


def sr_ratio(p_s: float, worst_gain: float, num_mts: int, constants: PowerConstants,
             segment: SegmentSpec, model: str | None = None) -> float:
    """Short-range term U2/R2; zero for a single-MT cloud."""
    if num_mts < 2:
        return 0.0
    r = float(sr_rate(p_s, worst_gain, constants.noise_var))
    if not r > 0:
        raise InfeasibleLinkError("zero short-range rate")
    return segment.s_t * (p_s + sr_circuit_power(constants, num_mts, model)) / r


def evaluate_decision(realization, constants: PowerConstants, segment: SegmentSpec,
                      decision: AllocationDecision) -> EnergyBreakdown:
    """Full energy accounting of one data segment under ``decision``."""
    k = decision.imt
    i = decision.lr_subchannel
    num = realization.num_mts
    s_t = segment.s_t
    r_l = float(lr_rate(decision.lr_power, realization.lr_gain[k, i], constants.noise_var))
    t_l = _duration(s_t, r_l)
    e_bs = bs_energy(decision.lr_power, constants.p_b, s_t, r_l)
    e_lr_rx = receive_energy(constants.p_rx, constants.p_e, s_t, r_l)

    if num < 2:
        e_sr_tx = e_emt = q = 0.0
        r_s = math.nan
    else:
        j = decision.sr_subchannel
        r_s = float(sr_rate(decision.sr_power, realization.sr_worst_gain[k, j], constants.noise_var))
        e_sr_tx = sr_tx_energy(decision.sr_power, constants.p_e, s_t, r_s)
        e_emt = (num - 1) * receive_energy(constants.p_rx, constants.p_e, s_t, r_s)
        q = float(harvest_factor(realization, constants, k)[i]) * decision.lr_power * t_l

    net = e_bs + e_lr_rx + e_sr_tx + e_emt - q
    return EnergyBreakdown(
        e_bs_tx=e_bs, e_imt_lr_rx=e_lr_rx, e_imt_sr_tx=e_sr_tx,
        e_emt_sr_rx_total=e_emt, q_harvest_total=q, net=net,
        lr_rate=r_l, sr_rate=r_s,
    )


def ec_ratio_mt(breakdown: EnergyBreakdown, baseline_per_mt_rx: float) -> float:
    """MT-side energy net of harvest relative to conventional multicast reception, in percent.

    ``baseline_per_mt_rx`` is the summed reception energy of all K MTs under
    the multicast reference.
    """
    if not baseline_per_mt_rx > 0:
        raise ValueError("multicast baseline energy must be > 0")
    return 100.0 * breakdown.mt_net / baseline_per_mt_rx


def ec_ratio_system(breakdown: EnergyBreakdown, baseline_mt_rx: float, baseline_bs_tx: float) -> float:
    denom = baseline_mt_rx + baseline_bs_tx
    if not denom > 0:
        raise ValueError("multicast baseline energy must be > 0")
    return 100.0 * (breakdown.e_bs_tx + breakdown.mt_net) / denom
