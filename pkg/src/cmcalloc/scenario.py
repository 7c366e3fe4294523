"""Network topology and channel realizations for one collaborative cloud.

A realization holds three gain matrices, all dimensionless and already
normalized to a unit noise variance:

* ``lr_gain[k, i]``: BS -> MT ``k`` on long-range subchannel ``i``.
* ``sr_worst_gain[k, j]``: MT ``k`` -> its weakest peer on short-range
  subchannel ``j`` (minimum taken per subchannel).
* ``harvest_gain``: same array as ``lr_gain``; a harvesting terminal
  collects energy on the downlink subchannel the scheduled terminal decodes.

Path loss is log-distance with a free-space reference at 1 m. Small-scale
fading is a 3-tap tapped-delay line whose first tap is Rician, evaluated at
the subchannel centre frequencies; tap powers are normalized so the fading
power factor has unit mean.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# independent RNG streams per seed
_TOPOLOGY_STREAM = 0
_LR_STREAM = 1
_SR_STREAM = 2


@dataclass(frozen=True)
class ScenarioConfig:
    num_mts: int = 10
    num_subchannels: int = 64
    bs_distance_m: float = 500.0
    cloud_side_m: float = 50.0
    lr_center_freq_hz: float = 2e9
    sr_center_freq_hz: float = 5e9
    seed: int = 0
    lr_pathloss_exponent: float = 3.5
    sr_pathloss_exponent: float = 3.0
    # dB added to -PL(d); absorbs antenna gains and the per-subchannel noise
    # floor so that a unit noise variance applies
    lr_link_offset_db: float = 120.0
    sr_link_offset_db: float = 110.0
    band_hz: float = 10e6
    tap_powers_db: tuple[float, ...] = (0.0, -5.0, -10.0)
    tap_delays_s: tuple[float, ...] = (0.0, 0.4e-6, 0.9e-6)
    rician_k_db: float = 3.0
    min_distance_m: float = 1.0

    def __post_init__(self):
        if int(self.num_mts) < 1:
            raise ValueError(f"num_mts must be >= 1, got {self.num_mts}")
        if int(self.num_subchannels) < 1:
            raise ValueError(f"num_subchannels must be >= 1, got {self.num_subchannels}")
        for name in ("bs_distance_m", "cloud_side_m", "lr_center_freq_hz",
                     "sr_center_freq_hz", "band_hz", "min_distance_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if len(self.tap_powers_db) != len(self.tap_delays_s) or not self.tap_powers_db:
            raise ValueError("tap_powers_db and tap_delays_s must be non-empty and equal length")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "tap_powers_db", tuple(float(v) for v in self.tap_powers_db))
        object.__setattr__(self, "tap_delays_s", tuple(float(v) for v in self.tap_delays_s))

    def replace(self, **changes) -> "ScenarioConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class Positions:
    bs: np.ndarray   # (2,)
    mts: np.ndarray  # (K, 2)

    @property
    def num_mts(self) -> int:
        return self.mts.shape[0]


@dataclass(frozen=True)
class ScenarioRealization:
    lr_gain: np.ndarray
    sr_worst_gain: np.ndarray
    positions: Positions | None = None
    sr_pair_gain: np.ndarray | None = field(default=None, repr=False)

    @property
    def harvest_gain(self) -> np.ndarray:
        return self.lr_gain

    @property
    def num_mts(self) -> int:
        return self.lr_gain.shape[0]

    @property
    def num_subchannels(self) -> int:
        return self.lr_gain.shape[1]


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


def generate_topology(cfg: ScenarioConfig) -> Positions:
    """BS at ``bs_distance_m`` from the square's centre; MTs uniform in the square."""
    rng = _rng(cfg.seed, _TOPOLOGY_STREAM)
    half = cfg.cloud_side_m / 2.0
    mts = rng.uniform(-half, half, size=(cfg.num_mts, 2))
    bs = np.array([cfg.bs_distance_m, 0.0])
    return Positions(bs=bs, mts=mts)


def free_space_reference_db(freq_hz: float, d0_m: float = 1.0) -> float:
    return 20.0 * math.log10(4.0 * math.pi * d0_m * freq_hz / SPEED_OF_LIGHT)


def pathloss_db(distance_m, freq_hz: float, exponent: float, d0_m: float = 1.0):
    """Log-distance path loss; distances below ``d0_m`` are clamped."""
    d = np.maximum(np.asarray(distance_m, dtype=float), d0_m)
    return free_space_reference_db(freq_hz, d0_m) + 10.0 * exponent * np.log10(d / d0_m)


def subchannel_frequencies(cfg: ScenarioConfig) -> np.ndarray:
    """Baseband centre frequencies of the N subchannels spanning ``band_hz``."""
    n = cfg.num_subchannels
    spacing = cfg.band_hz / n
    return (np.arange(n) - (n - 1) / 2.0) * spacing


def tap_profile(cfg: ScenarioConfig) -> np.ndarray:
    p = 10.0 ** (np.asarray(cfg.tap_powers_db) / 10.0)
    return p / p.sum()


def fading_power(rng: np.random.Generator, num_links: int, cfg: ScenarioConfig) -> np.ndarray:
    """Unit-mean fading power factors, shape ``(num_links, N)``.

    The first tap carries a Rician line-of-sight component with uniformly
    random phase; the remaining taps are Rayleigh.
    """
    powers = tap_profile(cfg)
    n_taps = powers.size
    k = 10.0 ** (cfg.rician_k_db / 10.0)
    scatter = (rng.standard_normal((num_links, n_taps))
               + 1j * rng.standard_normal((num_links, n_taps))) / math.sqrt(2.0)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=num_links)
    taps = scatter.copy()
    taps[:, 0] = math.sqrt(k / (k + 1.0)) * np.exp(1j * phase) + math.sqrt(1.0 / (k + 1.0)) * scatter[:, 0]
    taps *= np.sqrt(powers)
    freqs = subchannel_frequencies(cfg)
    steering = np.exp(-2j * math.pi * np.outer(cfg.tap_delays_s, freqs))  # (L, N)
    response = taps @ steering
    return np.abs(response) ** 2


def lr_pathgain(cfg: ScenarioConfig, positions: Positions) -> np.ndarray:
    d = np.linalg.norm(positions.mts - positions.bs, axis=1)
    pl = pathloss_db(d, cfg.lr_center_freq_hz, cfg.lr_pathloss_exponent, cfg.min_distance_m)
    return 10.0 ** ((cfg.lr_link_offset_db - pl) / 10.0)


def sr_pathgain(cfg: ScenarioConfig, positions: Positions) -> np.ndarray:
    """Symmetric (K, K) path gain between MTs; diagonal is NaN."""
    diff = positions.mts[:, None, :] - positions.mts[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    pl = pathloss_db(d, cfg.sr_center_freq_hz, cfg.sr_pathloss_exponent, cfg.min_distance_m)
    g = 10.0 ** ((cfg.sr_link_offset_db - pl) / 10.0)
    np.fill_diagonal(g, np.nan)
    return g


def draw_lr_channel(cfg: ScenarioConfig, positions: Positions) -> np.ndarray:
    rng = _rng(cfg.seed, _LR_STREAM)
    fading = fading_power(rng, positions.num_mts, cfg)
    return lr_pathgain(cfg, positions)[:, None] * fading


def draw_sr_pair_channel(cfg: ScenarioConfig, positions: Positions) -> np.ndarray:
    """Full (K, K, N) MT-to-MT gain tensor; reciprocal, diagonal NaN."""
    k = positions.num_mts
    n = cfg.num_subchannels
    rng = _rng(cfg.seed, _SR_STREAM)
    iu = np.triu_indices(k, 1)
    fading = fading_power(rng, len(iu[0]), cfg)
    out = np.full((k, k, n), np.nan)
    out[iu[0], iu[1]] = fading
    out[iu[1], iu[0]] = fading
    return sr_pathgain(cfg, positions)[:, :, None] * out


def worst_peer_gain(pair_gain: np.ndarray) -> np.ndarray:
    k = pair_gain.shape[0]
    if k < 2:
        return np.empty((0, pair_gain.shape[2]))
    return np.nanmin(pair_gain, axis=1)


def draw_sr_channel(cfg: ScenarioConfig, positions: Positions) -> np.ndarray:
    """Per-subchannel worst-peer gain; empty ``(0, N)`` array for a single MT."""
    return worst_peer_gain(draw_sr_pair_channel(cfg, positions))


def realize(cfg: ScenarioConfig, keep_pairs: bool = False) -> ScenarioRealization:
    positions = generate_topology(cfg)
    lr = draw_lr_channel(cfg, positions)
    pairs = draw_sr_pair_channel(cfg, positions)
    return ScenarioRealization(
        lr_gain=lr,
        sr_worst_gain=worst_peer_gain(pairs),
        positions=positions,
        sr_pair_gain=pairs if keep_pairs else None,
    )


def dump_gains_csv(realization: ScenarioRealization, directory: str | Path, tag: str = "") -> list[Path]:
    """Write lr/sr gain matrices (row = MT, column = subchannel, linear scale)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, mat in (("lr_gain", realization.lr_gain), ("sr_worst_gain", realization.sr_worst_gain)):
        path = directory / f"{name}{tag}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mt"] + [f"sc{j}" for j in range(mat.shape[1])])
            for k, row in enumerate(mat):
                w.writerow([k] + [f"{v:.9g}" for v in row])
        written.append(path)
    return written
