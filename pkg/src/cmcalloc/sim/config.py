"""Experiment configuration (YAML, ``schema_version: 1``).

Top-level keys::

    schema_version: 1
    seed: 2024                 # master seed
    trials: 300
    workers: 1
    swipt_enabled: true
    common_channels: false     # true: one realization per trial index, shared by all sweep values
    schemes: [PS, RSA, RUS+RSA, MAX, ES, Multicast]
    es_grid_points: 200
    scenario:  {...ScenarioConfig fields, seed excluded...}
    constants: {...PowerConstants fields...}
    segment:   {...SegmentSpec fields...}
    sweep:     {parameter: rate_ratio | num_mts | theta | none, values: [...]}
    output:    {dir: results, plots: [ec_mt, ec_system]}
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..baselines import BaselineKind
from ..energy import PowerConstants, SegmentSpec
from ..scenario import ScenarioConfig

SCHEMA_VERSION = 1
SWEEP_PARAMETERS = ("rate_ratio", "num_mts", "theta", "none")
PLOT_METRICS = ("ec_mt", "ec_system", "net")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    parameter: str = "none"
    values: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep.values must not be empty")
        if self.parameter == "num_mts" and any(v < 1 or v != int(v) for v in vals):
            raise ConfigError("num_mts sweep values must be integers >= 1")
        if self.parameter == "theta" and any(not 0 < v <= 1 for v in vals):
            raise ConfigError("theta sweep values must lie in (0, 1]")
        if self.parameter == "rate_ratio" and any(v < 0 for v in vals):
            raise ConfigError("rate_ratio sweep values must be >= 0")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    constants: PowerConstants = field(default_factory=PowerConstants)
    segment: SegmentSpec = field(default_factory=SegmentSpec)
    sweep: Sweep = field(default_factory=Sweep)
    schemes: tuple[BaselineKind, ...] = (BaselineKind.PS, BaselineKind.MULTICAST)
    trials: int = 100
    seed: int = 0
    workers: int = 1
    swipt_enabled: bool = True
    common_channels: bool = False
    es_grid_points: int = 200
    out_dir: str = "results"
    plots: tuple[str, ...] = ("ec_mt", "ec_system")

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        if int(self.es_grid_points) < 2:
            raise ConfigError("es_grid_points must be >= 2")
        schemes = tuple(s if isinstance(s, BaselineKind) else BaselineKind.parse(s) for s in self.schemes)
        if not schemes:
            raise ConfigError("at least one scheme is required")
        object.__setattr__(self, "schemes", schemes)
        bad = [p for p in self.plots if p not in PLOT_METRICS]
        if bad:
            raise ConfigError(f"unknown plot metrics {bad}; choose from {PLOT_METRICS}")

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def point(self, value: float) -> tuple[ScenarioConfig, PowerConstants, SegmentSpec]:
        """Scenario, constants and segment with the sweep parameter set to ``value``."""
        sc, pc, seg = self.scenario, self.constants, self.segment
        p = self.sweep.parameter
        if p == "rate_ratio":
            seg = seg.replace(r_s_min=value * seg.r_l_min)
        elif p == "num_mts":
            sc = sc.replace(num_mts=int(value))
        elif p == "theta":
            pc = pc.replace(theta=float(value))
        pc = pc.replace(swipt=self.swipt_enabled)
        return sc, pc, seg

    def to_dict(self) -> dict:
        sc = asdict(self.scenario)
        sc.pop("seed")
        sc["tap_powers_db"] = list(sc["tap_powers_db"])
        sc["tap_delays_s"] = list(sc["tap_delays_s"])
        pc = asdict(self.constants)
        pc.pop("swipt")
        if isinstance(pc["theta"], tuple):
            pc["theta"] = list(pc["theta"])
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": int(self.seed),
            "trials": int(self.trials),
            "workers": int(self.workers),
            "swipt_enabled": bool(self.swipt_enabled),
            "common_channels": bool(self.common_channels),
            "schemes": [s.value for s in self.schemes],
            "es_grid_points": int(self.es_grid_points),
            "scenario": sc,
            "constants": pc,
            "segment": asdict(self.segment),
            "sweep": {"parameter": self.sweep.parameter, "values": list(self.sweep.values)},
            "output": {"dir": self.out_dir, "plots": list(self.plots)},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        version = data.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
        try:
            scenario = ScenarioConfig(**_only(ScenarioConfig, data.pop("scenario", {}), exclude={"seed"}))
            constants = PowerConstants(**_only(PowerConstants, data.pop("constants", {}), exclude={"swipt"}))
            segment = SegmentSpec(**_only(SegmentSpec, data.pop("segment", {})))
            sw = data.pop("sweep", None) or {}
            sweep = Sweep(parameter=sw.get("parameter", "none"), values=tuple(sw.get("values", (0.0,))))
            out = data.pop("output", None) or {}
            kwargs = {}
            for key in ("trials", "seed", "workers", "swipt_enabled", "common_channels", "es_grid_points"):
                if key in data:
                    kwargs[key] = data.pop(key)
            if "schemes" in data:
                kwargs["schemes"] = tuple(data.pop("schemes"))
            if data:
                raise ConfigError(f"unknown top-level keys: {sorted(data)}")
            return cls(scenario=scenario, constants=constants, segment=segment, sweep=sweep,
                       out_dir=out.get("dir", "results"),
                       plots=tuple(out.get("plots", ("ec_mt", "ec_system"))), **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _only(klass, section: dict, exclude: set[str] = frozenset()) -> dict:
    names = {f.name for f in fields(klass)} - set(exclude)
    section = dict(section or {})
    unknown = set(section) - names
    if unknown:
        raise ConfigError(f"unknown {klass.__name__} keys: {sorted(unknown)}")
    for key in ("tap_powers_db", "tap_delays_s", "theta"):
        if isinstance(section.get(key), list):
            section[key] = tuple(section[key])
    return section


def load_config(path: str | Path) -> ExperimentConfig:
    with Path(path).open() as fh:
        return ExperimentConfig.from_dict(yaml.safe_load(fh))


def dump_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with Path(path).open("w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
