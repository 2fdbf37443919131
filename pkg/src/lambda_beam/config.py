"""Run configuration: YAML loading, strict validation, dotted overrides.

A run file is a mapping of sections; every key is optional and falls back to
a default, so a minimal file can be just ``scenario: measure``.  Unknown keys
anywhere are an error that names the offending path, which catches typos
before a long run rather than after it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
import math

import yaml

from .model import EnsembleConfig, ModelError, ProfileConfig, SystemParams


class ConfigError(ValueError):
    """Raised for malformed run configuration."""


SCENARIOS = ("pde", "adiabatic", "compare", "measure", "sweep")


@dataclass(frozen=True)
class PulseConfig:
    """Gaussian probe drive at the entrance face."""

    amplitude: float = 1.0
    center: float = 30.0      # 1/[t]
    fwhm: float = 10.0        # 1/[t]
    phase: float = 0.0        # rad

    def __post_init__(self) -> None:
        if self.fwhm <= 0:
            raise ConfigError(f"pulse fwhm must be positive, got {self.fwhm}")


@dataclass(frozen=True)
class SecondPulseConfig(PulseConfig):
    """Second probe drive; 'matched' locks it to the adapted composition.

    In matched mode the drive is tan(vartheta0) * eps1(t) * exp(i phase) and
    the amplitude/center/fwhm fields are ignored; 'off' sends nothing;
    'explicit' uses the Gaussian fields as given.
    """

    mode: str = "matched"

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.mode not in ("matched", "explicit", "off"):
            raise ConfigError(
                f"pulses.eps2.mode must be matched|explicit|off, got {self.mode!r}")


@dataclass(frozen=True)
class PulsesConfig:
    eps1: PulseConfig = PulseConfig()
    eps2: SecondPulseConfig = SecondPulseConfig()


@dataclass(frozen=True)
class NumericsConfig:
    """Transport-solver controls."""

    cfl: float = 0.9
    horizon: float = 80.0     # 1/[t]
    record_every: int = 1
    probes: tuple = ()        # absolute z stations; empty -> (L/4, L)
    pump_mode: str = "frozen"
    monitor_threshold: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(f"numerics.cfl must lie in (0, 1], got {self.cfl}")
        if self.horizon <= 0:
            raise ConfigError("numerics.horizon must be positive")
        if self.record_every < 1:
            raise ConfigError("numerics.record_every must be >= 1")
        if self.pump_mode not in ("frozen", "dynamic"):
            raise ConfigError(
                f"numerics.pump_mode must be frozen|dynamic, got {self.pump_mode!r}")
        if self.monitor_threshold <= 0:
            raise ConfigError("numerics.monitor_threshold must be positive")


@dataclass(frozen=True)
class MeasurementConfig:
    """Counting-interferometry controls."""

    eps0: float = 1.0
    phi: float = math.pi / 2          # rad, true relative phase
    glass_shift: float = math.pi      # rad, net reference-arm offset
    vartheta0: float = math.pi / 4    # rad, splitter composition angle
    k_total: int = 1000
    trials: int = 400
    alpha1: float = 0.0               # dimensionless loss exponent
    k_grid: tuple = (100, 1000, 10000, 100000)
    phi_grid_n: int = 721

    def __post_init__(self) -> None:
        if self.eps0 <= 0:
            raise ConfigError("measurement.eps0 must be positive")
        if self.k_total < 1 or self.trials < 1:
            raise ConfigError("measurement.k_total and trials must be >= 1")
        if self.alpha1 < 0:
            raise ConfigError("measurement.alpha1 must be >= 0")
        if len(self.k_grid) < 2 or any(int(k) < 1 for k in self.k_grid):
            raise ConfigError("measurement.k_grid needs >= 2 positive entries")
        if self.phi_grid_n < 3:
            raise ConfigError("measurement.phi_grid_n must be >= 3")


@dataclass(frozen=True)
class SweepConfig:
    """Parameter sweep controls.

    kind 'loss' scans the two-photon detuning (directly, or via the
    dimensionless sigma when parameter='sigma') and tabulates the loss
    integrals against their bound; kind 'estimator' scans the count budget
    and tabulates the phase-estimate error.
    """

    kind: str = "loss"
    parameter: str = "sigma"
    start: float = 1.0e-4
    stop: float = 1.0e-2
    num: int = 20
    spacing: str = "log"

    def __post_init__(self) -> None:
        if self.kind not in ("loss", "estimator"):
            raise ConfigError(f"sweep.kind must be loss|estimator, got {self.kind!r}")
        if self.parameter not in ("sigma", "delta"):
            raise ConfigError(
                f"sweep.parameter must be sigma|delta, got {self.parameter!r}")
        if self.num < 2:
            raise ConfigError(
                f"empty sweep: sweep.num must be >= 2, got {self.num}")
        if self.spacing not in ("log", "linear"):
            raise ConfigError(
                f"sweep.spacing must be log|linear, got {self.spacing!r}")
        if self.spacing == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("sweep log spacing needs positive start/stop")

    def values(self):
        import numpy as np
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one CLI run."""

    scenario: str = "compare"
    seed: int = 0
    params: SystemParams = SystemParams()
    profile: ProfileConfig = ProfileConfig()
    ensemble: EnsembleConfig = EnsembleConfig()
    pulses: PulsesConfig = PulsesConfig()
    numerics: NumericsConfig = NumericsConfig()
    measurement: MeasurementConfig = MeasurementConfig()
    sweep: SweepConfig = SweepConfig()

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")

    def probe_stations(self) -> tuple:
        if self.numerics.probes:
            return tuple(float(z) for z in self.numerics.probes)
        L = self.params.L
        return (0.25 * L, L)

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario, "seed": self.seed}
        for name in ("params", "profile", "ensemble", "pulses", "numerics",
                     "measurement", "sweep"):
            out[name] = _section_dict(getattr(self, name))
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    def with_overrides(self, assignments) -> "RunConfig":
        """Apply 'dotted.path=value' strings (values parsed as YAML)."""
        data = self.to_dict()
        for item in assignments:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            node = data
            parts = key.strip().split(".")
            for part in parts[:-1]:
                if not isinstance(node, dict) or part not in node:
                    raise ConfigError(f"unknown override path {key!r}")
                node = node[part]
            if not isinstance(node, dict) or parts[-1] not in node:
                raise ConfigError(f"unknown override path {key!r}")
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse override value {raw!r}: {exc}")
            if isinstance(value, str):
                # YAML leaves exponent forms like 3.6e8 as strings
                try:
                    value = int(value)
                except ValueError:
                    try:
                        value = float(value)
                    except ValueError:
                        pass
            node[parts[-1]] = value
        return from_mapping(data)


def _section_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if dataclasses.is_dataclass(v):
            out[f.name] = _section_dict(v)
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out


_TUPLE_FIELDS = {"probes", "k_grid"}


def _build_section(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown key {path}.{key}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{path}.{key} must be a list")
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (ModelError, ConfigError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def from_mapping(data) -> RunConfig:
    """Build a RunConfig from a plain mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a mapping")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {key}")
    pulses_data = data.get("pulses") or {}
    if not isinstance(pulses_data, dict):
        raise ConfigError("pulses must be a mapping")
    for key in pulses_data:
        if key not in ("eps1", "eps2"):
            raise ConfigError(f"unknown key pulses.{key}")
    kwargs = {
        "params": _build_section(SystemParams, data.get("params"), "params"),
        "profile": _build_section(ProfileConfig, data.get("profile"), "profile"),
        "ensemble": _build_section(EnsembleConfig, data.get("ensemble"), "ensemble"),
        "pulses": PulsesConfig(
            eps1=_build_section(PulseConfig, pulses_data.get("eps1"), "pulses.eps1"),
            eps2=_build_section(SecondPulseConfig, pulses_data.get("eps2"),
                                "pulses.eps2"),
        ),
        "numerics": _build_section(NumericsConfig, data.get("numerics"), "numerics"),
        "measurement": _build_section(MeasurementConfig, data.get("measurement"),
                                      "measurement"),
        "sweep": _build_section(SweepConfig, data.get("sweep"), "sweep"),
    }
    if "scenario" in data:
        kwargs["scenario"] = data["scenario"]
    if "seed" in data:
        kwargs["seed"] = data["seed"]
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    """Load a YAML run file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    return from_mapping(data)
