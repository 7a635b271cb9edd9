"""Experiment configuration: validation, file parsing, seeding."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .robot import DT

ENVIRONMENTS = ("open", "constrained")
ALGORITHMS = ("gpf", "lpf")
DETECTORS = ("none", "ideal", "aapd", "harvest")
RESOLUTIONS = ("none", "predictive", "reactive")
FAULT_MODES = ("none", "afflicted", "mtbf")
SWARM_SIZES = (5, 10, 20)


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass(frozen=True)
class FaultSpec:
    """Degradation injection plan.

    afflicted: a fixed fraction of the swarm degrades one hardware class at
    probability q_afflicted per second. mtbf: every robot draws independent
    per-coefficient probabilities uniformly from [q_low, q_high].
    """

    mode: str = "none"
    afflicted_fraction: float = 0.0
    hardware_class: str = "motor"
    q_afflicted: float = 0.33
    q_low: float = 0.01
    q_high: float = 0.15

    def validate(self):
        if self.mode not in FAULT_MODES:
            raise ConfigError(f"fault.mode: {self.mode!r} not in {FAULT_MODES}")
        if self.mode == "afflicted":
            if not 0.0 < self.afflicted_fraction <= 1.0:
                raise ConfigError("fault.afflicted_fraction: must be in (0, 1]")
            if self.hardware_class not in ("motor", "sensor"):
                raise ConfigError(
                    f"fault.hardware_class: {self.hardware_class!r} invalid")
            if not 0.0 <= self.q_afflicted <= 1.0:
                raise ConfigError("fault.q_afflicted: must be in [0, 1]")
        if self.mode == "mtbf" and not 0.0 <= self.q_low <= self.q_high <= 1.0:
            raise ConfigError("fault.q_low/q_high: need 0 <= low <= high <= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str = "open"
    algorithm: str = "gpf"
    n_robots: int = 10
    duration_s: float = 900.0
    replicates: int = 10
    fault: FaultSpec = field(default_factory=FaultSpec)
    detector: str = "none"
    d0: float | None = None
    resolution: str = "none"
    master_seed: int = 0
    y_motor_path: str | None = None
    y_sensor_path: str | None = None
    dt: float = DT
    signed_residuals: bool = False
    telemetry: bool = False

    def validate(self):
        if self.environment not in ENVIRONMENTS:
            raise ConfigError(
                f"environment: {self.environment!r} not in {ENVIRONMENTS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm: {self.algorithm!r} not in {ALGORITHMS}")
        if self.n_robots < 1:
            raise ConfigError("n_robots: must be >= 1")
        if self.duration_s <= 0:
            raise ConfigError("duration_s: must be > 0")
        if self.replicates < 1:
            raise ConfigError("replicates: must be >= 1")
        if self.detector not in DETECTORS:
            raise ConfigError(f"detector: {self.detector!r} not in {DETECTORS}")
        if self.detector == "ideal":
            if self.d0 is None or not 0.0 < self.d0 <= 1.0:
                raise ConfigError("d0: ideal detector needs d0 in (0, 1]")
        if self.resolution not in RESOLUTIONS:
            raise ConfigError(
                f"resolution: {self.resolution!r} not in {RESOLUTIONS}")
        if self.dt <= 0:
            raise ConfigError("dt: must be > 0")
        self.fault.validate()

    def scenario_key(self) -> str:
        return f"{self.environment}-{self.algorithm}-n{self.n_robots}"


_BOOL_STRINGS = {"true": True, "false": False, "yes": True, "no": False,
                 "1": True, "0": False}

_CONFIG_FIELDS = {
    "environment": str,
    "algorithm": str,
    "n_robots": int,
    "duration_s": float,
    "replicates": int,
    "detector": str,
    "d0": float,
    "resolution": str,
    "master_seed": int,
    "y_motor_path": str,
    "y_sensor_path": str,
    "dt": float,
    "signed_residuals": bool,
    "telemetry": bool,
}

_FAULT_FIELDS = {
    "mode": str,
    "afflicted_fraction": float,
    "hardware_class": str,
    "q_afflicted": float,
    "q_low": float,
    "q_high": float,
}


def _coerce(name, raw, typ):
    raw = raw.strip()
    if typ is bool:
        try:
            return _BOOL_STRINGS[raw.lower()]
        except KeyError:
            raise ConfigError(f"{name}: {raw!r} is not a boolean") from None
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"{name}: {raw!r} is not a valid {typ.__name__}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse `key = value` lines (with # comments) into a configuration.

    Fault keys use a `fault.` prefix, e.g. `fault.mode = afflicted`.
    """
    cfg_kwargs = {}
    fault_kwargs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key.startswith("fault."):
            fkey = key[len("fault."):]
            if fkey not in _FAULT_FIELDS:
                raise ConfigError(f"{key}: unknown fault field")
            fault_kwargs[fkey] = _coerce(key, raw, _FAULT_FIELDS[fkey])
        elif key in _CONFIG_FIELDS:
            cfg_kwargs[key] = _coerce(key, raw, _CONFIG_FIELDS[key])
        else:
            raise ConfigError(f"{key}: unknown configuration field")
    cfg = ExperimentConfig(fault=FaultSpec(**fault_kwargs), **cfg_kwargs)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


def with_updates(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Functional update preserving validation."""
    out = replace(cfg, **kwargs)
    out.validate()
    return out
