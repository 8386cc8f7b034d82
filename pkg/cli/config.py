"""Run configuration: flat ``key = value`` text, unit suffixes, presets."""
from __future__ import annotations

import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator

from core.entities import Mechanism, SystemSpec, parse_mechanisms
from core.errors import ConfigurationError

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_N_VALUES",
    "PRESETS",
    "RunConfig",
    "default_workers",
    "dump_config_text",
    "load_config",
    "parse_config_text",
    "parse_overrides",
]


def default_n_values() -> List[int]:
    return list(range(2, 257, 2)) + list(range(272, 2049, 16))


DEFAULT_N_VALUES: Tuple[int, ...] = tuple(default_n_values())

UNITS: Dict[str, Dict[str, float]] = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "temperature": {"k": 1.0, "mk": 1e-3},
    "mass": {"g": 1.0, "kg": 1e3, "mg": 1e-3, "ug": 1e-6, "ng": 1e-9, "fg": 1e-15},
}

KEY_UNITS: Dict[str, str] = {
    "f0": "frequency",
    "f_lambda": "frequency",
    "qubit_frequency": "frequency",
    "qubit_t1": "time",
    "qubit_t2": "time",
    "t_min": "time",
    "t_max": "time",
    "temperature": "temperature",
    "temperatures": "temperature",
    "mass": "mass",
}

LIST_KEYS = frozenset({"temperatures", "n_values", "mechanisms"})

SPEC_FIELDS = (
    "f0",
    "quality_factor",
    "mass",
    "temperature",
    "f_lambda",
    "qubit_t1",
    "qubit_t2",
    "t2_scaling_exponent",
    "readout_contrast",
    "qubit_frequency",
)

# Values taken from the figure captions: 100 kHz oscillator, lambda = 0.001 omega0,
# M = 2.3e-16 g; the sensitivity figure adds Q = 1e9, T1 = 7 ms, T2 = 100 us.
PRESETS: Dict[str, Dict[str, Any]] = {
    "fig2": {
        "f0": 1.0e5,
        "f_lambda": 100.0,
        "temperature": 10.0,
        "mass": 2.3e-16,
        "n_pulses": 100,
        "t_min": 0.0,
        "t_max": 5.0e-4,
        "n_points": 5001,
    },
    "fig3": {
        "f0": 1.0e5,
        "f_lambda": 100.0,
        "quality_factor": 1.0e9,
        "qubit_t1": 7.0e-3,
        "qubit_t2": 1.0e-4,
        "mass": 2.3e-16,
        "temperature": 300.0,
        "temperatures": [1.0, 300.0],
        "n_pulses": 126,
    },
}


def default_workers() -> int:
    return int(os.getenv("COMBSENSE_WORKERS", "1"))


class RunConfig(BaseModel):
    """Validated run configuration; physical parameters in base SI units (mass in g)."""

    f0: float
    quality_factor: float = math.inf
    mass: float
    temperature: float
    f_lambda: float
    qubit_t1: float = math.inf
    qubit_t2: float = math.inf
    t2_scaling_exponent: float = 2.0 / 3.0
    readout_contrast: float = 1.0
    qubit_frequency: Optional[float] = None

    n_pulses: int = 100
    t_min: float = 0.0
    t_max: Optional[float] = None
    n_points: int = 1001
    spectrum: str = "delta"
    chi_route: str = "closed"

    temperatures: List[float] = Field(default_factory=list)
    n_values: List[int] = Field(default_factory=default_n_values)
    mechanisms: Tuple[Mechanism, ...] = tuple(mechanism for mechanism in Mechanism)
    q_route: str = "closed"
    optimize_mode: str = "all"
    optimize_n_max: Optional[int] = None

    n_runs: int = 1_000_000
    mass_shift: float = 0.0
    n_seeds: int = 100
    flank_offset: float = 1.0

    seed: int = 0
    workers: int = Field(default_factory=default_workers)
    out: Optional[str] = None

    class Config:
        extra = "forbid"

    @validator("mechanisms", pre=True)
    def _mechanisms(cls, value: Any) -> Tuple[Mechanism, ...]:
        if isinstance(value, str):
            value = value.split(",")
        selected = parse_mechanisms(value)
        return tuple(mechanism for mechanism in Mechanism if mechanism in selected)

    @validator("n_points")
    def _n_points(cls, value: int) -> int:
        if value < 2:
            raise ValueError("n_points must be at least 2")
        return value

    @validator("n_pulses", "n_runs", "n_seeds", "workers")
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("seed")
    def _seed(cls, value: int) -> int:
        if not 0 <= value < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return value

    @validator("spectrum")
    def _spectrum(cls, value: str) -> str:
        if value not in ("delta", "lorentzian"):
            raise ValueError("spectrum must be 'delta' or 'lorentzian'")
        return value

    @validator("chi_route")
    def _chi_route(cls, value: str) -> str:
        if value not in ("closed", "piecewise", "quadrature"):
            raise ValueError("chi_route must be 'closed', 'piecewise' or 'quadrature'")
        return value

    @validator("q_route")
    def _q_route(cls, value: str) -> str:
        if value not in ("closed", "quadrature"):
            raise ValueError("q_route must be 'closed' or 'quadrature'")
        return value

    @validator("optimize_mode")
    def _optimize_mode(cls, value: str) -> str:
        if value not in ("all", "q_only", "ideal"):
            raise ValueError("optimize_mode must be 'all', 'q_only' or 'ideal'")
        return value

    @validator("n_values")
    def _n_values(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("n_values must not be empty")
        if any(n < 2 or n % 2 for n in value):
            raise ValueError("n_values must be even integers >= 2")
        return value

    @validator("temperatures", each_item=True)
    def _temperatures(cls, value: float) -> float:
        if not math.isfinite(value) or value < 0:
            raise ValueError("temperatures must be finite and non-negative")
        return value

    @validator("flank_offset")
    def _flank_offset(cls, value: float) -> float:
        if not 0.3 <= abs(value) <= 3.0:
            raise ValueError("flank_offset must lie in [0.3, 3] in units of 1/gamma")
        return value

    @root_validator(skip_on_failure=True)
    def _consistency(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        SystemSpec(**{name: values[name] for name in SPEC_FIELDS})
        if values["t_max"] is None:
            values["t_max"] = 0.5 * values["n_pulses"] / values["f0"]
        if not 0 <= values["t_min"] < values["t_max"]:
            raise ValueError("time grid needs 0 <= t_min < t_max")
        return values

    # -- derived objects ---------------------------------------------------------
    def system_spec(self, temperature: Optional[float] = None) -> SystemSpec:
        fields = {name: getattr(self, name) for name in SPEC_FIELDS}
        if temperature is not None:
            fields["temperature"] = temperature
        return SystemSpec(**fields)

    def sweep_temperatures(self) -> List[float]:
        return sorted(set(self.temperatures)) if self.temperatures else [self.temperature]

    def mechanism_set(self) -> frozenset:
        return frozenset(self.mechanisms)


# -- text format ---------------------------------------------------------------
def _convert_scalar(key: str, token: str) -> Any:
    token = token.strip()
    family = KEY_UNITS.get(key)
    if family is None:
        return token
    parts = token.split()
    if len(parts) == 1:
        number, unit = parts[0], None
    elif len(parts) == 2:
        number, unit = parts
    else:
        raise ConfigurationError(f"{key}: cannot parse {token!r}")
    try:
        value = float(number)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: {number!r} is not a number") from exc
    if unit is None:
        return value
    scale = UNITS[family].get(unit.lower())
    if scale is None:
        allowed = ", ".join(UNITS[family])
        raise ConfigurationError(f"{key}: unknown unit {unit!r} (expected one of {allowed})")
    return value * scale


def _convert(key: str, raw: str) -> Any:
    if key not in RunConfig.__fields__:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    if key in LIST_KEYS:
        return [_convert_scalar(key, item) for item in raw.split(",") if item.strip()]
    return _convert_scalar(key, raw)


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""

    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigurationError(f"line {number}: expected 'key = value', got {content!r}")
        key, raw = (part.strip() for part in content.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {number}: missing key")
        values[key] = _convert(key, raw)
    return values


def parse_overrides(items: Iterable[str]) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for item in items:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        values[key] = _convert(key, raw)
    return values


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Mechanism):
        return value.value
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(item) for item in value)
    return str(value)


def dump_config_text(config: RunConfig) -> str:
    """Serialise in base units; parsing the result gives back an equal config."""

    lines = []
    for key in RunConfig.__fields__:
        value = getattr(config, key)
        if value is None:
            continue
        lines.append(f"{key} = {_format(value)}")
    return "\n".join(lines) + "\n"


def load_config(
    *,
    preset: Optional[str] = None,
    path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    flags: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Merge preset, file, ``--set`` overrides and explicit flags, in that order."""

    data: Dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        data.update(PRESETS[preset])
    if path is not None:
        data.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    data.update(parse_overrides(overrides))
    for key, value in (flags or {}).items():
        if value is not None:
            data[key] = value
    logger.debug("configuration keys: %s", sorted(data))
    return RunConfig.parse_obj(data)
