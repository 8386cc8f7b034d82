from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from .constants import TWO_PI
from .thermal import lambda_tilde_sq, thermal_occupation


class Mechanism(str, Enum):
    """Decay mechanisms that degrade the ideal sensitivity."""

    T1 = "T1"
    T2 = "T2"
    Q = "Q"


ALL_MECHANISMS: FrozenSet[Mechanism] = frozenset(Mechanism)
BACKGROUND_MECHANISMS: FrozenSet[Mechanism] = frozenset({Mechanism.T1, Mechanism.T2})


def parse_mechanisms(values: Optional[Iterable[Any]]) -> FrozenSet[Mechanism]:
    if not values:
        return frozenset()
    result = set()
    for value in values:
        if isinstance(value, Mechanism):
            result.add(value)
            continue
        token = str(value).strip().upper()
        if not token:
            continue
        try:
            result.add(Mechanism(token))
        except ValueError as exc:
            raise ValueError(f"unknown decay mechanism {value!r}") from exc
    return frozenset(result)


class SystemSpec(BaseModel):
    """Oscillator, qubit, coupling and environment parameters.

    Frequencies are ordinary frequencies in Hz and times are in seconds. Every
    derived rate (``omega0``, ``coupling``, ``kappa``) is angular, rad/s.
    ``quality_factor``, ``qubit_t1`` and ``qubit_t2`` accept ``inf``.
    """

    f0: float = Field(..., description="oscillator frequency, Hz")
    quality_factor: float = Field(math.inf, description="oscillator quality factor")
    mass: float = Field(..., description="oscillator mass, g")
    temperature: float = Field(..., description="bath temperature, K")
    f_lambda: float = Field(..., description="qubit-oscillator coupling, Hz")
    qubit_t1: float = Field(math.inf, description="qubit relaxation time, s")
    qubit_t2: float = Field(math.inf, description="single-echo qubit coherence time, s")
    t2_scaling_exponent: float = Field(2.0 / 3.0)
    readout_contrast: float = Field(1.0)
    qubit_frequency: Optional[float] = Field(default=None, description="informational only, Hz")

    class Config:
        frozen = True

    @validator("f0", "mass", "f_lambda")
    def _positive_finite(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError("must be positive and finite")
        return value

    @validator("quality_factor", "qubit_t1", "qubit_t2")
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @validator("temperature")
    def _temperature(cls, value: float) -> float:
        if not math.isfinite(value) or value < 0:
            raise ValueError("temperature must be finite and non-negative")
        return value

    @validator("t2_scaling_exponent")
    def _exponent(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("t2_scaling_exponent must be finite")
        return value

    @validator("readout_contrast")
    def _contrast(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError("readout_contrast must lie in (0, 1]")
        return value

    @root_validator(skip_on_failure=True)
    def _weak_coupling(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["f_lambda"] / values["f0"] >= 1:
            raise ValueError("coupling ratio f_lambda/f0 must be below 1")
        return values

    # -- derived quantities -------------------------------------------------
    @property
    def omega0(self) -> float:
        return TWO_PI * self.f0

    @property
    def coupling(self) -> float:
        return TWO_PI * self.f_lambda

    @property
    def kappa(self) -> float:
        return self.omega0 / self.quality_factor

    @property
    def coupling_ratio(self) -> float:
        return self.f_lambda / self.f0

    @property
    def period(self) -> float:
        return 1.0 / self.f0

    @property
    def thermal_occupation(self) -> float:
        return thermal_occupation(self.f0, self.temperature)

    @property
    def lambda_tilde_sq(self) -> float:
        return lambda_tilde_sq(self.coupling, self.thermal_occupation)

    # -- variants -----------------------------------------------------------
    def replace(self, **changes: Any) -> "SystemSpec":
        return SystemSpec(**{**self.dict(), **changes})

    def with_mass_shift(self, relative_shift: float) -> "SystemSpec":
        """Return the spec after adding ``relative_shift * mass`` at fixed spring constant."""

        factor = 1.0 + relative_shift
        if factor <= 0:
            raise ValueError("mass shift must keep the mass positive")
        return self.replace(mass=self.mass * factor, f0=self.f0 / math.sqrt(factor))


@dataclass(frozen=True)
class PulseSequence:
    """Instantaneous pi pulses at ``pulse_times`` within ``(0, total_time)``."""

    total_time: float
    pulse_times: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        times = tuple(float(value) for value in self.pulse_times)
        object.__setattr__(self, "pulse_times", times)
        if not (math.isfinite(self.total_time) and self.total_time > 0):
            raise ValueError("total_time must be positive and finite")
        previous = 0.0
        for value in times:
            if not value > previous:
                raise ValueError("pulse times must be strictly increasing and positive")
            previous = value
        if times and not times[-1] < self.total_time:
            raise ValueError("pulse times must lie inside (0, total_time)")

    @classmethod
    def free(cls, total_time: float) -> "PulseSequence":
        return cls(total_time, ())

    @classmethod
    def hahn(cls, total_time: float) -> "PulseSequence":
        return cls(total_time, (0.5 * total_time,))

    @classmethod
    def cpmg(cls, n_pulses: int, total_time: float) -> "PulseSequence":
        if n_pulses < 0:
            raise ValueError("n_pulses must be non-negative")
        times = tuple((2 * j - 1) * total_time / (2 * n_pulses) for j in range(1, n_pulses + 1))
        return cls(total_time, times)

    @property
    def n_pulses(self) -> int:
        return len(self.pulse_times)

    @property
    def cpmg_count(self) -> Optional[int]:
        """Pulse count when the times follow the CPMG layout, else None."""

        count = self.n_pulses
        if count == 0:
            return 0
        expected = np.arange(1, count + 1) * 2.0 - 1.0
        expected *= self.total_time / (2.0 * count)
        if np.allclose(self.pulse_times, expected, rtol=0.0, atol=1e-12 * self.total_time):
            return count
        return None

    @property
    def edges(self) -> np.ndarray:
        return np.array((0.0, *self.pulse_times, self.total_time))


@dataclass(frozen=True)
class CoherenceTrace:
    times: np.ndarray
    l_ideal: np.ndarray
    l_bg: np.ndarray
    l_total: np.ndarray


@dataclass(frozen=True)
class PeakDescriptor:
    """One comb peak, ``L ~ exp(-gamma**2 (t - center)**2 / 2)``."""

    q: int
    center: float
    gamma: float
    width: float
    width_eq4: float
    height: float
    narrowest: bool = False


@dataclass(frozen=True)
class SensitivityRecord:
    n_pulses: int
    t_qstar: float
    eta_ideal: float
    eta_t1: float
    eta_t2: float
    eta_q: float
    eta_all: float


@dataclass(frozen=True)
class SensitivityCurve:
    temperature: float
    records: Tuple[SensitivityRecord, ...]

    @property
    def n_values(self) -> np.ndarray:
        return np.array([record.n_pulses for record in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records])


@dataclass(frozen=True)
class OptimizationResult:
    mode: str
    n_opt_analytic: int
    n_opt_numeric: int
    eta_opt_numeric: float
    eta_opt_eq8: float
    chi_at_optimum: float


@dataclass(frozen=True)
class MeasurementPlan:
    """Repeated single-shot readouts at a fixed measurement time."""

    n_pulses: int
    measurement_time: float
    n_runs: int
    contrast: float = 1.0
    seed: int = 0
    mass_shift: float = 0.0

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if not 0 < self.contrast <= 1:
            raise ValueError("contrast must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not self.measurement_time > 0:
            raise ValueError("measurement_time must be positive")


@dataclass(frozen=True)
class CoherenceEstimate:
    value: float
    sigma: float
    clamped: bool = False


@dataclass(frozen=True)
class EstimateReport:
    seed: int
    l_ref: float
    l_pert: float
    sigma_l_ref: float
    sigma_l_pert: float
    mass_shift: float
    sigma_mass_shift: float
    sigma_bound: float
    total_time: float
    eta_achieved: float
    eta_predicted: float
    clamped: bool = False


@dataclass(frozen=True)
class CampaignSummary:
    n_seeds: int
    mean: float
    std: float
    standard_error: float
    sigma_mass_shift_mean: float
    eta_achieved_mean: float
    eta_predicted: float


__all__ = [
    "ALL_MECHANISMS",
    "BACKGROUND_MECHANISMS",
    "CampaignSummary",
    "CoherenceEstimate",
    "CoherenceTrace",
    "EstimateReport",
    "MeasurementPlan",
    "Mechanism",
    "OptimizationResult",
    "PeakDescriptor",
    "PulseSequence",
    "SensitivityCurve",
    "SensitivityRecord",
    "SystemSpec",
    "parse_mechanisms",
]
