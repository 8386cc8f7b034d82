from __future__ import annotations

import math

import numpy as np

from .base import ArrayLike, NoiseSpectrum, SpectrumError


class Lorentzian(NoiseSpectrum):
    """Damped oscillator line, ``S = amplitude_sq * kappa / ((omega - omega0)**2 + kappa**2)``."""

    name = "lorentzian"

    def __init__(self, amplitude_sq: float, omega0: float, kappa: float) -> None:
        super().__init__(amplitude_sq, omega0)
        if not (math.isfinite(kappa) and kappa > 0):
            raise SpectrumError("kappa must be positive and finite; use DeltaLine for an undamped line")
        self.kappa = float(kappa)

    @property
    def linewidth(self) -> float:
        return self.kappa

    def density(self, omega: ArrayLike) -> ArrayLike:
        detuning = np.asarray(omega, dtype=float) - self.omega0
        return self.amplitude_sq * self.kappa / (detuning * detuning + self.kappa * self.kappa)

    def window_weight(self, lower: float, upper: float) -> float:
        upper_angle = math.atan((upper - self.omega0) / self.kappa)
        lower_angle = math.atan((lower - self.omega0) / self.kappa)
        return self.amplitude_sq * (upper_angle - lower_angle) / math.pi

    @classmethod
    def from_spec(cls, spec) -> "Lorentzian":
        if not math.isfinite(spec.quality_factor):
            raise SpectrumError("an infinite quality factor has no Lorentzian broadening")
        return cls(spec.lambda_tilde_sq, spec.omega0, spec.kappa)


__all__ = ["Lorentzian"]
