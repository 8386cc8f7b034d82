from __future__ import annotations

from .base import ArrayLike, NoiseSpectrum, SpectrumError


class DeltaLine(NoiseSpectrum):
    """Undamped oscillator, ``S = amplitude_sq * pi * delta(omega - omega0)``."""

    name = "delta"

    @property
    def linewidth(self) -> float:
        return 0.0

    def density(self, omega: ArrayLike) -> ArrayLike:
        raise SpectrumError("a delta line has no pointwise density")

    def window_weight(self, lower: float, upper: float) -> float:
        if lower <= self.omega0 <= upper:
            return self.amplitude_sq
        return 0.0

    @classmethod
    def from_spec(cls, spec) -> "DeltaLine":
        return cls(spec.lambda_tilde_sq, spec.omega0)


__all__ = ["DeltaLine"]
