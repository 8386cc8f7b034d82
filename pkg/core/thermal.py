from __future__ import annotations

import math

from .constants import BOLTZMANN, HBAR, TWO_PI


def thermal_occupation(f0: float, temperature: float) -> float:
    """Bose-Einstein occupation of an oscillator at frequency ``f0`` (Hz)."""

    if not (math.isfinite(f0) and math.isfinite(temperature)):
        raise ValueError("f0 and temperature must be finite")
    if f0 <= 0:
        raise ValueError("f0 must be positive")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return 0.0
    x = HBAR * TWO_PI * f0 / (BOLTZMANN * temperature)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def lambda_tilde_sq(coupling: float, n_th: float) -> float:
    """Thermally enhanced squared coupling, rad^2/s^2."""

    if coupling <= 0:
        raise ValueError("coupling must be positive")
    if n_th < 0:
        raise ValueError("n_th must be non-negative")
    return coupling * coupling * (2.0 * n_th + 1.0)


__all__ = ["lambda_tilde_sq", "thermal_occupation"]
