from __future__ import annotations

from typing import Optional


class CombSenseError(RuntimeError):
    """Base error for the toolkit."""


class SpectrumError(CombSenseError):
    """Raised when a route receives a spectrum variant it cannot handle."""


class ConfigurationError(CombSenseError, ValueError):
    """Raised for malformed run configuration."""


class FlankError(CombSenseError, ValueError):
    """Raised when the operating point leaves the usable peak flank."""


class ComputationError(CombSenseError):
    """Numerical failure that is not caused by bad input."""


class QuadratureError(ComputationError):
    """Raised when spectral quadrature does not reach the requested tolerance."""

    def __init__(self, message: str, achieved_error: float, tolerance: Optional[float] = None) -> None:
        detail = f"achieved error {achieved_error:.3e}"
        if tolerance is not None:
            detail += f", tolerance {tolerance:.3e}"
        super().__init__(f"{message} ({detail})")
        self.achieved_error = achieved_error
        self.tolerance = tolerance


class BracketError(ComputationError):
    """Raised when a pulse-number scan does not bracket a minimum."""


class CollapsedCoherenceError(ComputationError):
    """Raised when the reference coherence is too small to invert."""


__all__ = [
    "BracketError",
    "CollapsedCoherenceError",
    "CombSenseError",
    "ComputationError",
    "ConfigurationError",
    "FlankError",
    "QuadratureError",
    "SpectrumError",
]
