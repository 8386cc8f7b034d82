from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Union

import numpy as np

from ..errors import SpectrumError

if TYPE_CHECKING:  # pragma: no cover
    from ..entities import SystemSpec


ArrayLike = Union[float, np.ndarray]


class NoiseSpectrum(ABC):
    """Oscillator noise spectrum S(omega) as seen by the qubit, omega >= 0.

    ``amplitude_sq`` is the thermally enhanced coupling squared (rad^2/s^2);
    every variant integrates to ``amplitude_sq * pi`` over the line, so the
    dephasing exponent of a perfectly filtered line is ``amplitude_sq * |F|^2``.
    """

    name = "spectrum"

    def __init__(self, amplitude_sq: float, omega0: float) -> None:
        if not (math.isfinite(amplitude_sq) and amplitude_sq >= 0):
            raise SpectrumError("amplitude_sq must be finite and non-negative")
        if not (math.isfinite(omega0) and omega0 > 0):
            raise SpectrumError("omega0 must be positive and finite")
        self.amplitude_sq = float(amplitude_sq)
        self.omega0 = float(omega0)
        self._log = logging.getLogger(self.__class__.__name__)

    @property
    @abstractmethod
    def linewidth(self) -> float:
        """Half width at half maximum, rad/s."""

    @abstractmethod
    def density(self, omega: ArrayLike) -> ArrayLike:
        """Pointwise spectral density, rad/s."""

    @abstractmethod
    def window_weight(self, lower: float, upper: float) -> float:
        """Return ``(1/pi) * integral of S`` over ``[lower, upper]``, rad^2/s^2."""

    @classmethod
    @abstractmethod
    def from_spec(cls, spec: "SystemSpec") -> "NoiseSpectrum":
        """Build the spectrum of the oscillator described by ``spec``."""

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(amplitude_sq={self.amplitude_sq!r}, "
            f"omega0={self.omega0!r}, linewidth={self.linewidth!r})"
        )


__all__ = ["ArrayLike", "NoiseSpectrum", "SpectrumError"]
