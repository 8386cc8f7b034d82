"""Physical constants (exact SI values, as shipped by scipy)."""
from __future__ import annotations

from scipy import constants

HBAR = constants.hbar
PLANCK = constants.h
BOLTZMANN = constants.k
TWO_PI = 2.0 * constants.pi

__all__ = ["BOLTZMANN", "HBAR", "PLANCK", "TWO_PI"]
