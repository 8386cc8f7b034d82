from .base import NoiseSpectrum, SpectrumError
from .delta import DeltaLine
from .lorentzian import Lorentzian

__all__ = ["DeltaLine", "Lorentzian", "NoiseSpectrum", "SpectrumError"]
