from __future__ import annotations

import logging
import math
from functools import partial
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from ..entities import BACKGROUND_MECHANISMS, CoherenceTrace, Mechanism, PulseSequence, SystemSpec
from ..errors import QuadratureError, SpectrumError
from ..spectra import DeltaLine, Lorentzian, NoiseSpectrum

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SPECTRUM_KINDS = ("delta", "lorentzian")
CHI_ROUTES = ("closed", "piecewise", "quadrature")

# Below this |omega * interval / 2| the interval weight uses its Taylor series.
SMALL_PHASE = 1e-6
# |cos(omega0 t / 2N)| at or below this multiple of eps * max(1, phase) counts as a divergence.
DIVERGENCE_ULPS = 64

QUAD_ATOL = 1e-10
QUAD_RTOL = 1e-6
# Quadrature segments span this many oscillations of |I(omega)|^2.
QUAD_PERIODS_PER_SEGMENT = 4
QUAD_MAX_SEGMENTS = 20000
QUAD_SUBDIVISIONS = 200


# -- modulation function -----------------------------------------------------
def _interval_weights(phase: np.ndarray) -> np.ndarray:
    """sin(x)/x with the series branch for tiny arguments."""

    small = np.abs(phase) < SMALL_PHASE
    safe = np.where(small, 1.0, phase)
    return np.where(small, 1.0 - phase * phase / 6.0, np.sin(safe) / safe)


def modulation_integral(seq: PulseSequence, omega: ArrayLike) -> Union[complex, np.ndarray]:
    """Return the integral of f(t') exp(i omega t') over ``[0, seq.total_time]``.

    ``f`` is +1 before the first pulse and flips sign at every pulse. Each
    interval contributes ``sign * width * sinc(omega * width / 2) * exp(i omega * mid)``,
    which equals the textbook ``(exp(i omega b) - exp(i omega a)) / (i omega)``
    without its cancellation at small ``omega``. Vectorised over ``omega``.
    """

    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr < 0):
        raise ValueError("omega must be non-negative")
    edges = seq.edges
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    signs = np.where(np.arange(widths.size) % 2 == 0, 1.0, -1.0)

    flat = omega_arr.reshape(-1, 1)
    weights = _interval_weights(0.5 * flat * widths) * (signs * widths)
    values = np.sum(weights * np.exp(1j * flat * mids), axis=1)
    if omega_arr.ndim == 0:
        return complex(values[0])
    return values.reshape(omega_arr.shape)


def filter_power(seq: PulseSequence, omega: ArrayLike) -> ArrayLike:
    """|modulation_integral|^2, s^2."""

    value = modulation_integral(seq, omega)
    power = np.abs(value) ** 2
    return float(power) if np.ndim(power) == 0 else power


def cpmg_filter_power(n_pulses: int, total_time: float, omega: ArrayLike) -> ArrayLike:
    """|I(omega)|^2 of an N-pulse CPMG sequence in closed form, s^2.

    (4 / omega^2) (sec(omega t / 2N) - 1)^2 sin^2(omega t / 2), with cos^2 in the
    last factor for odd N. Where cos(omega t / 2N) vanishes the removable
    singularity takes its limit 4 N^2 / omega^2.
    """

    if isinstance(n_pulses, bool) or int(n_pulses) != n_pulses or n_pulses < 0:
        raise ValueError("n_pulses must be a non-negative integer")
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr < 0):
        raise ValueError("omega must be non-negative")
    half = 0.5 * omega_arr * total_time
    if n_pulses == 0:
        power = (total_time * _interval_weights(half)) ** 2
    else:
        phase = half / n_pulses
        last = np.sin(half) ** 2 if n_pulses % 2 == 0 else np.cos(half) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            excess = 2.0 * np.sin(0.5 * phase) ** 2 / np.cos(phase)
            power = 4.0 * excess**2 * last / omega_arr**2
            limit = 4.0 * n_pulses**2 / omega_arr**2
        power = np.where(divergence_mask(n_pulses, total_time, omega_arr), limit, power)
        power = np.where(omega_arr == 0, 0.0, power)
    return float(power) if np.ndim(power) == 0 else power


# -- delta-line routes ---------------------------------------------------------
def chi_delta_general(seq: PulseSequence, spectrum: NoiseSpectrum) -> float:
    if not isinstance(spectrum, DeltaLine):
        raise SpectrumError(f"chi_delta_general needs a delta line, got {spectrum.name}")
    return spectrum.amplitude_sq * filter_power(seq, spectrum.omega0)


def _half_phase(n_pulses: int, omega0: float, times: np.ndarray) -> np.ndarray:
    return omega0 * times / (2.0 * n_pulses)


def divergence_mask(n_pulses: int, omega0: float, t: ArrayLike) -> np.ndarray:
    """True where cos(omega0 t / 2N) vanishes to working precision."""

    phase = _half_phase(n_pulses, omega0, np.asarray(t, dtype=float))
    limit = DIVERGENCE_ULPS * np.finfo(float).eps * np.maximum(1.0, np.abs(phase))
    return np.abs(np.cos(phase)) <= limit


def _check_pulses(n_pulses: int) -> None:
    if isinstance(n_pulses, bool) or int(n_pulses) != n_pulses or n_pulses < 1:
        raise ValueError("n_pulses must be a positive integer")


def chi_cpmg_closed(
    n_pulses: int,
    omega0: float,
    lambda_tilde_sq: float,
    t: ArrayLike,
    *,
    strict_parity: bool = False,
) -> ArrayLike:
    """Closed-form CPMG dephasing exponent for a delta-line spectrum.

    Even ``n_pulses`` use ``sin^2(omega0 t / 2)`` in the last factor; odd counts
    use ``cos^2``. Divergent points return ``inf``.
    """

    _check_pulses(n_pulses)
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    if lambda_tilde_sq < 0:
        raise ValueError("lambda_tilde_sq must be non-negative")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValueError("t must be non-negative")

    if n_pulses % 2:
        if strict_parity:
            raise ValueError(f"closed form with odd pulse count N={n_pulses} requested in strict mode")
        logger.warning("odd pulse count N=%d: closed form uses the cos^2 parity variant", n_pulses)
        last = np.cos(0.5 * omega0 * times) ** 2
    else:
        last = np.sin(0.5 * omega0 * times) ** 2

    phase = _half_phase(n_pulses, omega0, times)
    cosine = np.cos(phase)
    divergent = divergence_mask(n_pulses, omega0, times)
    # sec(a) - 1 written as 2 sin^2(a/2) / cos(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = 2.0 * np.sin(0.5 * phase) ** 2 / cosine
        chi = 4.0 * lambda_tilde_sq / omega0**2 * excess**2 * last
    chi = np.where(divergent, np.inf, chi)
    return float(chi) if chi.ndim == 0 else chi


def envelope_gamma(n_pulses: int, omega0: float, lambda_tilde_sq: float, t: ArrayLike) -> ArrayLike:
    """Slow envelope (2 lambda~ / omega0) |sec(omega0 t / 2N) - 1| of the comb."""

    _check_pulses(n_pulses)
    times = np.asarray(t, dtype=float)
    phase = _half_phase(n_pulses, omega0, times)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.abs(2.0 * np.sin(0.5 * phase) ** 2 / np.cos(phase))
    gamma = 2.0 * math.sqrt(lambda_tilde_sq) / omega0 * excess
    gamma = np.where(divergence_mask(n_pulses, omega0, times), np.inf, gamma)
    return float(gamma) if gamma.ndim == 0 else gamma


def comb_regime(spec: SystemSpec, n_pulses: int, t: float) -> str:
    gamma = envelope_gamma(n_pulses, spec.omega0, spec.lambda_tilde_sq, t)
    if gamma < 0.1:
        return "protected"
    if gamma < 3.0:
        return "oscillating"
    return "comb"


# -- spectral quadrature -----------------------------------------------------
class SpectralQuadrature:
    """Integrates (1/pi) S(omega) |I(omega)|^2 over a finite window around omega0.

    The window is ``omega0 +/- max(50 kappa, 20 * 2 pi N / t)`` plus the
    low-frequency tail down to zero. The Lorentzian core weighted by
    ``|I(omega0)|^2`` is done analytically; the remainder is symmetrised about
    ``omega0``. Each piece is cut into segments of a few filter oscillations
    which are stacked on top of each other, so one ``quad`` call over a single
    segment width integrates all of them with vectorised filter evaluations.
    CPMG sequences use the closed-form filter.
    """

    def __init__(self, *, atol: float = QUAD_ATOL, rtol: float = QUAD_RTOL) -> None:
        if atol <= 0 or rtol <= 0:
            raise ValueError("tolerances must be positive")
        self.atol = atol
        self.rtol = rtol
        self._log = logging.getLogger(self.__class__.__name__)

    def __call__(self, seq: PulseSequence, spectrum: NoiseSpectrum) -> float:
        if isinstance(spectrum, DeltaLine):
            return chi_delta_general(seq, spectrum)
        if not isinstance(spectrum, Lorentzian):
            raise SpectrumError(f"no quadrature rule for spectrum {spectrum.name}")

        t = seq.total_time
        omega0, kappa = spectrum.omega0, spectrum.kappa
        count = seq.cpmg_count
        if count is None:
            power = partial(filter_power, seq)
        else:
            power = partial(cpmg_filter_power, count, t)
        n_eff = max(seq.n_pulses, 1)
        half_width = max(50.0 * kappa, 20.0 * 2.0 * math.pi * n_eff / t)
        lower = max(0.0, omega0 - half_width)
        upper = omega0 + half_width
        centre_power = float(power(omega0))

        core = centre_power * spectrum.window_weight(lower, upper)
        scale = spectrum.amplitude_sq * kappa / math.pi

        def symmetric(nu: np.ndarray) -> np.ndarray:
            pair = power(omega0 + nu) + power(np.maximum(omega0 - nu, 0.0))
            return (pair - 2.0 * centre_power) / (nu * nu + kappa * kappa)

        def right_only(nu: np.ndarray) -> np.ndarray:
            return (power(omega0 + nu) - centre_power) / (nu * nu + kappa * kappa)

        def tail(omega: np.ndarray) -> np.ndarray:
            detuning = omega - omega0
            return power(omega) / (detuning * detuning + kappa * kappa)

        step = QUAD_PERIODS_PER_SEGMENT * 2.0 * math.pi / t
        pieces = [(symmetric, 0.0, min(half_width, omega0))]
        if half_width > omega0:
            pieces.append((right_only, omega0, half_width))
        if lower > 0:
            pieces.append((tail, 0.0, lower))

        budget = (self.atol / scale if scale > 0 else self.atol) / len(pieces)
        total, error, magnitude = 0.0, 0.0, 0.0
        for func, start, stop in pieces:
            value, err = self._integrate(func, start, stop, step, budget, kappa)
            total += value
            error += err
            magnitude += abs(value)

        chi = core + scale * total
        achieved = scale * error
        tolerance = max(self.atol, self.rtol * max(abs(chi), scale * magnitude))
        if achieved > tolerance:
            self._log.error(
                "quadrature did not converge: achieved error %.3e above tolerance %.3e", achieved, tolerance
            )
            raise QuadratureError("spectral quadrature did not converge", achieved, tolerance)
        return max(chi, 0.0)

    def _integrate(self, func, start: float, stop: float, step: float, budget: float, kappa: float):
        if stop <= start:
            return 0.0, 0.0
        count = max(1, int(math.ceil((stop - start) / step)))
        count = min(count, QUAD_MAX_SEGMENTS)
        width = (stop - start) / count
        offsets = start + width * np.arange(count)

        def stacked(u: float) -> float:
            return float(np.sum(func(np.minimum(offsets + u, stop))))

        points: Optional[Tuple[float, ...]] = None
        if start == 0.0 and 0.0 < 50.0 * kappa < width:
            points = (50.0 * kappa,)
        result = integrate.quad(
            stacked,
            0.0,
            width,
            epsabs=budget,
            epsrel=0.5 * self.rtol,
            limit=QUAD_SUBDIVISIONS,
            points=points,
            full_output=1,
        )
        value, err = result[0], result[1]
        if len(result) > 3:
            self._log.debug("piece [%.6e, %.6e] over %d segments: %s", start, stop, count, result[3])
        return value, err


def chi_spectral_quadrature(
    seq: PulseSequence,
    spectrum: NoiseSpectrum,
    *,
    atol: float = QUAD_ATOL,
    rtol: float = QUAD_RTOL,
) -> float:
    return SpectralQuadrature(atol=atol, rtol=rtol)(seq, spectrum)


# -- background and traces ---------------------------------------------------
def background_coherence(
    n_pulses: int,
    t: ArrayLike,
    spec: SystemSpec,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> ArrayLike:
    """exp[-t/T1 - (t / (T2 N^s))^3] restricted to the selected mechanisms."""

    _check_pulses(n_pulses)
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValueError("t must be non-negative")
    selected = set(mechanisms)
    exponent = np.zeros_like(times)
    if Mechanism.T1 in selected and math.isfinite(spec.qubit_t1):
        exponent = exponent - times / spec.qubit_t1
    if Mechanism.T2 in selected and math.isfinite(spec.qubit_t2):
        t2_n = spec.qubit_t2 * n_pulses**spec.t2_scaling_exponent
        exponent = exponent - (times / t2_n) ** 3
    value = np.exp(exponent)
    return float(value) if value.ndim == 0 else value


def build_spectrum(spec: SystemSpec, kind: str = "delta") -> NoiseSpectrum:
    if kind == "delta":
        return DeltaLine.from_spec(spec)
    if kind == "lorentzian":
        return Lorentzian.from_spec(spec)
    raise SpectrumError(f"unknown spectrum kind {kind!r}; expected one of {SPECTRUM_KINDS}")


def chi_cpmg(
    spec: SystemSpec,
    n_pulses: int,
    times: ArrayLike,
    *,
    spectrum: str = "delta",
    route: str = "closed",
    strict_parity: bool = False,
) -> np.ndarray:
    """Dephasing exponent of an N-pulse CPMG sequence along a time grid."""

    if route not in CHI_ROUTES:
        raise ValueError(f"unknown chi route {route!r}; expected one of {CHI_ROUTES}")
    grid = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(grid < 0):
        raise ValueError("times must be non-negative")
    if spectrum == "lorentzian" and route != "quadrature":
        raise SpectrumError("a Lorentzian spectrum needs the quadrature route")
    if route == "closed":
        if spectrum != "delta":
            raise SpectrumError(f"unknown spectrum kind {spectrum!r}")
        return np.asarray(
            chi_cpmg_closed(n_pulses, spec.omega0, spec.lambda_tilde_sq, grid, strict_parity=strict_parity),
            dtype=float,
        )

    _check_pulses(n_pulses)
    line = build_spectrum(spec, spectrum)
    chi = np.zeros_like(grid)
    for index, value in enumerate(grid):
        if value == 0:
            continue
        seq = PulseSequence.cpmg(n_pulses, float(value))
        if route == "piecewise":
            chi[index] = chi_delta_general(seq, line)
        else:
            chi[index] = chi_spectral_quadrature(seq, line)
    return chi


def coherence_trace(
    spec: SystemSpec,
    n_pulses: int,
    times: ArrayLike,
    *,
    spectrum: str = "delta",
    route: str = "closed",
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
    strict_parity: bool = False,
) -> CoherenceTrace:
    grid = np.atleast_1d(np.asarray(times, dtype=float))
    if grid.size > 1 and np.any(np.diff(grid) < 0):
        raise ValueError("times must be sorted")
    chi = chi_cpmg(spec, n_pulses, grid, spectrum=spectrum, route=route, strict_parity=strict_parity)
    l_ideal = np.exp(-0.5 * chi)
    l_bg = np.asarray(background_coherence(n_pulses, grid, spec, mechanisms), dtype=float)
    l_bg = np.broadcast_to(l_bg, grid.shape).copy()
    return CoherenceTrace(times=grid, l_ideal=l_ideal, l_bg=l_bg, l_total=l_ideal * l_bg)


def coherence_at(
    spec: SystemSpec,
    n_pulses: int,
    t: float,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> float:
    """Total coherence at one time; finite Q is included through quadrature when selected."""

    selected = frozenset(mechanisms)
    lorentzian = Mechanism.Q in selected and math.isfinite(spec.quality_factor)
    trace = coherence_trace(
        spec,
        n_pulses,
        [t],
        spectrum="lorentzian" if lorentzian else "delta",
        route="quadrature" if lorentzian else "closed",
        mechanisms=selected,
    )
    return float(trace.l_total[0])


__all__ = [
    "CHI_ROUTES",
    "SPECTRUM_KINDS",
    "SpectralQuadrature",
    "background_coherence",
    "build_spectrum",
    "chi_cpmg",
    "chi_cpmg_closed",
    "chi_delta_general",
    "chi_spectral_quadrature",
    "coherence_at",
    "coherence_trace",
    "comb_regime",
    "cpmg_filter_power",
    "divergence_mask",
    "envelope_gamma",
    "filter_power",
    "modulation_integral",
]
