from __future__ import annotations

import logging
import math
from functools import partial
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

from ..constants import BOLTZMANN, HBAR, PLANCK
from ..entities import (
    ALL_MECHANISMS,
    BACKGROUND_MECHANISMS,
    Mechanism,
    OptimizationResult,
    PeakDescriptor,
    PulseSequence,
    SensitivityCurve,
    SensitivityRecord,
    SystemSpec,
    parse_mechanisms,
)
from ..errors import BracketError, ComputationError, FlankError
from ..spectra import Lorentzian
from .coherence import background_coherence, chi_spectral_quadrature
from .parallel import map_ordered

logger = logging.getLogger(__name__)

Q_ROUTES = ("closed", "quadrature")
OPTIMIZE_MODES = {
    "all": ALL_MECHANISMS,
    "q_only": frozenset({Mechanism.Q}),
    "ideal": frozenset(),
}

FLANK_MIN = 0.3
FLANK_MAX = 3.0
LOW_OCCUPATION = 10.0


def _check_even(n_pulses: int) -> None:
    if isinstance(n_pulses, bool) or int(n_pulses) != n_pulses or n_pulses < 2 or n_pulses % 2:
        raise ValueError(f"comb analysis needs an even pulse count N >= 2, got {n_pulses!r}")


def _check_route(q_route: str) -> None:
    if q_route not in Q_ROUTES:
        raise ValueError(f"unknown Lorentzian route {q_route!r}; expected one of {Q_ROUTES}")


# -- comb peaks ----------------------------------------------------------------
def qstar(n_pulses: int) -> int:
    """Index of the narrowest peak before the first missing one."""

    _check_even(n_pulses)
    return n_pulses // 2 - 1


def peak_gamma(spec: SystemSpec, n_pulses: int, q: int) -> float:
    """Gaussian rate lambda~ (sec(pi q / N) - 1) of peak ``q``, 1/s."""

    _check_even(n_pulses)
    phase = math.pi * q / n_pulses
    cosine = math.cos(phase)
    if abs(cosine) < 1e-15:
        return math.inf
    return math.sqrt(spec.lambda_tilde_sq) * abs(2.0 * math.sin(0.5 * phase) ** 2 / cosine)


def width_eq4(spec: SystemSpec, n_pulses: int) -> float:
    """Printed narrowest-peak width T0 / (N Lambda sqrt(2 n_th + 1)), s."""

    _check_even(n_pulses)
    return spec.period / (n_pulses * spec.coupling_ratio * math.sqrt(2.0 * spec.thermal_occupation + 1.0))


def missing_peak_indices(n_pulses: int, q_max: int) -> List[int]:
    """Peak indices in ``1..q_max`` that are odd multiples of N/2."""

    _check_even(n_pulses)
    half = n_pulses // 2
    return [q for q in range(1, q_max + 1) if q % half == 0 and (q // half) % 2 == 1]


def chi_lorentzian_at_peak(
    spec: SystemSpec,
    n_pulses: int,
    route: str = "closed",
    q: Optional[int] = None,
) -> float:
    """Finite-Q dephasing exponent at a comb peak (the narrowest by default).

    ``closed`` evaluates 4 lambda~^2 N^3 / (omega0^2 Q) at the narrowest peak.
    That expression only covers q*, so other peaks fall back to the quadrature
    under either route. ``quadrature`` integrates the Lorentzian spectrum
    against the filter.
    """

    _check_even(n_pulses)
    _check_route(route)
    if not math.isfinite(spec.quality_factor):
        return 0.0
    top = qstar(n_pulses)
    index = top if q is None else int(q)
    if index <= 0:
        return 0.0
    if route == "closed" and index == top:
        return 4.0 * spec.lambda_tilde_sq * n_pulses**3 / (spec.omega0**2 * spec.quality_factor)
    seq = PulseSequence.cpmg(n_pulses, index * spec.period)
    return chi_spectral_quadrature(seq, Lorentzian.from_spec(spec))


def peak_catalog(
    spec: SystemSpec,
    n_pulses: int,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
    q_route: str = "closed",
) -> List[PeakDescriptor]:
    """Peaks of the first comb segment, q = 1 .. N/2 - 1."""

    _check_even(n_pulses)
    _check_route(q_route)
    selected = frozenset(mechanisms)
    top = qstar(n_pulses)
    printed = width_eq4(spec, n_pulses)
    lorentzian = Mechanism.Q in selected and math.isfinite(spec.quality_factor)

    peaks: List[PeakDescriptor] = []
    for q in range(1, top + 1):
        center = q * spec.period
        gamma = peak_gamma(spec, n_pulses, q)
        height = float(background_coherence(n_pulses, center, spec, selected))
        if lorentzian:
            height *= math.exp(-0.5 * chi_lorentzian_at_peak(spec, n_pulses, q_route, q=q))
        peaks.append(
            PeakDescriptor(
                q=q,
                center=center,
                gamma=gamma,
                width=2.0 * math.sqrt(2.0) / gamma,
                width_eq4=printed,
                height=height,
                narrowest=q == top,
            )
        )
    return peaks


def _gaussian(x: np.ndarray, amplitude: float, center: float, rate: float) -> np.ndarray:
    return amplitude * np.exp(-0.5 * (rate * (x - center)) ** 2)


def fit_peak_gamma(times: Sequence[float], values: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares Gaussian fit ``A exp(-gamma^2 (t - c)^2 / 2)``; returns (gamma, c, A)."""

    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.size < 4:
        raise ValueError("need at least four matching samples to fit a peak")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("fit samples must be finite")

    top = int(np.argmax(y))
    origin = t[top]
    span = float(t.max() - t.min())
    if span <= 0:
        raise ValueError("fit window has zero width")
    x = (t - origin) / span
    above = x[y >= 0.5 * y[top]]
    half_width = max(0.5 * float(above.max() - above.min()), 1.0 / t.size)
    guess = (float(y[top]), 0.0, math.sqrt(2.0 * math.log(2.0)) / half_width)
    try:
        popt, _ = curve_fit(_gaussian, x, y, p0=guess, maxfev=10000)
    except (RuntimeError, ValueError) as exc:
        raise ComputationError(f"Gaussian peak fit failed: {exc}") from exc
    amplitude, center, rate = popt
    return abs(rate) / span, origin + center * span, float(amplitude)


# -- operating point and flank inversion ------------------------------------------
def _check_flank(gamma: float, t_offset: float) -> None:
    product = abs(gamma * t_offset)
    if not FLANK_MIN <= product <= FLANK_MAX:
        raise FlankError(
            f"|gamma * t_offset| = {product:.3g} is outside [{FLANK_MIN}, {FLANK_MAX}]; "
            "near the peak centre dL/dt vanishes and far out the coherence is gone"
        )


def mass_shift_from_coherence(
    delta_l_over_l: float,
    gamma_qstar: float,
    t_offset: float,
    t_qstar: float,
) -> float:
    """Relative mass change from a relative coherence change on the peak flank.

    A Gaussian peak gives dL/L = gamma^2 t_offset dt_q and dt_q / t_q = -d omega0 / omega0;
    with omega0 = sqrt(k/M) the mass change is twice the frequency change.
    """

    if not gamma_qstar > 0 or not t_qstar > 0:
        raise ValueError("gamma_qstar and t_qstar must be positive")
    _check_flank(gamma_qstar, t_offset)
    return 2.0 * delta_l_over_l / (gamma_qstar**2 * t_offset * t_qstar)


def operating_point(spec: SystemSpec, n_pulses: int, offset: float = 1.0) -> float:
    """Measurement time t_q* + offset / gamma_q* on the late flank of the narrowest peak."""

    top = qstar(n_pulses)
    if top < 1:
        raise ValueError("N = 2 has no comb peak to operate on")
    gamma = peak_gamma(spec, n_pulses, top)
    _check_flank(gamma, offset / gamma)
    return top * spec.period + offset / gamma


# -- sensitivity -------------------------------------------------------------------
def sensitivity_ideal(spec: SystemSpec, n_pulses: int) -> float:
    """Shot-noise mass sensitivity M / ((2N)^(3/2) Lambda sqrt(kT/h)), g/sqrt(Hz)."""

    _check_even(n_pulses)
    if not spec.temperature > 0:
        raise ValueError("the high-temperature sensitivity needs T > 0")
    occupation = spec.thermal_occupation
    if occupation < LOW_OCCUPATION:
        logger.warning("n_th = %.3g is below %g; the high-temperature sensitivity is unreliable", occupation, LOW_OCCUPATION)
    thermal_rate = math.sqrt(BOLTZMANN * spec.temperature / PLANCK)
    return spec.mass / ((2.0 * n_pulses) ** 1.5 * spec.coupling_ratio * thermal_rate)


def _penalties(spec: SystemSpec, n_pulses: int, q_route: str) -> Tuple[float, float, float]:
    t_qstar = qstar(n_pulses) * spec.period
    t1 = 1.0 / float(background_coherence(n_pulses, t_qstar, spec, {Mechanism.T1}))
    t2 = 1.0 / float(background_coherence(n_pulses, t_qstar, spec, {Mechanism.T2}))
    q = math.exp(0.5 * chi_lorentzian_at_peak(spec, n_pulses, q_route))
    return t1, t2, q


def sensitivity_full(
    spec: SystemSpec,
    n_pulses: int,
    mechanisms: Iterable[Mechanism] = ALL_MECHANISMS,
    q_route: str = "closed",
) -> float:
    """Ideal sensitivity degraded by the selected mechanisms and the readout contrast."""

    _check_route(q_route)
    selected = parse_mechanisms(mechanisms)
    eta = sensitivity_ideal(spec, n_pulses) / spec.readout_contrast
    if not selected:
        return eta
    t1, t2, q = _penalties(spec, n_pulses, q_route)
    if Mechanism.T1 in selected:
        eta *= t1
    if Mechanism.T2 in selected:
        eta *= t2
    if Mechanism.Q in selected:
        eta *= q
    return eta


def sensitivity_record(spec: SystemSpec, n_pulses: int, q_route: str = "closed") -> SensitivityRecord:
    """One sweep row: ``eta_ideal`` is the bare shot-noise value, the penalised columns carry 1/C."""

    _check_route(q_route)
    ideal = sensitivity_ideal(spec, n_pulses)
    degraded = ideal / spec.readout_contrast
    t1, t2, q = _penalties(spec, n_pulses, q_route)
    return SensitivityRecord(
        n_pulses=int(n_pulses),
        t_qstar=qstar(n_pulses) * spec.period,
        eta_ideal=ideal,
        eta_t1=degraded * t1,
        eta_t2=degraded * t2,
        eta_q=degraded * q,
        eta_all=degraded * t1 * t2 * q,
    )


def _sorted_even(n_values: Iterable[int]) -> List[int]:
    values = sorted({int(n) for n in n_values})
    if not values:
        raise ValueError("no pulse counts given")
    for n in values:
        _check_even(n)
    return values


def sensitivity_curve(
    spec: SystemSpec,
    n_values: Iterable[int],
    q_route: str = "closed",
    workers: int = 1,
) -> SensitivityCurve:
    values = _sorted_even(n_values)
    records = map_ordered(partial(sensitivity_record, spec, q_route=q_route), values, workers)
    return SensitivityCurve(temperature=spec.temperature, records=tuple(records))


# -- optima ------------------------------------------------------------------------
def optimal_n_analytic(spec: SystemSpec) -> int:
    """Pulse count where the closed finite-Q exponent reaches one, rounded to an even N >= 2."""

    if not math.isfinite(spec.quality_factor):
        raise ValueError("the analytic optimum needs a finite quality factor")
    if not spec.temperature > 0:
        raise ValueError("the analytic optimum needs T > 0")
    ratio = HBAR * spec.coupling * spec.quality_factor / (BOLTZMANN * spec.temperature)
    raw = spec.omega0 / (2.0 * spec.coupling) * ratio ** (1.0 / 3.0)
    return max(2, 2 * int(round(raw / 2.0)))


def optimal_sensitivity_bound(spec: SystemSpec) -> float:
    """Temperature-independent optimum M / sqrt(f0 Q), g/sqrt(Hz)."""

    return spec.mass / math.sqrt(spec.f0 * spec.quality_factor)


def _eta_for(spec: SystemSpec, mechanisms: frozenset, q_route: str, n_pulses: int) -> float:
    return sensitivity_full(spec, n_pulses, mechanisms, q_route)


def optimize_sensitivity_numeric(
    spec: SystemSpec,
    n_values: Optional[Iterable[int]] = None,
    mode: str = "all",
    q_route: str = "closed",
    workers: int = 1,
    require_bracket: Optional[bool] = None,
) -> OptimizationResult:
    """Exhaustive scan over even N; ties go to the smaller N.

    The default scan covers even N in [2, 4 * optimal_n_analytic]. A minimum
    on the edge of the scan raises BracketError unless ``require_bracket`` is
    False; the ideal mode never brackets and defaults to False.
    """

    if mode not in OPTIMIZE_MODES:
        raise ValueError(f"unknown optimisation mode {mode!r}; expected one of {tuple(OPTIMIZE_MODES)}")
    _check_route(q_route)
    analytic_available = math.isfinite(spec.quality_factor) and spec.temperature > 0
    n_analytic = optimal_n_analytic(spec) if analytic_available else 0
    if n_values is None:
        if not analytic_available:
            raise ValueError("pass n_values explicitly when Q is infinite or T = 0")
        n_values = range(2, 4 * n_analytic + 1, 2)
    values = _sorted_even(n_values)
    if require_bracket is None:
        require_bracket = mode != "ideal"

    etas = np.array(map_ordered(partial(_eta_for, spec, OPTIMIZE_MODES[mode], q_route), values, workers))
    best = int(np.argmin(etas))
    if require_bracket and (best == 0 or best == len(values) - 1):
        raise BracketError(
            f"scan N in [{values[0]}, {values[-1]}] puts the minimum on its edge (N = {values[best]}); widen the range"
        )
    n_opt = values[best]
    logger.info("mode=%s: numeric optimum N=%d (analytic %d)", mode, n_opt, n_analytic)
    return OptimizationResult(
        mode=mode,
        n_opt_analytic=n_analytic,
        n_opt_numeric=n_opt,
        eta_opt_numeric=float(etas[best]),
        eta_opt_eq8=optimal_sensitivity_bound(spec) if math.isfinite(spec.quality_factor) else 0.0,
        chi_at_optimum=chi_lorentzian_at_peak(spec, n_opt, q_route),
    )


__all__ = [
    "FLANK_MAX",
    "FLANK_MIN",
    "OPTIMIZE_MODES",
    "Q_ROUTES",
    "chi_lorentzian_at_peak",
    "optimal_sensitivity_bound",
    "fit_peak_gamma",
    "mass_shift_from_coherence",
    "missing_peak_indices",
    "operating_point",
    "optimal_n_analytic",
    "optimize_sensitivity_numeric",
    "peak_catalog",
    "peak_gamma",
    "qstar",
    "sensitivity_curve",
    "sensitivity_full",
    "sensitivity_ideal",
    "sensitivity_record",
    "width_eq4",
]
