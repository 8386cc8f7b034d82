from __future__ import annotations

import math

import numpy as np
import pytest

from core.entities import ALL_MECHANISMS, Mechanism
from core.errors import BracketError, FlankError
from core.services.coherence import coherence_trace
from core.services.sensitivity import (
    fit_peak_gamma,
    mass_shift_from_coherence,
    missing_peak_indices,
    operating_point,
    optimal_n_analytic,
    optimal_sensitivity_bound,
    optimize_sensitivity_numeric,
    peak_catalog,
    peak_gamma,
    qstar,
    sensitivity_curve,
    sensitivity_full,
    sensitivity_ideal,
    sensitivity_record,
    width_eq4,
)


# -- comb peaks ----------------------------------------------------------------
def test_narrowest_peak_of_hundred_pulse_comb(comb_spec) -> None:
    assert qstar(100) == 49
    assert qstar(100) * comb_spec.period == pytest.approx(4.9e-4)
    assert width_eq4(comb_spec, 100) == pytest.approx(4.9e-8, rel=0.02)


def test_qstar_needs_even_count() -> None:
    with pytest.raises(ValueError):
        qstar(7)
    assert qstar(2) == 0


def test_missing_peaks() -> None:
    assert missing_peak_indices(4, 2) == [2]
    assert missing_peak_indices(100, 150) == [50, 150]


def test_catalog_for_four_pulses(comb_spec) -> None:
    peaks = peak_catalog(comb_spec, 4)
    assert [peak.q for peak in peaks] == [1]
    assert peaks[0].narrowest
    assert peaks[0].height == 1.0


def test_catalog_heights_include_selected_decay(sensing_spec) -> None:
    peaks = peak_catalog(sensing_spec, 20, ALL_MECHANISMS)
    assert [peak.q for peak in peaks] == list(range(1, 10))
    assert [peak.narrowest for peak in peaks].count(True) == 1
    heights = [peak.height for peak in peaks]
    assert all(0.0 < height < 1.0 for height in heights)
    assert heights == sorted(heights, reverse=True)
    gammas = [peak.gamma for peak in peaks]
    assert gammas == sorted(gammas)


@pytest.mark.parametrize("q", [40, 49])
def test_gaussian_fit_recovers_peak_rate(comb_spec, q: int) -> None:
    gamma = peak_gamma(comb_spec, 100, q)
    center = q * comb_spec.period
    times = center + np.linspace(-2.5, 2.5, 301) / gamma
    trace = coherence_trace(comb_spec, 100, times, mechanisms=())

    fitted, fitted_center, amplitude = fit_peak_gamma(times, trace.l_ideal)

    assert fitted == pytest.approx(gamma, rel=0.02)
    assert abs(fitted_center - center) < 0.05 / gamma
    assert amplitude == pytest.approx(1.0, rel=0.01)


def test_gaussian_fit_at_quarter_comb(sensing_spec) -> None:
    gamma = peak_gamma(sensing_spec, 100, 25)
    center = 25 * sensing_spec.period
    times = center + np.linspace(-2.5, 2.5, 301) / gamma
    trace = coherence_trace(sensing_spec, 100, times, mechanisms=())

    fitted, fitted_center, _ = fit_peak_gamma(times, trace.l_ideal)

    assert fitted == pytest.approx(gamma, rel=0.03)
    assert abs(fitted_center - center) < 0.05 / gamma


def test_gaussian_fit_needs_finite_samples() -> None:
    with pytest.raises(ValueError):
        fit_peak_gamma([0.0, 1.0], [1.0, 0.5])
    times = np.linspace(0.0, 1.0, 50)
    with pytest.raises(ValueError):
        fit_peak_gamma(times, np.full(50, np.nan))


# -- flank inversion -------------------------------------------------------------
def test_mass_shift_from_coherence_example() -> None:
    assert mass_shift_from_coherence(0.01, 1.0, 1.0, 1.0e4) == pytest.approx(2.0e-6)


def test_frequency_shift_round_trip() -> None:
    gamma, t_offset, t_qstar = 2.0, 0.5, 3.0e3
    # A relative frequency drop of 1e-7 moves the peak by 1e-7 t_q.
    delta_l_over_l = gamma**2 * t_offset * t_qstar * 1.0e-7
    assert mass_shift_from_coherence(delta_l_over_l, gamma, t_offset, t_qstar) == pytest.approx(2.0e-7)


def test_mass_shift_from_exact_trace(comb_spec) -> None:
    t_op = operating_point(comb_spec, 100)
    t_qstar = 49 * comb_spec.period
    gamma = peak_gamma(comb_spec, 100, 49)
    assert gamma * (t_op - t_qstar) == pytest.approx(1.0)

    # a 1e-7 drop in omega0 is what a 2e-7 mass increase does at fixed spring constant
    shifted = comb_spec.replace(f0=comb_spec.f0 * (1.0 - 1.0e-7))
    l_ref = coherence_trace(comb_spec, 100, [t_op], mechanisms=()).l_ideal[0]
    l_pert = coherence_trace(shifted, 100, [t_op], mechanisms=()).l_ideal[0]

    recovered = mass_shift_from_coherence(l_pert / l_ref - 1.0, gamma, t_op - t_qstar, t_qstar)
    assert recovered == pytest.approx(2.0e-7, rel=0.1)


@pytest.mark.parametrize("t_offset", [0.1, 5.0, -4.0])
def test_flank_outside_usable_range(t_offset: float) -> None:
    with pytest.raises(FlankError):
        mass_shift_from_coherence(0.01, 1.0, t_offset, 1.0e4)


def test_operating_point_sits_on_late_flank(comb_spec) -> None:
    gamma = peak_gamma(comb_spec, 100, 49)
    assert operating_point(comb_spec, 100) == pytest.approx(4.9e-4 + 1.0 / gamma)
    with pytest.raises(FlankError):
        operating_point(comb_spec, 100, offset=0.05)
    with pytest.raises(ValueError):
        operating_point(comb_spec, 2)


# -- sensitivity ------------------------------------------------------------------
def test_ideal_sensitivity_scales_as_three_halves(sensing_spec) -> None:
    ratio = sensitivity_ideal(sensing_spec, 64) / sensitivity_ideal(sensing_spec, 32)
    assert ratio == pytest.approx(2.0**-1.5, rel=1e-12)


def test_ideal_sensitivity_needs_temperature(sensing_spec) -> None:
    with pytest.raises(ValueError):
        sensitivity_ideal(sensing_spec.replace(temperature=0.0), 10)


def test_contrast_divides_sensitivity(sensing_spec) -> None:
    full = sensitivity_full(sensing_spec, 126)
    halved = sensitivity_full(sensing_spec.replace(readout_contrast=0.5), 126)
    assert halved == pytest.approx(2.0 * full)


@pytest.mark.parametrize("contrast", [1.0, 0.3, 0.1])
def test_contrast_sweep_scales_full_sensitivity(sensing_spec, contrast: float) -> None:
    reduced = sensitivity_full(sensing_spec.replace(readout_contrast=contrast), 126, ALL_MECHANISMS)
    assert reduced * contrast == pytest.approx(sensitivity_full(sensing_spec, 126, ALL_MECHANISMS), rel=1e-12)


def test_record_keeps_contrast_out_of_ideal_column(sensing_spec) -> None:
    spec = sensing_spec.replace(readout_contrast=0.5)
    record = sensitivity_record(spec, 126)
    assert record.eta_ideal == pytest.approx(sensitivity_ideal(spec, 126))
    assert record.eta_all == pytest.approx(sensitivity_full(spec, 126))
    for partial in (record.eta_t1, record.eta_t2, record.eta_q):
        assert partial >= 2.0 * record.eta_ideal


def test_record_ordering(sensing_spec) -> None:
    record = sensitivity_record(sensing_spec, 126)
    for partial in (record.eta_t1, record.eta_t2, record.eta_q):
        assert record.eta_ideal <= partial <= record.eta_all
    assert record.eta_all == pytest.approx(sensitivity_full(sensing_spec, 126))
    assert record.eta_q == pytest.approx(sensitivity_full(sensing_spec, 126, {Mechanism.Q}))


def test_curve_is_sorted_and_deduplicated(sensing_spec) -> None:
    curve = sensitivity_curve(sensing_spec, [8, 2, 4, 8])
    assert list(curve.n_values) == [2, 4, 8]
    assert curve.temperature == 300.0
    assert np.all(np.diff(curve.column("eta_ideal")) < 0)
    with pytest.raises(ValueError):
        sensitivity_curve(sensing_spec, [3])


# -- optima -----------------------------------------------------------------------
def test_analytic_optimum(sensing_spec) -> None:
    assert optimal_n_analytic(sensing_spec) == 126
    assert optimal_n_analytic(sensing_spec.replace(temperature=1.0)) == 844
    assert optimal_n_analytic(sensing_spec.replace(quality_factor=8.0e9)) == 252


def test_optimal_bound(sensing_spec) -> None:
    assert optimal_sensitivity_bound(sensing_spec) == pytest.approx(2.3e-23)
    hundredfold = optimal_sensitivity_bound(sensing_spec.replace(quality_factor=1.0e11))
    assert hundredfold == pytest.approx(2.3e-24)


def test_finite_q_optimum_matches_analytic_one(sensing_spec) -> None:
    result = optimize_sensitivity_numeric(sensing_spec, mode="q_only")
    assert result.n_opt_numeric == 126
    assert result.n_opt_analytic == 126
    assert result.chi_at_optimum == pytest.approx(1.0, rel=0.01)
    assert result.eta_opt_numeric == pytest.approx(2.3e-23 * math.exp(0.5), rel=0.02)


def test_finite_q_optimum_is_temperature_independent(sensing_spec) -> None:
    warm = optimize_sensitivity_numeric(sensing_spec, mode="q_only")
    cold = optimize_sensitivity_numeric(sensing_spec.replace(temperature=1.0), mode="q_only")
    assert cold.n_opt_numeric == 844
    assert cold.eta_opt_numeric == pytest.approx(warm.eta_opt_numeric, rel=0.01)


def test_full_optimum_at_room_temperature(sensing_spec) -> None:
    result = optimize_sensitivity_numeric(sensing_spec, mode="all")
    assert 100 <= result.n_opt_numeric <= 140
    assert 0.3 <= result.chi_at_optimum <= 3.0
    assert result.eta_opt_eq8 == pytest.approx(2.3e-23)


def test_scan_that_misses_the_minimum(sensing_spec) -> None:
    with pytest.raises(BracketError):
        optimize_sensitivity_numeric(sensing_spec, n_values=range(2, 60, 2), mode="all")
    ideal = optimize_sensitivity_numeric(sensing_spec, n_values=range(2, 60, 2), mode="ideal")
    assert ideal.n_opt_numeric == 58


def test_unknown_mode(sensing_spec) -> None:
    with pytest.raises(ValueError):
        optimize_sensitivity_numeric(sensing_spec, mode="everything")
