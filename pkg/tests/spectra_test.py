from __future__ import annotations

import math
import time

import pytest

from core.entities import Mechanism, PulseSequence
from core.errors import SpectrumError
from core.services.coherence import SpectralQuadrature, chi_delta_general, chi_spectral_quadrature
from core.services.sensitivity import chi_lorentzian_at_peak, peak_catalog, qstar
from core.spectra import DeltaLine, Lorentzian


def test_lorentzian_window_weight_and_density() -> None:
    line = Lorentzian(2.0, 10.0, 0.5)
    assert line.window_weight(-1e12, 1e12) == pytest.approx(2.0, rel=1e-9)
    assert line.window_weight(9.5, 10.5) == pytest.approx(1.0)
    assert line.density(10.0) == pytest.approx(4.0)
    assert line.linewidth == 0.5


def test_delta_line_weight_is_all_or_nothing() -> None:
    line = DeltaLine(3.0, 10.0)
    assert line.window_weight(0.0, 20.0) == 3.0
    assert line.window_weight(11.0, 20.0) == 0.0
    assert line.linewidth == 0.0
    with pytest.raises(SpectrumError):
        line.density(10.0)


def test_spectrum_validation(comb_spec) -> None:
    with pytest.raises(SpectrumError):
        Lorentzian(1.0, 10.0, 0.0)
    with pytest.raises(SpectrumError):
        DeltaLine(-1.0, 10.0)
    with pytest.raises(SpectrumError):
        Lorentzian.from_spec(comb_spec)


def test_delta_route_rejects_lorentzian() -> None:
    seq = PulseSequence.cpmg(2, 1e-5)
    with pytest.raises(SpectrumError):
        chi_delta_general(seq, Lorentzian(1.0, 10.0, 0.5))


def test_quadrature_tolerances_must_be_positive() -> None:
    with pytest.raises(ValueError):
        SpectralQuadrature(atol=0.0)


def test_quadrature_passes_delta_line_through(comb_spec) -> None:
    seq = PulseSequence.cpmg(4, 2.3e-5)
    line = DeltaLine.from_spec(comb_spec)
    assert chi_spectral_quadrature(seq, line) == chi_delta_general(seq, line)


@pytest.mark.parametrize("quality_factor, rel", [(1e5, 3e-3), (1e6, 1e-3), (1e7, 1e-3), (1e15, 1e-6)])
def test_lorentzian_tends_to_delta_line(comb_spec, quality_factor: float, rel: float) -> None:
    spec = comb_spec.replace(quality_factor=quality_factor)
    seq = PulseSequence.cpmg(10, 3.3 * spec.period)

    broad = chi_spectral_quadrature(seq, Lorentzian.from_spec(spec))
    sharp = chi_delta_general(seq, DeltaLine.from_spec(spec))
    assert broad == pytest.approx(sharp, rel=rel)


@pytest.mark.parametrize("n_pulses, low, high", [(20, 0.19, 0.25), (100, 0.27, 0.32)])
def test_lorentzian_peak_exponent_against_closed_value(sensing_spec, n_pulses: int, low: float, high: float) -> None:
    closed = chi_lorentzian_at_peak(sensing_spec, n_pulses, route="closed")
    integrated = chi_lorentzian_at_peak(sensing_spec, n_pulses, route="quadrature")

    # the closed expression overstates the integrated exponent by about 1 / 0.3
    assert low < integrated / closed < high


def test_closed_peak_exponent_value(sensing_spec) -> None:
    n_pulses = 126
    expected = 4.0 * sensing_spec.lambda_tilde_sq * n_pulses**3 / (sensing_spec.omega0**2 * sensing_spec.quality_factor)
    assert chi_lorentzian_at_peak(sensing_spec, n_pulses) == pytest.approx(expected)
    assert chi_lorentzian_at_peak(sensing_spec.replace(quality_factor=math.inf), n_pulses) == 0.0


@pytest.mark.parametrize("n_pulses", [20, 100])
def test_off_peak_exponents_come_from_quadrature(sensing_spec, n_pulses: int) -> None:
    lorentzian = Lorentzian.from_spec(sensing_spec)
    top = qstar(n_pulses)
    previous = 0.0
    for q in (n_pulses // 4, top - 1):
        integrated = chi_spectral_quadrature(PulseSequence.cpmg(n_pulses, q * sensing_spec.period), lorentzian)
        assert chi_lorentzian_at_peak(sensing_spec, n_pulses, route="closed", q=q) == pytest.approx(integrated)
        assert chi_lorentzian_at_peak(sensing_spec, n_pulses, route="quadrature", q=q) == pytest.approx(integrated)
        assert integrated > previous
        previous = integrated
    at_top = chi_lorentzian_at_peak(sensing_spec, n_pulses, route="quadrature")
    assert previous < at_top < chi_lorentzian_at_peak(sensing_spec, n_pulses, route="closed")


def test_catalog_heights_use_integrated_exponents(sensing_spec) -> None:
    peaks = peak_catalog(sensing_spec, 20, {Mechanism.Q})
    lorentzian = Lorentzian.from_spec(sensing_spec)
    for peak in peaks[:-1]:
        chi = chi_spectral_quadrature(PulseSequence.cpmg(20, peak.center), lorentzian)
        assert peak.height == pytest.approx(math.exp(-0.5 * chi))
    assert peaks[-1].height == pytest.approx(math.exp(-0.5 * chi_lorentzian_at_peak(sensing_spec, 20)))


def test_lorentzian_approach_to_delta_line_is_monotone(comb_spec) -> None:
    seq = PulseSequence.cpmg(10, 3.3 * comb_spec.period)
    sharp = chi_delta_general(seq, DeltaLine.from_spec(comb_spec))
    gaps = []
    for quality_factor in (1e3, 1e4, 1e5, 1e6):
        spec = comb_spec.replace(quality_factor=quality_factor)
        broad = chi_spectral_quadrature(seq, Lorentzian.from_spec(spec), rtol=1e-9)
        gaps.append(abs(broad - sharp))
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-3 * sharp


def test_quadrature_for_long_pulse_trains_is_fast(sensing_spec) -> None:
    spec = sensing_spec.replace(temperature=1.0)
    seq = PulseSequence.cpmg(844, qstar(844) * spec.period)

    start = time.perf_counter()
    chi = chi_spectral_quadrature(seq, Lorentzian.from_spec(spec))
    elapsed = time.perf_counter() - start

    assert math.isfinite(chi) and chi > 0.0
    assert elapsed < 10.0
