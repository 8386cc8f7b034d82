from __future__ import annotations

import dataclasses
import logging
import math
from functools import partial
from typing import Iterable, List, Sequence

import numpy as np

from ..entities import (
    BACKGROUND_MECHANISMS,
    CampaignSummary,
    CoherenceEstimate,
    EstimateReport,
    MeasurementPlan,
    Mechanism,
    SystemSpec,
)
from ..errors import CollapsedCoherenceError, CombSenseError
from .coherence import coherence_at
from .parallel import map_ordered
from .sensitivity import mass_shift_from_coherence, peak_gamma, qstar, sensitivity_full

logger = logging.getLogger(__name__)

# Trials per random stream; counts never depend on how chunks are scheduled.
CHUNK_TRIALS = 1 << 16
REFERENCE_ROLE = 0
PERTURBED_ROLE = 1
MIN_REFERENCE_COHERENCE = 0.1


def readout_probability(coherence: float, contrast: float) -> float:
    return 0.5 + 0.5 * contrast * coherence


def _stream(seed: int, role: int, chunk: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(role, chunk))
    return np.random.Generator(np.random.Philox(sequence))


def simulate_readout(
    plan: MeasurementPlan,
    true_spec: SystemSpec,
    role: int = REFERENCE_ROLE,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> int:
    """Number of 1-outcomes among ``plan.n_runs`` single-shot readouts."""

    coherence = coherence_at(true_spec, plan.n_pulses, plan.measurement_time, mechanisms)
    probability = readout_probability(coherence, plan.contrast)
    if not 0.0 <= probability <= 1.0 or math.isnan(probability):
        raise CombSenseError(f"readout probability {probability!r} outside [0, 1]")

    counts = 0
    remaining = plan.n_runs
    chunk = 0
    while remaining > 0:
        size = min(CHUNK_TRIALS, remaining)
        counts += int(_stream(plan.seed, role, chunk).binomial(size, probability))
        remaining -= size
        chunk += 1
    return counts


def estimate_coherence(counts: int, n_runs: int, contrast: float) -> CoherenceEstimate:
    """Invert p = 1/2 + C L / 2 with the binomial standard error."""

    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if not 0 <= counts <= n_runs:
        raise ValueError("counts must lie in [0, n_runs]")
    if not 0 < contrast <= 1:
        raise ValueError("contrast must lie in (0, 1]")
    p_hat = counts / n_runs
    value = (2.0 * p_hat - 1.0) / contrast
    sigma = 2.0 * math.sqrt(p_hat * (1.0 - p_hat) / n_runs) / contrast
    clamped = not -1.0 <= value <= 1.0
    if clamped:
        value = min(1.0, max(-1.0, value))
    return CoherenceEstimate(value=value, sigma=sigma, clamped=clamped)


def _ratio_sigma(l_ref: float, l_pert: float, sigma_ref: float, sigma_pert: float) -> float:
    """Standard error of l_pert / l_ref - 1 to first order."""

    return math.hypot(sigma_pert / l_ref, l_pert * sigma_ref / l_ref**2)


def _flank_geometry(spec: SystemSpec, plan: MeasurementPlan):
    top = qstar(plan.n_pulses)
    if top < 1:
        raise ValueError("N = 2 has no comb peak to operate on")
    t_qstar = top * spec.period
    return peak_gamma(spec, plan.n_pulses, top), plan.measurement_time - t_qstar, t_qstar


def estimate_mass_shift(
    reference_spec: SystemSpec,
    plan: MeasurementPlan,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> EstimateReport:
    """Two-point protocol: reference readouts, perturbed readouts, flank inversion."""

    selected = frozenset(mechanisms)
    gamma, t_offset, t_qstar = _flank_geometry(reference_spec, plan)
    perturbed = reference_spec.with_mass_shift(plan.mass_shift)

    reference = estimate_coherence(
        simulate_readout(plan, reference_spec, REFERENCE_ROLE, selected), plan.n_runs, plan.contrast
    )
    if reference.value < MIN_REFERENCE_COHERENCE:
        raise CollapsedCoherenceError(
            f"reference coherence {reference.value:.3g} is below {MIN_REFERENCE_COHERENCE}; "
            "the operating point has lost the peak"
        )
    shifted = estimate_coherence(
        simulate_readout(plan, perturbed, PERTURBED_ROLE, selected), plan.n_runs, plan.contrast
    )

    ratio = shifted.value / reference.value - 1.0
    ratio_sigma = _ratio_sigma(reference.value, shifted.value, reference.sigma, shifted.sigma)
    mass_shift = mass_shift_from_coherence(ratio, gamma, t_offset, t_qstar)
    sigma_mass_shift = abs(mass_shift_from_coherence(ratio_sigma, gamma, t_offset, t_qstar))
    total_time = plan.n_runs * t_qstar

    return EstimateReport(
        seed=plan.seed,
        l_ref=reference.value,
        l_pert=shifted.value,
        sigma_l_ref=reference.sigma,
        sigma_l_pert=shifted.sigma,
        mass_shift=mass_shift,
        sigma_mass_shift=sigma_mass_shift,
        sigma_bound=1.0 / (plan.contrast * math.sqrt(plan.n_runs)),
        total_time=total_time,
        eta_achieved=sigma_mass_shift * reference_spec.mass * math.sqrt(total_time),
        eta_predicted=sensitivity_full(
            reference_spec.replace(readout_contrast=plan.contrast), plan.n_pulses, selected
        ),
        clamped=reference.clamped or shifted.clamped,
    )


def predicted_mass_uncertainty(
    reference_spec: SystemSpec,
    plan: MeasurementPlan,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> float:
    """Shot-noise standard error of the two-point estimate, from the exact readout probabilities."""

    selected = frozenset(mechanisms)
    gamma, t_offset, t_qstar = _flank_geometry(reference_spec, plan)
    perturbed = reference_spec.with_mass_shift(plan.mass_shift)

    def spread(spec: SystemSpec):
        coherence = coherence_at(spec, plan.n_pulses, plan.measurement_time, selected)
        p = readout_probability(coherence, plan.contrast)
        return coherence, 2.0 * math.sqrt(p * (1.0 - p) / plan.n_runs) / plan.contrast

    l_ref, sigma_ref = spread(reference_spec)
    l_pert, sigma_pert = spread(perturbed)
    ratio_sigma = _ratio_sigma(l_ref, l_pert, sigma_ref, sigma_pert)
    return abs(mass_shift_from_coherence(ratio_sigma, gamma, t_offset, t_qstar))


def _estimate_for_seed(
    reference_spec: SystemSpec, plan: MeasurementPlan, mechanisms: frozenset, seed: int
) -> EstimateReport:
    return estimate_mass_shift(reference_spec, dataclasses.replace(plan, seed=seed), mechanisms)


def run_campaign(
    reference_spec: SystemSpec,
    plan: MeasurementPlan,
    seeds: Sequence[int],
    workers: int = 1,
    mechanisms: Iterable[Mechanism] = BACKGROUND_MECHANISMS,
) -> List[EstimateReport]:
    """One report per distinct seed, ordered by seed."""

    ordered = sorted({int(seed) for seed in seeds})
    if not ordered:
        raise ValueError("a campaign needs at least one seed")
    logger.info("campaign: %d seeds, N_run=%d, workers=%d", len(ordered), plan.n_runs, workers)
    task = partial(_estimate_for_seed, reference_spec, plan, frozenset(mechanisms))
    reports = map_ordered(task, ordered, workers)
    logger.info("campaign finished: %d reports", len(reports))
    return sorted(reports, key=lambda report: report.seed)


def summarize_campaign(reports: Sequence[EstimateReport]) -> CampaignSummary:
    if not reports:
        raise ValueError("no reports to summarise")
    shifts = np.array([report.mass_shift for report in reports])
    count = shifts.size
    std = float(shifts.std(ddof=1)) if count > 1 else 0.0
    return CampaignSummary(
        n_seeds=count,
        mean=float(shifts.mean()),
        std=std,
        standard_error=std / math.sqrt(count),
        sigma_mass_shift_mean=float(np.mean([report.sigma_mass_shift for report in reports])),
        eta_achieved_mean=float(np.mean([report.eta_achieved for report in reports])),
        eta_predicted=reports[0].eta_predicted,
    )


__all__ = [
    "CHUNK_TRIALS",
    "MIN_REFERENCE_COHERENCE",
    "PERTURBED_ROLE",
    "REFERENCE_ROLE",
    "estimate_coherence",
    "estimate_mass_shift",
    "predicted_mass_uncertainty",
    "readout_probability",
    "run_campaign",
    "simulate_readout",
    "summarize_campaign",
]
