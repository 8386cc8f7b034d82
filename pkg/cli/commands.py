from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from core.entities import BACKGROUND_MECHANISMS, MeasurementPlan
from core.services.coherence import coherence_trace, divergence_mask
from core.services.estimator import predicted_mass_uncertainty, run_campaign, summarize_campaign
from core.services.sensitivity import (
    missing_peak_indices,
    operating_point,
    optimize_sensitivity_numeric,
    peak_catalog,
    qstar,
    sensitivity_curve,
    width_eq4,
)

from .config import RunConfig
from .csvio import write_rows

logger = logging.getLogger(__name__)

COMB_HEADER = ("t_seconds", "omega0_t_over_2pi", "L_ideal", "L_bg", "L_total")
PEAKS_HEADER = ("q", "t_q_seconds", "gamma_q", "width_eq4", "width_expansion", "height", "kind")
SENSITIVITY_HEADER = (
    "temperature_K",
    "N",
    "t_qstar_seconds",
    "eta_ideal",
    "eta_T1",
    "eta_T2",
    "eta_Q",
    "eta_all",
)
OPTIMIZE_HEADER = (
    "temperature_K",
    "mode",
    "N_opt_analytic",
    "N_opt_numeric",
    "eta_opt_numeric",
    "eta_opt_eq8",
    "chi_qstar",
)
ESTIMATE_HEADER = ("seed", "L_ref", "L_pert", "mass_shift", "sigma_mass_shift", "sigma_mass_shift_from_eta")


def _output(config: RunConfig, default: str) -> Path:
    return Path(config.out or default)


def nudge_divergences(n_pulses: int, omega0: float, grid: np.ndarray) -> np.ndarray:
    """Move grid points off closed-form divergences, one ulp at a time, upward."""

    nudged = np.array(grid, dtype=float)
    for index in np.flatnonzero(divergence_mask(n_pulses, omega0, nudged)):
        original = nudged[index]
        value = original
        steps = 0
        while divergence_mask(n_pulses, omega0, value):
            value = np.nextafter(value, np.inf)
            steps += 1
        nudged[index] = value
        logger.warning("grid point t=%r sits on a divergence; moved up %d ulp to %r", original, steps, value)
    return nudged


def cmd_comb(config: RunConfig) -> Path:
    spec = config.system_spec()
    grid = np.linspace(config.t_min, config.t_max, config.n_points)
    grid = nudge_divergences(config.n_pulses, spec.omega0, grid)
    background = config.mechanism_set() & BACKGROUND_MECHANISMS
    trace = coherence_trace(
        spec,
        config.n_pulses,
        grid,
        spectrum=config.spectrum,
        route=config.chi_route,
        mechanisms=background,
    )
    rows = (
        (t, t * spec.f0, ideal, bg, total)
        for t, ideal, bg, total in zip(trace.times, trace.l_ideal, trace.l_bg, trace.l_total)
    )
    return write_rows(_output(config, "comb.csv"), COMB_HEADER, rows)


def cmd_peaks(config: RunConfig) -> Path:
    spec = config.system_spec()
    n_pulses = config.n_pulses
    peaks = peak_catalog(spec, n_pulses, config.mechanism_set(), config.q_route)
    rows: List[tuple] = []
    for peak in peaks:
        kind = "narrowest" if peak.narrowest else "peak"
        rows.append((peak.q, peak.center, peak.gamma, peak.width_eq4, peak.width, peak.height, kind))
    printed = width_eq4(spec, n_pulses)
    for q in missing_peak_indices(n_pulses, qstar(n_pulses) + 1):
        rows.append((q, q * spec.period, math.inf, printed, 0.0, 0.0, "missing"))
    rows.sort(key=lambda row: row[0])
    return write_rows(_output(config, "peaks.csv"), PEAKS_HEADER, rows)


def cmd_sensitivity(config: RunConfig) -> Path:
    rows = []
    for temperature in config.sweep_temperatures():
        spec = config.system_spec(temperature)
        curve = sensitivity_curve(spec, config.n_values, config.q_route, config.workers)
        for record in curve.records:
            rows.append(
                (
                    temperature,
                    record.n_pulses,
                    record.t_qstar,
                    record.eta_ideal,
                    record.eta_t1,
                    record.eta_t2,
                    record.eta_q,
                    record.eta_all,
                )
            )
    return write_rows(_output(config, "sensitivity.csv"), SENSITIVITY_HEADER, rows)


def cmd_optimize(config: RunConfig) -> str:
    lines = []
    rows = []
    n_values = range(2, config.optimize_n_max + 1, 2) if config.optimize_n_max else None
    for temperature in config.sweep_temperatures():
        spec = config.system_spec(temperature)
        result = optimize_sensitivity_numeric(
            spec,
            n_values=n_values,
            mode=config.optimize_mode,
            q_route=config.q_route,
            workers=config.workers,
        )
        lines.extend(
            [
                f"temperature_K = {temperature!r}",
                f"  mode = {result.mode}",
                f"  N_opt_analytic = {result.n_opt_analytic}",
                f"  N_opt_numeric = {result.n_opt_numeric}",
                f"  eta_opt_numeric = {result.eta_opt_numeric!r}",
                f"  eta_opt_eq8 = {result.eta_opt_eq8!r}",
                f"  chi_qstar = {result.chi_at_optimum!r}",
            ]
        )
        rows.append(
            (
                temperature,
                result.mode,
                result.n_opt_analytic,
                result.n_opt_numeric,
                result.eta_opt_numeric,
                result.eta_opt_eq8,
                result.chi_at_optimum,
            )
        )
    if config.out:
        write_rows(Path(config.out), OPTIMIZE_HEADER, rows)
    text = "\n".join(lines)
    print(text)
    return text


def cmd_estimate(config: RunConfig) -> str:
    spec = config.system_spec()
    measurement_time = operating_point(spec, config.n_pulses, config.flank_offset)
    plan = MeasurementPlan(
        n_pulses=config.n_pulses,
        measurement_time=measurement_time,
        n_runs=config.n_runs,
        contrast=spec.readout_contrast,
        seed=config.seed,
        mass_shift=config.mass_shift,
    )
    seeds = range(config.seed, config.seed + config.n_seeds)
    mechanisms = config.mechanism_set()
    reports = run_campaign(spec, plan, seeds, workers=config.workers, mechanisms=mechanisms)
    summary = summarize_campaign(reports)

    total_time = reports[0].total_time
    from_eta = summary.eta_predicted / (spec.mass * math.sqrt(total_time))
    rows: List[tuple] = [
        (report.seed, report.l_ref, report.l_pert, report.mass_shift, report.sigma_mass_shift, None)
        for report in reports
    ]
    rows.append(("summary", None, None, summary.mean, summary.std, from_eta))
    path = write_rows(_output(config, "estimate.csv"), ESTIMATE_HEADER, rows)

    predicted = predicted_mass_uncertainty(spec, plan, mechanisms)
    lines = [
        f"n_seeds = {summary.n_seeds}",
        f"true_mass_shift = {config.mass_shift!r}",
        f"mean_mass_shift = {summary.mean!r}",
        f"std_mass_shift = {summary.std!r}",
        f"standard_error = {summary.standard_error!r}",
        f"sigma_mass_shift_predicted = {predicted!r}",
        f"total_time_seconds = {total_time!r}",
        f"eta_achieved = {summary.eta_achieved_mean!r}",
        f"eta_predicted = {summary.eta_predicted!r}",
        f"sigma_mass_shift_from_eta = {from_eta!r}",
        f"csv = {path}",
    ]
    text = "\n".join(lines)
    print(text)
    return text


COMMANDS: Dict[str, Callable[[RunConfig], object]] = {
    "comb": cmd_comb,
    "peaks": cmd_peaks,
    "sensitivity": cmd_sensitivity,
    "optimize": cmd_optimize,
    "estimate": cmd_estimate,
}

__all__ = [
    "COMMANDS",
    "cmd_comb",
    "cmd_estimate",
    "cmd_optimize",
    "cmd_peaks",
    "cmd_sensitivity",
    "nudge_divergences",
]
