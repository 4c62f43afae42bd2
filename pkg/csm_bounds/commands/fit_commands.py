"""
extrapolate / fit-log: 1/N extrapolation of a bound series and the A ln(x/B)/x fit.
"""
import logging
import math

from csm_bounds.commands.common import EXIT_OK, emit_record
from csm_bounds.engines.extrapolation import (FitResult, Series, extrapolate_inv_n, fit_log_over_x,
                                              read_series, read_xs_points, stability_shift)
from csm_bounds.exceptions import InsufficientPoints
from csm_bounds.models import FitRecord, RunConfig

logger = logging.getLogger(__name__)


def fit_record(result: FitResult, stability=None) -> FitRecord:
    return FitRecord(
        kind=result.kind.value,
        names=result.names,
        coefficients=result.coefficients,
        uncertainties=result.uncertainties,
        residual_norm=result.residual_norm,
        points_used=result.points_used,
        intercept=result.intercept,
        intercept_uncertainty=result.intercept_uncertainty,
        degree=result.degree,
        degree_shift=result.degree_shift,
        stability_shift=stability,
    )


def _require_input(cfg: RunConfig):
    if cfg.input is None:
        raise ValueError("--in is required")
    return cfg.input


def cmd_extrapolate(cfg: RunConfig) -> int:
    series = read_series(_require_input(cfg))
    if cfg.x:
        series = Series(series.points, cfg.x[0])
    result = extrapolate_inv_n(series, cfg.degree, cfg.min_density)
    try:
        stability = stability_shift(series, cfg.degree, cfg.min_density)
    except InsufficientPoints:
        stability = None
    logger.info(f"N → ∞ value {result.intercept:.10g} ± {result.intercept_uncertainty:.2g} "
                f"from {result.points_used} points")
    emit_record(fit_record(result, stability), cfg.output)
    return EXIT_OK


def cmd_fit_log(cfg: RunConfig) -> int:
    points = read_xs_points(_require_input(cfg))
    x_start = cfg.x_start if cfg.x_start is not None else min(x for x, _ in points)
    x_end = cfg.x_end if cfg.x_end is not None else math.inf
    result = fit_log_over_x(points, x_start, x_end)
    (a, da), (b, db) = result.coefficient("A"), result.coefficient("B")
    logger.info(f"A = {a:.6g} ± {da:.2g}, B = {b:.6g} ± {db:.2g} on x ∈ [{x_start:g}, {x_end:g}]")
    emit_record(fit_record(result), cfg.output)
    return EXIT_OK
