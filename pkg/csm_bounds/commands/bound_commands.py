"""
bound / scan: single Mazur bounds and parameter sweeps over N, x and h.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from csm_bounds.commands.common import (DEFAULT_SET, EXIT_ILL_CONDITIONED, EXIT_OK, emit_frame,
                                        emit_record, quantities_for, resolve_couplings, set_label)
from csm_bounds.engines.bound_engine import (Backend, BoundProblem, BoundResult, field_field_bound,
                                             gaussian_asymptotic_bound, solve_bound)
from csm_bounds.models import BoundRecord, RunConfig
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet
from csm_bounds.utils.quantities import parse_target

logger = logging.getLogger(__name__)

SCAN_COLUMNS = ["N", "x", "h", "set", "value", "rank", "residual", "flags"]
GAUSSIAN_BACKEND = "GAUSSIAN"
# target name for the approximate field-field bound S_low^(B) / (12 S^(B)(0))
FIELD_FIELD_TARGET = "bb"


def compute_bound(cfg: RunConfig, c: CouplingSet, h: float) -> BoundResult:
    target = cfg.target.strip().lower()
    if cfg.backend == GAUSSIAN_BACKEND:
        return gaussian_asymptotic_bound(c, cfg.m_max)
    backend = Backend(cfg.backend)
    if target == FIELD_FIELD_TARGET:
        explicit = cfg.quantities or cfg.quantity_set
        quantities = quantities_for(cfg, c.N) if explicit else None
        return field_field_bound(c, quantities, backend, cfg.precision_bits)
    problem = BoundProblem(parse_target(target), quantities_for(cfg, c.N), c, h, backend, cfg.precision_bits)
    return solve_bound(problem)


def cmd_bound(cfg: RunConfig) -> int:
    c = resolve_couplings(cfg)
    h = cfg.h[0] if cfg.h else 0.0
    result = compute_bound(cfg, c, h)
    emit_record(BoundRecord(**result.to_record()), cfg.output)
    return EXIT_ILL_CONDITIONED if result.ill_conditioned else EXIT_OK


def _scan_points(cfg: RunConfig) -> List[Tuple[str, int, Optional[float], float]]:
    sets = [name.strip() for name in (cfg.quantity_set or DEFAULT_SET).split(",") if name.strip()]
    ns: List[Optional[int]] = list(cfg.N) or [None]
    xs: List[Optional[float]] = list(cfg.x) or [None]
    hs = list(cfg.h) or [0.0]
    points = []
    for name, N, x, h in itertools.product(sets, ns, xs, hs):
        if x is not None and N is not None and cfg.min_density > 0 and N < cfg.min_density * x:
            logger.info(f"Skipping N={N}, x={x}: N < {cfg.min_density:g}·x")
            continue
        points.append((name, N, x, h))
    return points


def _scan_row(cfg: RunConfig, point: Tuple[str, int, Optional[float], float]) -> Dict[str, Any]:
    name, N, x, h = point
    point_cfg = cfg if cfg.quantities else cfg.model_copy(update={"quantity_set": name})
    c = resolve_couplings(point_cfg, N, x)
    result = compute_bound(point_cfg, c, h)
    return {
        "N": c.N,
        "x": float("nan") if c.x is None else c.x,
        "h": float(h),
        "set": set_label(point_cfg),
        "value": result.value,
        "rank": result.rank,
        "residual": result.residual,
        "flags": "|".join(result.flags),
    }


def cmd_scan(cfg: RunConfig) -> int:
    points = _scan_points(cfg)
    workers = max(1, get_settings().workers)
    logger.info(f"Scanning {len(points)} parameter points on {workers} worker(s)")
    if workers == 1:
        rows = [_scan_row(cfg, point) for point in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(lambda point: _scan_row(cfg, point), points))

    frame = pd.DataFrame(rows, columns=SCAN_COLUMNS)
    frame = frame.sort_values(["set", "N", "x", "h"], kind="stable").reset_index(drop=True)
    emit_frame(frame, cfg.output)
    ill = int((frame["flags"].str.contains("ILL_CONDITIONED")).sum()) if len(frame) else 0
    if ill:
        logger.warning(f"{ill} of {len(frame)} scan points are ill-conditioned")
        return EXIT_ILL_CONDITIONED
    return EXIT_OK
