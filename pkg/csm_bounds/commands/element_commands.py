"""
solve-elements / regenerate-appendix-c: closed-form scalar products from exact traces.
"""
import json
import logging
from dataclasses import asdict
from typing import List, Tuple

from csm_bounds.commands.common import EXIT_ERROR, EXIT_OK, emit_record, emit_text
from csm_bounds.engines.ansatz_solver import cached_closed_form, regenerate_appendix_c
from csm_bounds.engines.element_tables import Scope, get_element_table
from csm_bounds.models import AppendixEntryRecord, AppendixReportRecord, OutputFormat, RunConfig
from csm_bounds.utils.quantities import Quantity, parse_quantity

logger = logging.getLogger(__name__)


def _pairs(cfg: RunConfig) -> List[Tuple[Quantity, Quantity]]:
    if not cfg.pairs:
        # every zero-field Σ-polynomial entry of the shipped table
        table = get_element_table()
        scope = Scope.FIELD if cfg.with_field else Scope.ZERO_FIELD
        return [(parse_quantity(e.lhs)[0], parse_quantity(e.rhs)[0]) for e in table.entries(scope)]
    pairs = []
    for text in cfg.pairs:
        names = text.split()
        if len(names) != 2:
            raise ValueError(f"a pair is 'LHS RHS', got '{text}'")
        pairs.append((parse_quantity(names[0])[0], parse_quantity(names[1])[0]))
    return pairs


def cmd_solve_elements(cfg: RunConfig) -> int:
    pairs = _pairs(cfg)
    logger.info(f"Solving {len(pairs)} closed form(s){' with field' if cfg.with_field else ''}")
    elements = [cached_closed_form(lhs, rhs, cfg.with_field, cfg.use_cache) for lhs, rhs in pairs]
    if cfg.format is OutputFormat.JSON:
        emit_text(json.dumps([e.to_dict() for e in elements], indent=2), cfg.output)
    else:
        emit_text("\n".join(e.to_line() for e in elements), cfg.output)
    return EXIT_OK


def cmd_regenerate_appendix_c(cfg: RunConfig) -> int:
    report = regenerate_appendix_c(with_field=cfg.with_field, seed=cfg.seed or 7, use_cache=cfg.use_cache)
    record = AppendixReportRecord(
        entries=[AppendixEntryRecord(**asdict(entry)) for entry in report.entries],
        mismatches=len(report.mismatches),
        adjudication=report.adjudication,
    )
    emit_record(record, cfg.output)
    for entry in report.mismatches:
        logger.warning(f"({entry.lhs}|{entry.rhs}) [{entry.scope}] {entry.status}: "
                       f"transcribed {entry.transcribed}, derived {entry.derived or entry.message}")
    return EXIT_OK if not report.mismatches else EXIT_ERROR
