"""
Shared plumbing for the command handlers: coupling resolution, quantity lists and output.
"""
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import pandas as pd
from pydantic import BaseModel

from csm_bounds.models import RunConfig
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, exponential_couplings, read_couplings
from csm_bounds.utils.quantities import Quantity, QuantitySet, parse_quantities

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ILL_CONDITIONED = 2
# result printed but a quality check did not pass
EXIT_FLAGGED = EXIT_ILL_CONDITIONED

DEFAULT_SET = QuantitySet.BASIC3.value
DEFAULT_X = 1.0


def precision_bits(cfg: RunConfig) -> int:
    return cfg.precision_bits or get_settings().precision_bits


def resolve_couplings(cfg: RunConfig, N: Optional[int] = None, x: Optional[float] = None) -> CouplingSet:
    """Explicit file, then explicit J list, then the exponential family at (N, x)."""
    if cfg.couplings is not None:
        return read_couplings(cfg.couplings, precision_bits(cfg))
    if cfg.J:
        return CouplingSet(tuple(Fraction(j) for j in cfg.J))
    N = N if N is not None else (cfg.N[0] if cfg.N else None)
    if N is None:
        raise ValueError("give --N (with --x), --J or --couplings")
    if x is None:
        x = cfg.x[0] if cfg.x else DEFAULT_X
        if not cfg.x:
            logger.debug(f"No x given, using x={DEFAULT_X}")
    return exponential_couplings(N, x, cfg.normalization, precision_bits(cfg))


def quantities_for(cfg: RunConfig, N: int) -> List[Quantity]:
    if cfg.quantities:
        return parse_quantities(cfg.quantities, N)
    return parse_quantities(cfg.quantity_set or DEFAULT_SET, N)


def set_label(cfg: RunConfig) -> str:
    return ",".join(cfg.quantities) if cfg.quantities else (cfg.quantity_set or DEFAULT_SET)


def emit_text(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    Path(output).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info(f"Wrote {output}")


def emit_record(record: BaseModel, output: Optional[Path]) -> None:
    emit_text(record.model_dump_json(indent=2), output)


def emit_frame(frame: pd.DataFrame, output: Optional[Path]) -> None:
    emit_text(frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"), output)
