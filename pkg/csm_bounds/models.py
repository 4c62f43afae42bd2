"""
Output records and run configuration.

Records are emitted as JSON through model_dump_json. RunConfig is read from a flat key=value
file (`#` comments, comma-separated lists) and written back in the same format.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from csm_bounds.exceptions import ConfigError
from csm_bounds.utils.couplings import Normalization

logger = logging.getLogger(__name__)


# ── Records ──────────────────────────────────────────────────────────────────

class BoundRecord(BaseModel):
    target: str
    quantities: List[str]
    N: int
    x: Optional[float] = None
    h: float
    backend: str
    value: float
    rank: int
    residual: float
    flags: List[str] = []


class EdRecord(BaseModel):
    N: int
    x: Optional[float] = None
    couplings_hash: str
    h: float
    S_inf: float
    blocks: int
    flagged: bool


class FitRecord(BaseModel):
    kind: str
    names: List[str]
    coefficients: List[float]
    uncertainties: List[float]
    residual_norm: float
    points_used: int
    intercept: Optional[float] = None
    intercept_uncertainty: Optional[float] = None
    degree: Optional[int] = None
    degree_shift: Optional[float] = None
    stability_shift: Optional[float] = None


class GaussianCheckRecord(BaseModel):
    m: int
    analytic: float
    monte_carlo: float
    standard_error: float
    deviation_se: float
    samples: int
    seed: int
    passed: bool


class AppendixEntryRecord(BaseModel):
    lhs: str
    rhs: str
    scope: str
    method: str
    status: str
    transcribed: str
    derived: Optional[str] = None
    max_error: Optional[float] = None
    message: Optional[str] = None


class AppendixReportRecord(BaseModel):
    entries: List[AppendixEntryRecord]
    mismatches: int
    adjudication: Dict[str, Any] = {}


# ── Run configuration ────────────────────────────────────────────────────────

class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


_LIST_FIELDS = ("N", "x", "h", "J", "quantities", "pairs")


class RunConfig(BaseModel):
    """Every knob a command can take; keys outside this model are rejected."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: Optional[str] = None
    N: List[int] = []
    x: List[float] = []
    h: List[float] = [0.0]
    J: List[str] = []
    couplings: Optional[Path] = None
    # h is read in units of J_Q; bounds at h = 0 do not depend on the choice
    normalization: Normalization = Normalization.SIGMA2_UNIT
    target: str = "s0z"
    quantity_set: Optional[str] = Field(default=None, alias="set")
    quantities: List[str] = []
    backend: str = "TABLES"
    precision_bits: Optional[int] = None
    seed: int = 0
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.JSON
    input: Optional[Path] = Field(default=None, alias="in")
    degree: Optional[int] = None
    min_density: float = 8.0
    x_start: Optional[float] = None
    x_end: Optional[float] = None
    m_max: int = 4
    samples: int = 1_000_000
    with_field: bool = False
    pairs: List[str] = []
    use_cache: bool = True
    component: str = "z"
    deg_tol: Optional[float] = None
    strict: bool = False

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def _split_lists(cls, value):
        if isinstance(value, str):
            return [token.strip() for token in value.split(",") if token.strip()]
        if isinstance(value, (int, float)):
            return [value]
        return value

    @field_validator("normalization", mode="before")
    @classmethod
    def _upper_normalization(cls, value):
        return value.upper() if isinstance(value, str) else value

    @field_validator("backend")
    @classmethod
    def _upper_backend(cls, value: str) -> str:
        return value.upper()

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Copy with non-None overrides applied (CLI flags win over file values)."""
        aliases = {name: info.alias for name, info in RunConfig.model_fields.items() if info.alias}
        data = self.model_dump(by_alias=True)
        data.update({aliases.get(k, k): v for k, v in overrides.items() if v is not None})
        return RunConfig.model_validate(data)


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in cfg.model_dump(by_alias=True, exclude_none=True).items():
        lines.append(f"{key}={_format_value(value)}")
    return "\n".join(lines) + "\n"


def loads_config(text: str) -> RunConfig:
    data: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key=value, got '{raw.strip()}'")
        key, _, value = line.partition("=")
        data[key.strip()] = value.strip()
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc


def read_config(path: Path) -> RunConfig:
    logger.debug(f"Reading run configuration from {path}")
    return loads_config(Path(path).read_text(encoding="utf-8"))


def write_config(cfg: RunConfig, path: Path) -> None:
    Path(path).write_text(dumps_config(cfg), encoding="utf-8")
