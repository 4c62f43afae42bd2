"""
Physical parameterization shared by every engine: bath couplings J_k, their power sums
Σ_m = Σ_k J_k^m and the shifted couplings J_j^(l) = 1/(ε_l - ε_j) with ε_0 = 0, ε_k = -1/J_k.

Values are kept in one of three arithmetic modes, chosen by the element type:
exact (int / Fraction), float64, or mpmath mpf (extended precision).
"""
import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from csm_bounds.exceptions import DegenerateCouplings

logger = logging.getLogger(__name__)

Number = Union[int, Fraction, float, mpmath.mpf]

# h is a plain number: in units of J_Q for SIGMA2_UNIT couplings (where J_Q = 1), raw energy otherwise
FieldStrength = Union[int, Fraction, float]


class Normalization(str, Enum):
    RAW = "RAW"
    SIGMA2_UNIT = "SIGMA2_UNIT"


def _is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _format_value(value: Number) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, mpmath.mp.dps + 5, strip_zeros=False)
    return repr(float(value))


def _parse_value(text: str, precision_bits: int = 53) -> Number:
    text = text.strip()
    if "/" in text or text.lstrip("-").isdigit():
        return Fraction(text)
    if precision_bits > 53:
        with mpmath.workprec(precision_bits):
            return mpmath.mpf(text)
    return float(text)


@dataclass(frozen=True)
class CouplingSet:
    """Bath couplings J_1..J_N (strictly positive, ordered as given)."""

    values: Tuple[Number, ...]
    x: Optional[float] = None
    normalization: Normalization = Normalization.RAW

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("a coupling set needs at least one bath spin")
        for k, value in enumerate(values, start=1):
            if not value > 0:
                raise ValueError(f"coupling J_{k} = {value} is not strictly positive")

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(v) for v in self.values)

    @property
    def is_extended(self) -> bool:
        return any(isinstance(v, mpmath.mpf) for v in self.values)

    @cached_property
    def array(self) -> np.ndarray:
        """float64 view of the couplings."""
        return np.array([float(v) for v in self.values], dtype=float)

    def sigma(self, m: int) -> Number:
        """Σ_m in the native arithmetic mode of the set."""
        if m < 0:
            raise ValueError(f"moment order must be nonnegative, got {m}")
        if self.is_exact:
            return sum((Fraction(v) ** m for v in self.values), Fraction(0))
        if self.is_extended:
            return mpmath.fsum(mpmath.mpf(v) ** m for v in self.values)
        return math.fsum(float(v) ** m for v in self.values)

    def moments(self, m_max: int = 6) -> "Moments":
        return moments(self, m_max)

    def epsilon_table(self) -> "EpsilonTable":
        return epsilon_table(self)

    def fingerprint(self) -> str:
        """SHA-256 over the exact textual values and metadata."""
        content = {
            "values": [_format_value(v) for v in self.values],
            "x": self.x,
            "normalization": self.normalization.value,
        }
        serialized = json.dumps(content, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(serialized).hexdigest()

    def as_fractions(self) -> "CouplingSet":
        """Exact copy; floats are converted through their binary expansion."""
        values = tuple(v if _is_exact(v) else Fraction(float(v)) for v in self.values)
        return CouplingSet(values, self.x, self.normalization)

    def as_floats(self) -> "CouplingSet":
        return CouplingSet(tuple(float(v) for v in self.values), self.x, self.normalization)

    def with_precision(self, bits: int) -> "CouplingSet":
        with mpmath.workprec(bits):
            values = tuple(mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction)
                           else mpmath.mpf(v) for v in self.values)
        return CouplingSet(values, self.x, self.normalization)


@dataclass(frozen=True)
class Moments:
    """Power sums Σ_m for m = 1..m_max; sigma(m) extends past m_max on demand."""

    couplings: CouplingSet
    values: Dict[int, Number] = field(default_factory=dict)

    def __getitem__(self, m: int) -> Number:
        return self.sigma(m)

    def sigma(self, m: int) -> Number:
        if m not in self.values:
            self.values[m] = self.couplings.sigma(m)
        return self.values[m]

    @property
    def N(self) -> int:
        return self.couplings.N

    def as_dict(self, m_max: int = 6) -> Dict[str, Number]:
        """Variables of the element polynomial grammar (S1..S<m_max>, N)."""
        env: Dict[str, Number] = {f"S{m}": self.sigma(m) for m in range(1, m_max + 1)}
        env["N"] = self.N
        return env


def moments(c: CouplingSet, m_max: int) -> Moments:
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    return Moments(c, {m: c.sigma(m) for m in range(1, m_max + 1)})


def moments_infinite(x: float, m: int) -> float:
    """Σ_m / (J^m N) of the exponential family in the N → ∞ limit: (1 - e^{-mx})/(mx)."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    if m < 1:
        raise ValueError(f"moment order must be >= 1, got {m}")
    return -math.expm1(-m * x) / (m * x)


def exponential_couplings(N: int, x: float, normalization: Normalization = Normalization.RAW,
                          precision_bits: int = 53) -> CouplingSet:
    """J_k = J exp(-k x / N), k = 1..N; J = 1 (RAW) or chosen so that Σ_2 = 1 (SIGMA2_UNIT)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    normalization = Normalization(normalization)

    if precision_bits > 53:
        with mpmath.workprec(precision_bits):
            xm = mpmath.mpf(x)
            if normalization is Normalization.RAW:
                scale = mpmath.mpf(1)
            elif x == 0:
                scale = 1 / mpmath.sqrt(N)
            else:
                scale = mpmath.sqrt(mpmath.expm1(2 * xm / N) / -mpmath.expm1(-2 * xm))
            values = tuple(scale * mpmath.exp(-k * xm / N) for k in range(1, N + 1))
        return CouplingSet(values, float(x), normalization)

    if normalization is Normalization.RAW:
        scale = 1.0
    elif x == 0:
        scale = 1.0 / math.sqrt(N)
    else:
        scale = math.sqrt(math.expm1(2.0 * x / N) / -math.expm1(-2.0 * x))
    k = np.arange(1, N + 1, dtype=float)
    values = scale * np.exp(-k * x / N)
    return CouplingSet(tuple(float(v) for v in values), float(x), normalization)


def random_rational_couplings(n: int, rng: random.Random, distinct: bool = True,
                              max_numerator: int = 40, max_denominator: int = 7) -> CouplingSet:
    """Seeded random exact couplings, used for verification tuples and tests."""
    values: List[Fraction] = []
    while len(values) < n:
        value = Fraction(rng.randint(1, max_numerator), rng.randint(1, max_denominator))
        if distinct and value in values:
            continue
        values.append(value)
    return CouplingSet(tuple(values))


@dataclass(frozen=True)
class EpsilonTable:
    """
    ε_0 = 0, ε_k = -1/J_k and the shifted couplings jshift[l][j] = J_j^(l) = 1/(ε_l - ε_j)
    (zero on the diagonal). rowsum = S^(l), rowsq = Q^(l), cross = X^(l) = Σ_{k≥1} J_k^(l) J_k.
    Arrays are float64 in float mode and object arrays of Fraction / mpf otherwise.
    """

    eps: np.ndarray
    jshift: np.ndarray
    rowsum: np.ndarray
    rowsq: np.ndarray
    cross: np.ndarray
    couplings: Optional[CouplingSet] = None

    @property
    def size(self) -> int:
        return len(self.eps)

    @property
    def bath_couplings(self) -> np.ndarray:
        """J_l with J_0 = 0, aligned with the l index (row 0 of jshift)."""
        return self.jshift[0]


def _check_distinct(values: Sequence[Number]) -> None:
    seen: Dict[Any, int] = {}
    for k, value in enumerate(values, start=1):
        key = value if _is_exact(value) else float(value)
        if key in seen:
            raise DegenerateCouplings(seen[key], k, value)
        seen[key] = k


def epsilon_table(c: CouplingSet) -> EpsilonTable:
    _check_distinct(c.values)
    size = c.N + 1

    if not c.is_exact and not c.is_extended:
        couplings = c.array
        eps = np.concatenate([[0.0], -1.0 / couplings])
        diff = eps[:, None] - eps[None, :]
        np.fill_diagonal(diff, 1.0)
        jshift = 1.0 / diff
        np.fill_diagonal(jshift, 0.0)
        padded = np.concatenate([[0.0], couplings])
        return EpsilonTable(eps=eps, jshift=jshift, rowsum=jshift.sum(axis=1),
                            rowsq=(jshift ** 2).sum(axis=1), cross=jshift @ padded, couplings=c)

    one = Fraction(1) if c.is_exact else mpmath.mpf(1)
    zero = one - one
    couplings = [Fraction(v) if c.is_exact else mpmath.mpf(v) for v in c.values]
    eps = [zero] + [-one / v for v in couplings]
    padded = [zero] + couplings
    jshift = np.empty((size, size), dtype=object)
    for l in range(size):
        for j in range(size):
            jshift[l, j] = zero if l == j else one / (eps[l] - eps[j])
    rowsum = np.array([sum(jshift[l], zero) for l in range(size)], dtype=object)
    rowsq = np.array([sum((v * v for v in jshift[l]), zero) for l in range(size)], dtype=object)
    cross = np.array([sum((jshift[l, k] * padded[k] for k in range(size)), zero)
                      for l in range(size)], dtype=object)
    return EpsilonTable(eps=np.array(eps, dtype=object), jshift=jshift, rowsum=rowsum,
                        rowsq=rowsq, cross=cross, couplings=c)


# ── Plain-text IO ────────────────────────────────────────────────────────────

def dumps_couplings(c: CouplingSet) -> str:
    x = "nan" if c.x is None else repr(float(c.x))
    lines = [f"# N={c.N} x={x} norm={c.normalization.value}"]
    lines.extend(_format_value(v) for v in c.values)
    return "\n".join(lines) + "\n"


def loads_couplings(text: str, precision_bits: int = 53) -> CouplingSet:
    header: Dict[str, str] = {}
    values: List[Number] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line.lstrip("#").split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    header[key] = value
            continue
        values.append(_parse_value(line, precision_bits))

    if "N" in header and int(header["N"]) != len(values):
        raise ValueError(f"header announces N={header['N']} but {len(values)} values follow")
    x_text = header.get("x", "nan").lower()
    x = None if x_text in ("nan", "none", "") else float(x_text)
    normalization = Normalization(header.get("norm", Normalization.RAW.value))
    return CouplingSet(tuple(values), x, normalization)


def write_couplings(c: CouplingSet, path: Path) -> None:
    Path(path).write_text(dumps_couplings(c), encoding="utf-8")
    logger.info(f"Wrote {c.N} couplings to {path}")


def read_couplings(path: Path, precision_bits: int = 53) -> CouplingSet:
    return loads_couplings(Path(path).read_text(encoding="utf-8"), precision_bits)
