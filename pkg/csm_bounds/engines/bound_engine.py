"""
Mazur lower bounds A_low = a_C† 𝐍⁺ a_C for a target observable (S_0^z or B^z) projected onto a
set of conserved quantities, with a_C[i] = (C_i|target) and 𝐍[i][m] = (C_i|C_m).

Elements come from one of three backends (closed-form tables, dense matrices, exact Pauli
expansion). The solve equilibrates 𝐍 by its diagonal, drops eigenvalues below
eig_cutoff·λ_max and checks the residual of the projection coefficients.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import linalg

from csm_bounds.engines.dense_operator import build_dense, dense_scalar_product
from csm_bounds.engines.element_tables import (ElementContext, EvaluationMode, gaussian_matrix_element,
                                               gaussian_vector_element, gram_matrix, overlap_vector)
from csm_bounds.engines.pauli_trace import build_operator, scalar_product
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, FieldStrength, Number
from csm_bounds.utils.quantities import (BZ, IZ, S0Z, TARGETS, Quantity, describe_quantities, hlz,
                                         iz_h0_power)

logger = logging.getLogger(__name__)

# above this many quantities the extended-precision solve falls back to float64
MP_MAX_SIZE = 64


class Backend(str, Enum):
    TABLES = "TABLES"
    DENSE = "DENSE"
    SYMBOLIC = "SYMBOLIC"


class BoundFlag(str, Enum):
    ILL_CONDITIONED = "ILL_CONDITIONED"
    APPROXIMATE = "APPROXIMATE"


@dataclass
class BoundProblem:
    target: Quantity
    quantities: List[Quantity]
    couplings: CouplingSet
    h: FieldStrength = 0
    backend: Backend = Backend.TABLES
    precision_bits: Optional[int] = None

    def __post_init__(self):
        self.backend = Backend(self.backend)
        self.quantities = list(self.quantities)
        if self.precision_bits is None:
            self.precision_bits = get_settings().precision_bits

    def validate(self) -> None:
        if self.target not in TARGETS.values():
            raise ValueError(f"target must be S0z or Bz, got {self.target.name}")
        if not self.quantities:
            raise ValueError("a bound needs at least one conserved quantity")
        if self.h != 0:
            offending = [q.name for q in [self.target] + self.quantities if q.zero_field_only]
            if offending:
                raise ValueError(f"{', '.join(offending)} only conserved (or tabulated) at h = 0, "
                                 f"got h = {self.h}")
        for q in self.quantities:
            if q.is_indexed and q.index > self.couplings.N:
                raise ValueError(f"{q.name} needs l <= N = {self.couplings.N}")

    @property
    def use_extended_precision(self) -> bool:
        return self.precision_bits > 53 and len(self.quantities) <= MP_MAX_SIZE


@dataclass
class BoundResult:
    target: str
    quantities: List[str]
    N: int
    x: Optional[float]
    h: float
    backend: str
    value: float
    rank: int
    residual: float
    flags: List[str] = field(default_factory=list)

    @property
    def ill_conditioned(self) -> bool:
        return BoundFlag.ILL_CONDITIONED.value in self.flags

    def to_record(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "quantities": self.quantities,
            "N": self.N,
            "x": self.x,
            "h": self.h,
            "backend": self.backend,
            "value": self.value,
            "rank": self.rank,
            "residual": self.residual,
            "flags": list(self.flags),
        }


# ── Assembly ─────────────────────────────────────────────────────────────────

def _map(function, items: Sequence[Any]) -> List[Any]:
    workers = max(1, get_settings().workers)
    if workers == 1 or len(items) < 2:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


def _gram_from_products(operators: Sequence[Any], target_op: Any, product) -> Tuple[np.ndarray, np.ndarray]:
    n = len(operators)
    matrix = np.empty((n, n), dtype=object)
    pairs = [(i, m) for i in range(n) for m in range(i, n)]
    for (i, m), value in zip(pairs, _map(lambda ij: product(operators[ij[0]], operators[ij[1]]), pairs)):
        matrix[i, m] = matrix[m, i] = value
    vector = np.array(_map(lambda op: product(op, target_op), operators), dtype=object)
    return vector, matrix


def assemble(p: BoundProblem) -> Tuple[np.ndarray, np.ndarray]:
    """
    (a_C, 𝐍) for the problem. TABLES returns float64 (or mpf objects in extended precision),
    DENSE returns float64, SYMBOLIC returns exact Fractions.
    """
    p.validate()
    logger.debug(f"Assembling {len(p.quantities)} quantities for {p.target.name} "
                 f"(N={p.couplings.N}, h={p.h}, backend={p.backend.value})")

    if p.backend is Backend.TABLES:
        mode = EvaluationMode.MP if p.use_extended_precision else EvaluationMode.FLOAT
        ctx = ElementContext(p.couplings, p.h, mode, p.precision_bits)
        return overlap_vector(p.target, p.quantities, ctx), gram_matrix(p.quantities, ctx)

    if p.backend is Backend.DENSE:
        operators = _map(lambda q: build_dense(q, p.couplings, p.h), p.quantities)
        target_op = build_dense(p.target, p.couplings, p.h)
        vector, matrix = _gram_from_products(operators, target_op,
                                             lambda a, b: dense_scalar_product(a, b).real)
        return vector.astype(float), matrix.astype(float)

    c = p.couplings if p.couplings.is_exact else p.couplings.as_fractions()
    h = p.h if isinstance(p.h, (int, Fraction)) else Fraction(float(p.h))
    operators = _map(lambda q: build_operator(q, c, h), p.quantities)
    target_op = build_operator(p.target, c, h)
    return _gram_from_products(operators, target_op, lambda a, b: scalar_product(a, b).re)


# ── Projection solve ─────────────────────────────────────────────────────────

@dataclass
class Projection:
    value: Number
    rank: int
    residual: float
    min_eigenvalue_ratio: float


def _project_float(a: np.ndarray, matrix: np.ndarray, cutoff: float) -> Projection:
    a = np.asarray(a, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    diagonal = np.diag(matrix).copy()
    scale = np.where(diagonal > 0, 1.0 / np.sqrt(np.where(diagonal > 0, diagonal, 1.0)), 0.0)
    equilibrated = scale[:, None] * matrix * scale[None, :]
    rhs = scale * a

    eigenvalues, vectors = linalg.eigh(equilibrated)
    top = max(eigenvalues.max(initial=0.0), 0.0)
    keep = eigenvalues > cutoff * top if top > 0 else np.zeros_like(eigenvalues, dtype=bool)
    coords = vectors[:, keep].T @ rhs
    y_equilibrated = vectors[:, keep] @ (coords / eigenvalues[keep])
    value = float(coords @ (coords / eigenvalues[keep]))

    y = scale * y_equilibrated
    norm_a = np.linalg.norm(a)
    residual = float(np.linalg.norm(matrix @ y - a) / norm_a) if norm_a > 0 else 0.0
    ratio = float(eigenvalues.min() / top) if top > 0 else 0.0
    return Projection(value, int(keep.sum()), residual, ratio)


def _project_mp(a: Sequence[Any], matrix: np.ndarray, cutoff: float, precision_bits: int) -> Projection:
    n = len(a)
    with mpmath.workprec(precision_bits):
        a = [mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else mpmath.mpf(v) for v in a]
        entries = [[mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else mpmath.mpf(v)
                    for v in row] for row in matrix]
        scale = [1 / mpmath.sqrt(entries[i][i]) if entries[i][i] > 0 else mpmath.mpf(0) for i in range(n)]
        equilibrated = mpmath.matrix(n, n)
        for i in range(n):
            for m in range(n):
                equilibrated[i, m] = scale[i] * entries[i][m] * scale[m]
        rhs = mpmath.matrix([scale[i] * a[i] for i in range(n)])

        values, vectors = mpmath.eigsy(equilibrated)
        eigenvalues = [values[k] for k in range(n)]
        top = max(max(eigenvalues), mpmath.mpf(0))
        value = mpmath.mpf(0)
        y_equilibrated = mpmath.matrix(n, 1)
        rank = 0
        for k in range(n):
            if top <= 0 or eigenvalues[k] <= cutoff * top:
                continue
            rank += 1
            column = vectors[:, k]
            coord = sum(column[i] * rhs[i] for i in range(n))
            value += coord * coord / eigenvalues[k]
            y_equilibrated += column * (coord / eigenvalues[k])

        y = [scale[i] * y_equilibrated[i] for i in range(n)]
        mismatch = [sum(entries[i][m] * y[m] for m in range(n)) - a[i] for i in range(n)]
        norm_a = mpmath.sqrt(sum(v * v for v in a))
        residual = mpmath.sqrt(sum(v * v for v in mismatch)) / norm_a if norm_a > 0 else mpmath.mpf(0)
        ratio = min(eigenvalues) / top if top > 0 else mpmath.mpf(0)
        return Projection(value, rank, float(residual), float(ratio))


def project(a: Sequence[Any], matrix: np.ndarray, precision_bits: int = 53,
            cutoff: Optional[float] = None) -> Projection:
    """a† 𝐍⁺ a with a relative eigenvalue cutoff; mpmath when precision_bits > 53."""
    settings = get_settings()
    cutoff = settings.eig_cutoff if cutoff is None else cutoff
    if len(a) != len(matrix):
        raise ValueError(f"vector of size {len(a)} does not match a {len(matrix)}x{len(matrix)} matrix")
    if precision_bits > 53:
        if len(a) > MP_MAX_SIZE:
            logger.warning(f"{len(a)} quantities exceed the extended-precision size {MP_MAX_SIZE}; "
                           f"solving in float64")
        else:
            # cutoff tracks the working precision
            return _project_mp(a, matrix, cutoff * 2.0 ** (53 - precision_bits), precision_bits)
    return _project_float(a, matrix, cutoff)


def solve_bound(p: BoundProblem) -> BoundResult:
    a, matrix = assemble(p)
    projection = project(a, matrix, p.precision_bits if p.use_extended_precision else 53)
    flags: List[str] = []
    settings = get_settings()
    if projection.residual > settings.residual_tol or projection.min_eigenvalue_ratio < -1e-10:
        flags.append(BoundFlag.ILL_CONDITIONED.value)
        logger.warning(f"Ill-conditioned bound for {describe_quantities(p.quantities)} at N={p.couplings.N}: "
                       f"residual {projection.residual:.2e}; rerun with more precision bits")
    return BoundResult(
        target=p.target.name,
        quantities=describe_quantities(p.quantities),
        N=p.couplings.N,
        x=p.couplings.x,
        h=float(p.h),
        backend=p.backend.value,
        value=float(projection.value),
        rank=projection.rank,
        residual=projection.residual,
        flags=flags,
    )


# ── Closed-form bounds ───────────────────────────────────────────────────────

def simple_bound(c: CouplingSet) -> Number:
    """(1/4) Σ_1² / (2Σ_1² + 3(N-1)Σ_2), the {I^z H_0} projection; exact for exact couplings."""
    s1, s2 = c.sigma(1), c.sigma(2)
    if c.is_exact:
        return Fraction(1, 4) * s1 ** 2 / (2 * s1 ** 2 + 3 * (c.N - 1) * s2)
    s1, s2 = float(s1), float(s2)
    return 0.25 * s1 ** 2 / (2 * s1 ** 2 + 3 * (c.N - 1) * s2)


def simple_bound_asymptotic(x: float) -> float:
    """Large-x form for exponential couplings: (1/(6x)) (1 - e^{-x})² / (1 - e^{-2x}) = tanh(x/2)/(6x)."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    return math.tanh(x / 2) / (6 * x)


def field_field_bound(c: CouplingSet, quantities: Optional[Sequence[Quantity]] = None,
                      backend: Backend = Backend.TABLES, precision_bits: Optional[int] = None) -> BoundResult:
    """
    S_low^(B) / (12 S^(B)(0)) with S^(B)(0) = (B^z|B^z) = Σ_2/4; rests on a rapid-precession
    approximation and is flagged APPROXIMATE.
    """
    if quantities is None:
        quantities = [IZ] + [hlz(l) for l in range(1, c.N + 1)]
    result = solve_bound(BoundProblem(BZ, list(quantities), c, 0, backend, precision_bits))
    sigma2 = float(c.sigma(2))
    result.value = result.value / (3 * sigma2)
    result.flags.append(BoundFlag.APPROXIMATE.value)
    return result


def infinite_field_bound(x: float, h: float) -> float:
    """
    N → ∞ bound of {H_0^z(h), H_0(h)} for exponential couplings, h in units of J_Q.
    Evaluated with numerator and denominator scaled by e^{-x}.
    """
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    h2 = float(h) ** 2
    h4 = h2 * h2
    decay = math.exp(-x)
    numerator = (8 * h4 * x + h2 * (6 * x - 4) + 3) + decay * (8 * h4 * x + h2 * (6 * x + 4) - 3)
    denominator = (2 * (16 * h4 * x + 8 * h2 * (3 * x - 2) + 9 * x + 12)
                   + 2 * decay * (16 * h4 * x + 8 * h2 * (3 * x + 2) + 9 * x - 12))
    return numerator / denominator


def gaussian_asymptotic_bound(c: CouplingSet, m_max: int, dps: Optional[int] = None) -> BoundResult:
    """
    Projection onto I^z H_0^{2k-1}, k = 1..m_max, with Gaussian leading-order elements:
    𝐍[k][k'] = gaussian_matrix_element(k+k'-1), a_C[k] = gaussian_vector_element(k).
    The Hankel matrix is solved in extended precision.
    """
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    dps = dps or get_settings().gaussian_dps
    bits = int(math.ceil(dps * math.log2(10)))
    with mpmath.workdps(dps):
        vector = [gaussian_vector_element(k, c) for k in range(1, m_max + 1)]
        matrix = np.empty((m_max, m_max), dtype=object)
        for k in range(1, m_max + 1):
            for kk in range(1, m_max + 1):
                matrix[k - 1, kk - 1] = gaussian_matrix_element(k + kk - 1, c)
    projection = project(vector, matrix, max(bits, 54))
    flags = []
    if projection.residual > get_settings().residual_tol:
        flags.append(BoundFlag.ILL_CONDITIONED.value)
        logger.warning(f"Gaussian bound at m_max={m_max} failed the residual check "
                       f"({projection.residual:.2e}); raise gaussian_dps above {dps}")
    return BoundResult(
        target=S0Z.name,
        quantities=[iz_h0_power(2 * k - 1).name for k in range(1, m_max + 1)],
        N=c.N,
        x=c.x,
        h=0.0,
        backend="GAUSSIAN",
        value=float(projection.value),
        rank=projection.rank,
        residual=projection.residual,
        flags=flags,
    )


def fit_power_law(ns: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """value ≈ C N^p by least squares in log-log; returns (p, C)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ns) != len(values):
        raise ValueError(f"{len(ns)} sizes but {len(values)} values")
    if len(ns) < 2 or np.any(ns <= 0) or np.any(values <= 0):
        raise ValueError("power-law fit needs at least two positive points")
    design = np.column_stack([np.log(ns), np.ones_like(ns)])
    (exponent, log_prefactor), *_ = np.linalg.lstsq(design, np.log(values), rcond=None)
    return float(exponent), float(math.exp(log_prefactor))
