"""
Closed-form recovery of scalar products as exact polynomials in N, h and the moments Σ_m.

A candidate basis of monomials N^a h^b Π Σ_m^{c_m} is generated from the energy dimension and
the number of summed spin operators; exact traces on small concrete systems give one linear
equation per (coupling set, h) tuple; sympy solves the system over the rationals and two
held-out random tuples verify the result. Solved forms are cached on disk.
"""
import json
import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import cycle
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.utilities.iterables import partitions

from csm_bounds.engines.dense_operator import dense_element
from csm_bounds.engines.element_tables import (SYMBOLS, TABLE_VERSION, ElementContext, ElementTable,
                                               EvaluationMode, Scope, TableEntry, format_polynomial,
                                               get_element_table)
from csm_bounds.engines.pauli_trace import build_operator, scalar_product
from csm_bounds.exceptions import BasisDegenerate, ClosedFormMismatch, CsmError, InsufficientSystems
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, random_rational_couplings
from csm_bounds.utils.quantities import Quantity, QuantityKind, parse_quantity

logger = logging.getLogger(__name__)

FIXED_SYSTEMS = ((1,), (1, 1), (1, 2), (1, 2, 3), (1, 2, 4), (2, 3, 5))
FIELD_CYCLE = (Fraction(0), Fraction(1), Fraction(2), Fraction(1, 2))
MAX_SYSTEM_SIZE = 6


# ── Basis ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, order=True)
class Monomial:
    """N^a h^b Π Σ_m^{c_m}; `moments` lists m once per factor, descending."""

    n_power: int
    h_power: int
    moments: Tuple[int, ...] = ()

    @property
    def sigma_count(self) -> int:
        return len(self.moments)

    @property
    def energy(self) -> int:
        return sum(self.moments) + self.h_power

    def expr(self) -> sympy.Expr:
        result = SYMBOLS["N"] ** self.n_power * SYMBOLS["h"] ** self.h_power
        for m in self.moments:
            result *= SYMBOLS[f"S{m}"]
        return result

    def evaluate(self, c: CouplingSet, h: Fraction) -> Fraction:
        value = Fraction(c.N) ** self.n_power * Fraction(h) ** self.h_power
        for m in self.moments:
            value *= c.sigma(m)
        return value

    def __str__(self) -> str:
        text = str(self.expr()).replace("**", "^")
        return text

    def to_list(self) -> List[Any]:
        return [self.n_power, self.h_power, list(self.moments)]

    @classmethod
    def from_list(cls, data: Sequence[Any]) -> "Monomial":
        return cls(int(data[0]), int(data[1]), tuple(int(m) for m in data[2]))


@dataclass(frozen=True)
class MonomialBasis:
    monomials: Tuple[Monomial, ...]
    energy_order: int
    spin_operator_count: int

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)


def _sort_key(m: Monomial) -> Tuple:
    return (-m.n_power, -m.h_power, m.sigma_count, tuple(-k for k in m.moments))


def generate_basis(lhs: Quantity, rhs: Quantity, with_field: bool = False) -> MonomialBasis:
    """
    Every monomial of total energy order E = E_lhs + E_rhs with N-power plus Σ-count bounded by
    half the number of summed spin operators. h powers appear only with `with_field` and a
    field-dependent side; their parity follows the number of odd operators.
    """
    for q in (lhs, rhs):
        if q.is_indexed:
            raise ValueError(f"{q.name}: per-index elements lie outside the Σ_m monomial basis")
    energy = lhs.energy_order + rhs.energy_order
    spins = lhs.spin_operator_count + rhs.spin_operator_count
    ceiling = spins // 2
    parity = (int(lhs.is_odd) + int(rhs.is_odd)) % 2
    field_dependent = with_field and (lhs.field_dependent or rhs.field_dependent)

    h_powers = [b for b in range(energy + 1) if b % 2 == parity] if field_dependent else [0]
    monomials = []
    for b in h_powers:
        if not field_dependent and parity == 1:
            break
        remaining = energy - b
        for part in partitions(remaining):
            moments = tuple(sorted((m for m, count in part.items() for _ in range(count)), reverse=True))
            if remaining == 0:
                moments = ()
            for a in range(ceiling - len(moments) + 1):
                monomials.append(Monomial(a, b, moments))
    monomials = sorted(set(monomials), key=_sort_key)
    return MonomialBasis(tuple(monomials), energy, spins)


# ── Closed forms ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ClosedFormElement:
    lhs: Quantity
    rhs: Quantity
    basis: MonomialBasis
    coefficients: Tuple[Fraction, ...]
    provenance: Tuple[Tuple[Tuple[str, ...], str, str], ...] = ()
    with_field: bool = False

    def expr(self) -> sympy.Expr:
        return sympy.expand(sum((sympy.Rational(a.numerator, a.denominator) * m.expr()
                                 for a, m in zip(self.coefficients, self.basis)), sympy.Integer(0)))

    @property
    def polynomial(self) -> str:
        return format_polynomial(self.expr())

    def to_line(self) -> str:
        return f"{self.lhs.name} {self.rhs.name} : {self.polynomial}"

    def evaluate(self, c: CouplingSet, h: Fraction = Fraction(0)) -> Fraction:
        c = c.as_fractions()
        return sum((a * m.evaluate(c, h) for a, m in zip(self.coefficients, self.basis)), Fraction(0))

    def max_n_power(self) -> int:
        powers = [m.n_power for a, m in zip(self.coefficients, self.basis) if a != 0]
        return max(powers, default=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lhs": self.lhs.name,
            "rhs": self.rhs.name,
            "with_field": self.with_field,
            "energy_order": self.basis.energy_order,
            "spin_operator_count": self.basis.spin_operator_count,
            "monomials": [m.to_list() for m in self.basis],
            "coefficients": [str(a) for a in self.coefficients],
            "polynomial": self.polynomial,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClosedFormElement":
        basis = MonomialBasis(tuple(Monomial.from_list(m) for m in data["monomials"]),
                              int(data["energy_order"]), int(data["spin_operator_count"]))
        return cls(parse_quantity(data["lhs"])[0], parse_quantity(data["rhs"])[0], basis,
                   tuple(Fraction(a) for a in data["coefficients"]), (), bool(data["with_field"]))


def exact_trace(lhs: Quantity, rhs: Quantity, c: CouplingSet, h: Fraction = Fraction(0)) -> Fraction:
    """(lhs|rhs) from the exact Pauli expansion."""
    value = scalar_product(build_operator(lhs, c, h), build_operator(rhs, c, h))
    if not value.is_real():
        raise ValueError(f"({lhs.name}|{rhs.name}) has imaginary part {value.im}")
    return value.re


def system_tuples(with_field: bool = False) -> Iterator[Tuple[CouplingSet, Fraction]]:
    """
    Deterministic (coupling set, h) sequence: the fixed small systems, then
    J_k = ((7i + 3k² + k) mod 13) + 1 with sizes cycling 1..6.
    """
    fields = cycle(FIELD_CYCLE if with_field else (Fraction(0),))
    i = 0
    while True:
        if i < len(FIXED_SYSTEMS):
            values = FIXED_SYSTEMS[i]
        else:
            size = i % MAX_SYSTEM_SIZE + 1
            values = tuple((7 * i + 3 * k * k + k) % 13 + 1 for k in range(1, size + 1))
        yield CouplingSet(values), next(fields)
        i += 1


def _held_out_tuples(count: int, with_field: bool, seed: int) -> List[Tuple[CouplingSet, Fraction]]:
    rng = random.Random(seed)
    tuples = []
    for _ in range(count):
        c = random_rational_couplings(rng.randint(2, 5), rng, distinct=False)
        h = Fraction(rng.randint(-7, 7), rng.randint(1, 5)) if with_field else Fraction(0)
        tuples.append((c, h))
    return tuples


def _rational_row(values: Sequence[Fraction]) -> List[sympy.Rational]:
    return [sympy.Rational(v.numerator, v.denominator) for v in values]


def _null_space_description(matrix: sympy.Matrix, basis: MonomialBasis) -> List[List[str]]:
    described = []
    for vector in matrix.nullspace():
        described.append([f"{value}*{monomial}" for value, monomial in zip(vector, basis) if value != 0])
    return described


def solve_closed_form(lhs: Quantity, rhs: Quantity, basis: Optional[MonomialBasis] = None,
                      with_field: bool = False, tuples: Optional[Sequence[Tuple[CouplingSet, Fraction]]] = None,
                      verify: int = 2, seed: int = 20240601, workers: Optional[int] = None) -> ClosedFormElement:
    """
    Solve (lhs|rhs) = Σ_i α_i f_i exactly. With explicit `tuples` exactly those systems are used
    (rank deficiency then raises BasisDegenerate); otherwise systems are drawn from
    system_tuples() until the equations are independent.
    """
    basis = basis if basis is not None else generate_basis(lhs, rhs, with_field)
    size = len(basis)
    workers = workers or get_settings().workers
    if size == 0:
        # no admissible monomial: the element must vanish identically
        element = ClosedFormElement(lhs, rhs, basis, (), (), with_field)
        for c, h in _held_out_tuples(verify, with_field, seed):
            if exact_trace(lhs, rhs, c, h) != 0:
                raise ClosedFormMismatch(f"({lhs.name}|{rhs.name}) has an empty basis but a nonzero trace")
        return element

    def trace_row(item: Tuple[CouplingSet, Fraction]) -> Tuple[List[Fraction], Fraction]:
        c, h = item
        return [m.evaluate(c, h) for m in basis], exact_trace(lhs, rhs, c, h)

    rows: List[List[Fraction]] = []
    values: List[Fraction] = []
    used: List[Tuple[CouplingSet, Fraction]] = []

    def add(batch: Sequence[Tuple[CouplingSet, Fraction]]) -> None:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            results = list(executor.map(trace_row, batch))
        for item, (row, value) in zip(batch, results):
            rows.append(row)
            values.append(value)
            used.append(item)

    if tuples is not None:
        add(list(tuples))
        matrix = sympy.Matrix([_rational_row(r) for r in rows])
        if matrix.rank() < size:
            raise BasisDegenerate(f"({lhs.name}|{rhs.name}): {len(rows)} systems leave the basis "
                                  f"rank deficient", _null_space_description(matrix, basis))
    else:
        source = system_tuples(with_field)
        max_rows = 4 * size + 24
        add([next(source) for _ in range(size)])
        matrix = sympy.Matrix([_rational_row(r) for r in rows])
        rank = matrix.rank()
        while rank < size and len(rows) < max_rows:
            add([next(source) for _ in range(size - rank)])
            matrix = sympy.Matrix([_rational_row(r) for r in rows])
            rank = matrix.rank()
        if rank < size:
            null_space = _null_space_description(matrix, basis)
            if null_space:
                raise BasisDegenerate(f"({lhs.name}|{rhs.name}): basis stays rank deficient "
                                      f"after {len(rows)} systems", null_space)
            raise InsufficientSystems(f"({lhs.name}|{rhs.name}): only rank {rank} of {size}")

    rhs_vector = sympy.Matrix(_rational_row(values))
    try:
        solution, params = matrix.gauss_jordan_solve(rhs_vector)
    except ValueError as exc:
        raise ClosedFormMismatch(f"({lhs.name}|{rhs.name}): the basis cannot reproduce the traces "
                                 f"of {len(rows)} systems") from exc
    if params.shape[0]:
        raise BasisDegenerate(f"({lhs.name}|{rhs.name}): free parameters remain",
                              _null_space_description(matrix, basis))
    coefficients = tuple(Fraction(int(v.p), int(v.q)) for v in solution)

    provenance = tuple((tuple(str(v) for v in c.values), str(h), str(value))
                       for (c, h), value in zip(used, values))
    element = ClosedFormElement(lhs, rhs, basis, coefficients, provenance, with_field)

    for c, h in _held_out_tuples(verify, with_field, seed):
        expected = exact_trace(lhs, rhs, c, h)
        got = element.evaluate(c, h)
        if got != expected:
            raise ClosedFormMismatch(f"({lhs.name}|{rhs.name}) on held-out J={list(map(str, c.values))}, "
                                     f"h={h}: closed form {got} vs trace {expected}")
    logger.info(f"Solved ({lhs.name}|{rhs.name}) over {size} monomials with {len(rows)} systems")
    return element


# ── Disk cache ───────────────────────────────────────────────────────────────

_cache: Dict[str, Any] = {}
_cache_loaded = False
_cache_lock = threading.Lock()


def _cache_path() -> Path:
    return Path(get_settings().cache_dir) / "closed_forms.json"


def _cache_key(lhs: Quantity, rhs: Quantity, with_field: bool) -> str:
    scope = Scope.FIELD.value if with_field else Scope.ZERO_FIELD.value
    return f"v{TABLE_VERSION}:{lhs.name} {rhs.name}:{scope}"


def _load_cache() -> None:
    global _cache, _cache_loaded
    if _cache_loaded:
        return
    _cache_loaded = True
    path = _cache_path()
    try:
        if path.exists():
            _cache = json.loads(path.read_text(encoding="utf-8"))
            logger.info(f"Loaded {len(_cache)} closed forms from {path}")
    except Exception as e:
        logger.warning(f"Failed to load closed-form cache: {e}")
        _cache = {}


def _save_cache() -> None:
    path = _cache_path()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_cache, indent=1, sort_keys=True), encoding="utf-8")
    except Exception as e:
        logger.warning(f"Failed to save closed-form cache: {e}")


def clear_cache() -> None:
    global _cache, _cache_loaded
    with _cache_lock:
        _cache = {}
        _cache_loaded = False


def cached_closed_form(lhs: Quantity, rhs: Quantity, with_field: bool = False,
                       use_cache: bool = True) -> ClosedFormElement:
    """solve_closed_form with the on-disk cache in front of it."""
    key = _cache_key(lhs, rhs, with_field)
    if use_cache:
        with _cache_lock:
            _load_cache()
            stored = _cache.get(key)
        if stored is not None:
            logger.debug(f"Closed-form cache hit for {key}")
            return ClosedFormElement.from_dict(stored)

    element = solve_closed_form(lhs, rhs, with_field=with_field)
    if use_cache:
        with _cache_lock:
            _cache[key] = element.to_dict()
            _save_cache()
    return element


# ── Table regeneration ───────────────────────────────────────────────────────

ORACLE_FIELDS = (0.0, 0.7, 3.2)
ORACLE_SIZES = (2, 3, 4, 5, 6)
ORACLE_RTOL = 1e-11


@dataclass
class ReportEntry:
    lhs: str
    rhs: str
    scope: str
    method: str
    status: str
    transcribed: str
    derived: Optional[str] = None
    max_error: Optional[float] = None
    message: Optional[str] = None


@dataclass
class AppendixReport:
    entries: List[ReportEntry] = field(default_factory=list)
    adjudication: Dict[str, Any] = field(default_factory=dict)

    @property
    def mismatches(self) -> List[ReportEntry]:
        return [e for e in self.entries if e.status != "match"]


def _oracle_couplings(seed: int) -> List[CouplingSet]:
    rng = random.Random(seed)
    return [random_rational_couplings(n, rng, distinct=True).as_floats() for n in ORACLE_SIZES]


def _placeholder_quantity(name: str, l: int, p: int) -> Quantity:
    if name in ("Hl", "Hlz"):
        return Quantity(QuantityKind(name), index=l)
    if name in ("Hp", "Hpz"):
        return Quantity(QuantityKind.HL if name == "Hp" else QuantityKind.HLZ, index=p)
    return parse_quantity(name)[0]


def _oracle_pairs(entry: TableEntry, N: int) -> List[Tuple[Quantity, Quantity]]:
    if entry.scope is not Scope.INDEXED:
        return [(parse_quantity(entry.lhs)[0], parse_quantity(entry.rhs)[0])]
    names = {entry.lhs, entry.rhs}
    off_diagonal = bool(names & {"Hp", "Hpz"})
    vector = bool(names & {"S0z", "Iz", "Bz"})
    if off_diagonal:
        index_pairs = [(1, N), (N, 0), (0, 2)]
    elif vector:
        index_pairs = [(1, 1), (N, N)]
    else:
        index_pairs = [(1, 1), (N, N)]
    return [(_placeholder_quantity(entry.lhs, l, p), _placeholder_quantity(entry.rhs, l, p))
            for l, p in index_pairs]


def dense_max_error(entry: TableEntry, couplings: Sequence[CouplingSet],
                    fields: Sequence[float] = ORACLE_FIELDS) -> float:
    """Largest |table - dense| relative to sqrt((A|A)(B|B)) over the oracle grid."""
    worst = 0.0
    single = ElementTable([TableEntry(entry.lhs, entry.rhs, entry.scope, entry.expr, entry.derived)])
    zero_field = entry.scope is Scope.ZERO_FIELD or "Bz" in (entry.lhs, entry.rhs)
    for c in couplings:
        for h in ((0.0,) if zero_field else fields):
            ctx = ElementContext(c, h, EvaluationMode.FLOAT, table=single)
            for lhs, rhs in _oracle_pairs(entry, c.N):
                value = float(ctx.pair(lhs, rhs))
                reference = dense_element(lhs, rhs, c, h)
                scale = np.sqrt(abs(dense_element(lhs, lhs, c, h) * dense_element(rhs, rhs, c, h)))
                worst = max(worst, abs(value - reference) / max(scale, 1e-300))
    return worst


def regenerate_appendix_c(with_field: bool = False, table: Optional[ElementTable] = None,
                          seed: int = 7, use_cache: bool = False) -> AppendixReport:
    """
    Re-derive the zero-field Σ-polynomial entries (and with `with_field` the arbitrary-h ones)
    with the solver and compare exactly; check every other entry against the dense oracle.
    """
    table = table or get_element_table()
    report = AppendixReport()
    couplings = _oracle_couplings(seed)
    h = SYMBOLS["h"]

    for entry in table.entries():
        solvable = entry.scope is Scope.ZERO_FIELD or (with_field and entry.scope is Scope.FIELD)
        if solvable:
            lhs, rhs = parse_quantity(entry.lhs)[0], parse_quantity(entry.rhs)[0]
            try:
                solved = cached_closed_form(lhs, rhs, entry.scope is Scope.FIELD, use_cache)
            except (CsmError, ValueError) as exc:
                report.entries.append(ReportEntry(entry.lhs, entry.rhs, entry.scope.value, "solver",
                                                  "error", entry.text, message=str(exc)))
                continue
            same = sympy.expand(solved.expr() - entry.expr) == 0
            report.entries.append(ReportEntry(entry.lhs, entry.rhs, entry.scope.value, "solver",
                                              "match" if same else "mismatch", entry.text,
                                              derived=solved.polynomial))
            continue
        try:
            error = dense_max_error(entry, couplings)
        except (CsmError, ValueError) as exc:
            report.entries.append(ReportEntry(entry.lhs, entry.rhs, entry.scope.value, "dense",
                                              "error", entry.text, message=str(exc)))
            continue
        report.entries.append(ReportEntry(entry.lhs, entry.rhs, entry.scope.value, "dense",
                                          "match" if error <= ORACLE_RTOL else "mismatch",
                                          entry.text, max_error=error))

    for alternate in table.alternates():
        primary = table.get(alternate.lhs, alternate.rhs, alternate.scope)
        if primary is None:
            continue
        primary_error = dense_max_error(primary, couplings, (0.0,))
        alternate_error = dense_max_error(alternate, couplings, (0.0,))
        zero_field = table.get(alternate.lhs, alternate.rhs, Scope.ZERO_FIELD)
        agrees_at_zero = None
        if zero_field is not None:
            agrees_at_zero = {
                "primary": sympy.expand(primary.expr.subs(h, 0) - zero_field.expr) == 0,
                "alternate": sympy.expand(alternate.expr.subs(h, 0) - zero_field.expr) == 0,
            }
        winner = "primary" if primary_error <= alternate_error else "alternate"
        report.adjudication[f"{alternate.lhs} {alternate.rhs}"] = {
            "primary": primary.text,
            "alternate": alternate.text,
            "primary_error": primary_error,
            "alternate_error": alternate_error,
            "agrees_with_zero_field": agrees_at_zero,
            "winner": winner,
        }
        logger.info(f"Adjudicated ({alternate.lhs}|{alternate.rhs}): {winner} "
                    f"(dense errors {primary_error:.2e} vs {alternate_error:.2e})")

    logger.info(f"Regenerated {len(report.entries)} elements, {len(report.mismatches)} mismatches")
    return report
