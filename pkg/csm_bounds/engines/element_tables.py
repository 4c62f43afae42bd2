"""
Closed-form scalar products (A|B) = Tr[rho A† B].

The bundled data file (csm_bounds/data/elements.txt) holds every tabulated element as a
polynomial in N, h, the moments Σ_m and the per-index quantities S^(l), Q^(l), J_p^(l), J_l, X^(l).
This module parses it once with sympy, resolves lookups (symmetry, cross references, the
I^z / H_0(h) commuting family) and evaluates entries in float, mpmath or exact arithmetic.
(N+1)² integrability blocks are evaluated with numpy broadcasting in float mode.

The Gaussian leading-order elements and the covariance entries of the
(B^x, B^y, B^z, I^z) ensemble live here as well.
"""
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import sympy
from scipy.special import factorial2
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from csm_bounds.exceptions import UnknownElement
from csm_bounds.utils.couplings import CouplingSet, EpsilonTable, FieldStrength, Number, epsilon_table
from csm_bounds.utils.quantities import Quantity, QuantityKind, parse_quantity

logger = logging.getLogger(__name__)

DATA_FILE = Path(__file__).resolve().parent.parent / "data" / "elements.txt"
TABLE_VERSION = 1

SCALAR_VARIABLES = ("N", "h", "S1", "S2", "S3", "S4", "S5", "S6")
INDEX_VARIABLES = ("Sl", "Sp", "Ql", "Qp", "Jlp", "Jl", "Xl")
VARIABLES = SCALAR_VARIABLES + INDEX_VARIABLES
SYMBOLS: Dict[str, sympy.Symbol] = {name: sympy.Symbol(name) for name in VARIABLES}
_ARGS = [SYMBOLS[name] for name in VARIABLES]
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


class Scope(str, Enum):
    ZERO_FIELD = "zero-field"
    FIELD = "field"
    INDEXED = "indexed"


class EvaluationMode(str, Enum):
    FLOAT = "float"
    MP = "mp"
    EXACT = "exact"


# ── Polynomial grammar ───────────────────────────────────────────────────────

def parse_polynomial(text: str) -> sympy.Expr:
    """Parse `3/64*N*S2 - 3/64*S2 + 2/64*S1^2`-style text; only table variables are allowed."""
    try:
        expr = parse_expr(text, local_dict=dict(SYMBOLS), transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise ValueError(f"cannot parse polynomial '{text}': {exc}") from exc
    expr = sympy.sympify(expr)
    unknown = expr.free_symbols - set(_ARGS)
    if unknown:
        raise ValueError(f"unknown variables {sorted(map(str, unknown))} in '{text}'")
    expanded = sympy.expand(expr)
    if not expanded.is_polynomial(*_ARGS):
        raise ValueError(f"'{text}' is not a polynomial")
    return expanded


def format_polynomial(expr: sympy.Expr) -> str:
    """Canonical text: expanded, `^` for powers."""
    return str(sympy.expand(expr)).replace("**", "^")


# ── Data file ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TableEntry:
    lhs: str
    rhs: str
    scope: Scope
    expr: sympy.Expr
    derived: bool = False
    alternate: bool = False
    alias_of: Optional[Tuple[str, str]] = None

    @property
    def key(self) -> Tuple[str, str]:
        return _key(self.lhs, self.rhs)

    @property
    def text(self) -> str:
        return format_polynomial(self.expr)


def _key(lhs: str, rhs: str) -> Tuple[str, str]:
    return tuple(sorted((lhs, rhs)))


def _family_signature(name: str) -> Optional[Tuple[int, int]]:
    try:
        quantities = parse_quantity(name)
    except ValueError:
        return None
    q = quantities[0]
    return q.family_signature if q.is_family else None


class ElementTable:
    """Parsed element table; lookups are symmetric in (lhs, rhs)."""

    def __init__(self, entries: Sequence[TableEntry], version: int = TABLE_VERSION):
        self.version = version
        self._entries: Dict[Tuple[Scope, Tuple[str, str]], TableEntry] = {}
        self._alternates: List[TableEntry] = []
        self._family: Dict[Tuple[Scope, Tuple[int, int]], TableEntry] = {}

        for entry in entries:
            if entry.alternate:
                self._alternates.append(entry)
                continue
            slot = (entry.scope, entry.key)
            if slot in self._entries:
                raise ValueError(f"duplicate table entry {entry.lhs} {entry.rhs} in [{entry.scope.value}]")
            self._entries[slot] = entry

        for (scope, _), entry in self._entries.items():
            if scope is Scope.INDEXED:
                continue
            first = _family_signature(entry.lhs)
            second = _family_signature(entry.rhs)
            if first is None or second is None:
                continue
            signature = (first[0] + second[0], first[1] + second[1])
            self._family.setdefault((scope, signature), entry)

    # ── Loading ──────────────────────────────────────────────────────────────

    @classmethod
    def loads(cls, text: str) -> "ElementTable":
        version = TABLE_VERSION
        scope: Optional[Scope] = None
        derived = alternate = False
        entries: List[TableEntry] = []
        pending: List[Tuple[str, str, Scope, bool, Tuple[str, str]]] = []

        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("version:"):
                    version = int(body.partition(":")[2])
                continue
            if line.startswith("["):
                header = line.strip("[]").strip()
                qualifier, _, name = header.rpartition(":")
                try:
                    scope = Scope(name)
                except ValueError as exc:
                    raise ValueError(f"line {number}: unknown section [{header}]") from exc
                derived = qualifier == "derived"
                alternate = qualifier == "alternate"
                continue
            if scope is None:
                raise ValueError(f"line {number}: element outside a section")

            if " : " in line:
                names, _, polynomial = line.partition(" : ")
                lhs, rhs = names.split()
                entries.append(TableEntry(lhs, rhs, scope, parse_polynomial(polynomial),
                                          derived=derived, alternate=alternate))
            elif " = " in line:
                names, _, target = line.partition(" = ")
                lhs, rhs = names.split()
                target_lhs, target_rhs = target.split()
                pending.append((lhs, rhs, scope, derived, (target_lhs, target_rhs)))
            else:
                raise ValueError(f"line {number}: expected 'LHS RHS : polynomial' or 'LHS RHS = LHS RHS'")

        entries.extend(_resolve_aliases(entries, pending))
        logger.debug(f"Parsed element table v{version}: {len(entries)} entries")
        return cls(entries, version)

    @classmethod
    def load(cls, path: Union[str, Path] = DATA_FILE) -> "ElementTable":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def dumps(self) -> str:
        lines = [f"# version: {self.version}"]
        for scope in Scope:
            lines.append(f"[{scope.value}]")
            for (entry_scope, _), entry in self._entries.items():
                if entry_scope is scope:
                    lines.append(f"{entry.lhs} {entry.rhs} : {entry.text}")
        return "\n".join(lines) + "\n"

    # ── Queries ──────────────────────────────────────────────────────────────

    def entries(self, scope: Optional[Scope] = None) -> List[TableEntry]:
        return [e for (s, _), e in self._entries.items() if scope is None or s is scope]

    def alternates(self) -> List[TableEntry]:
        return list(self._alternates)

    def get(self, lhs: str, rhs: str, scope: Scope) -> Optional[TableEntry]:
        return self._entries.get((scope, _key(lhs, rhs)))

    def family(self, signature: Tuple[int, int], scope: Scope) -> Optional[TableEntry]:
        return self._family.get((scope, signature))

    def lookup(self, lhs: Quantity, rhs: Quantity, h_is_zero: bool) -> sympy.Expr:
        """Expression for two non-indexed quantities."""
        scopes = [Scope.FIELD, Scope.ZERO_FIELD] if h_is_zero else [Scope.FIELD]
        for scope in scopes:
            entry = self.get(lhs.name, rhs.name, scope)
            if entry is not None:
                return entry.expr
        if lhs.is_family and rhs.is_family:
            a, b = lhs.family_signature, rhs.family_signature
            signature = (a[0] + b[0], a[1] + b[1])
            for scope in scopes:
                entry = self.family(signature, scope)
                if entry is not None:
                    return entry.expr
        if not h_is_zero and self.get(lhs.name, rhs.name, Scope.ZERO_FIELD) is not None:
            raise UnknownElement(lhs.name, rhs.name, "is only tabulated at h = 0")
        raise UnknownElement(lhs.name, rhs.name)

    def indexed(self, lhs: str, rhs: str) -> sympy.Expr:
        entry = self.get(lhs, rhs, Scope.INDEXED)
        if entry is None:
            raise UnknownElement(lhs, rhs)
        return entry.expr

    def consistency_mismatches(self) -> List[Tuple[str, str]]:
        """
        Pairs whose zero-field entry disagrees with the h = 0 value of the arbitrary-h entry
        (directly, or through the commuting-family signature).
        """
        h = SYMBOLS["h"]
        mismatches: List[Tuple[str, str]] = []
        for entry in self.entries(Scope.ZERO_FIELD):
            counterpart = self.get(entry.lhs, entry.rhs, Scope.FIELD)
            if counterpart is None:
                first = _family_signature(entry.lhs)
                second = _family_signature(entry.rhs)
                if first is not None and second is not None:
                    counterpart = self.family((first[0] + second[0], first[1] + second[1]), Scope.FIELD)
            if counterpart is None:
                continue
            if sympy.expand(counterpart.expr.subs(h, 0) - entry.expr) != 0:
                mismatches.append((entry.lhs, entry.rhs))
        return mismatches


def _resolve_aliases(entries: List[TableEntry],
                     pending: List[Tuple[str, str, Scope, bool, Tuple[str, str]]]) -> List[TableEntry]:
    known: Dict[Tuple[Scope, Tuple[str, str]], TableEntry] = {
        (e.scope, e.key): e for e in entries if not e.alternate
    }
    resolved: List[TableEntry] = []
    while pending:
        remaining = []
        for lhs, rhs, scope, derived, target in pending:
            found = known.get((scope, _key(*target)))
            expr = found.expr if found is not None else None
            if found is None and scope is Scope.ZERO_FIELD:
                found = known.get((Scope.FIELD, _key(*target)))
                expr = found.expr.subs(SYMBOLS["h"], 0) if found is not None else None
            if found is None:
                remaining.append((lhs, rhs, scope, derived, target))
                continue
            entry = TableEntry(lhs, rhs, scope, sympy.expand(expr), derived=derived, alias_of=target)
            known[(scope, entry.key)] = entry
            resolved.append(entry)
        if len(remaining) == len(pending):
            names = ", ".join(f"{l} {r} = {t[0]} {t[1]}" for l, r, _, _, t in remaining)
            raise ValueError(f"unresolved cross references: {names}")
        pending = remaining
    return resolved


_default_table: Optional[ElementTable] = None
_default_table_lock = threading.Lock()


def get_element_table() -> ElementTable:
    global _default_table
    with _default_table_lock:
        if _default_table is None:
            _default_table = ElementTable.load(DATA_FILE)
            logger.info(f"Loaded element table v{_default_table.version} from {DATA_FILE.name}")
        return _default_table


# ── Evaluation ───────────────────────────────────────────────────────────────

_compiled: Dict[Tuple[sympy.Expr, str], Callable] = {}
_compiled_lock = threading.Lock()


def _compile(expr: sympy.Expr, module: str) -> Callable:
    key = (expr, module)
    with _compiled_lock:
        function = _compiled.get(key)
        if function is None:
            function = sympy.lambdify(_ARGS, expr, modules=module)
            _compiled[key] = function
    return function


def _to_rational(value: Number) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


def evaluate(expr: sympy.Expr, env: Dict[str, object], mode: EvaluationMode = EvaluationMode.FLOAT):
    """
    Evaluate a table expression. In float mode the environment may hold numpy arrays
    (broadcast together); mp and exact modes take scalars only.
    """
    if mode is EvaluationMode.EXACT:
        substitutions = {SYMBOLS[name]: _to_rational(value) for name, value in env.items()
                         if SYMBOLS[name] in expr.free_symbols}
        value = sympy.Rational(expr.xreplace(substitutions))
        return Fraction(int(value.p), int(value.q))
    args = [env.get(name, 0) for name in VARIABLES]
    if mode is EvaluationMode.MP:
        return mpmath.mpf(_compile(expr, "mpmath")(*args))
    return _compile(expr, "numpy")(*args)


@dataclass
class ElementContext:
    """Coupling set, field and arithmetic mode shared by every element of one assembly."""

    couplings: CouplingSet
    h: FieldStrength = 0
    mode: EvaluationMode = EvaluationMode.FLOAT
    precision_bits: int = 53
    table: ElementTable = field(default_factory=get_element_table)
    _scalars: Optional[Dict[str, Number]] = field(default=None, repr=False)
    _epsilon: Optional[EpsilonTable] = field(default=None, repr=False)

    def __post_init__(self):
        self.mode = EvaluationMode(self.mode)
        if self.mode is EvaluationMode.EXACT:
            self.couplings = self.couplings.as_fractions()
            self.h = Fraction(self.h) if isinstance(self.h, (int, Fraction)) else Fraction(float(self.h))
        elif self.mode is EvaluationMode.MP:
            self.couplings = self.couplings.with_precision(self.precision_bits)
            with mpmath.workprec(self.precision_bits):
                self.h = mpmath.mpf(self.h.numerator) / self.h.denominator \
                    if isinstance(self.h, Fraction) else mpmath.mpf(self.h)
        else:
            self.couplings = self.couplings.as_floats()
            self.h = float(self.h)

    @property
    def h_is_zero(self) -> bool:
        return self.h == 0

    @property
    def scalars(self) -> Dict[str, Number]:
        if self._scalars is None:
            with mpmath.workprec(self.precision_bits):
                env = self.couplings.moments(6).as_dict(6)
            env["h"] = self.h
            self._scalars = env
        return self._scalars

    @property
    def epsilon(self) -> EpsilonTable:
        if self._epsilon is None:
            with mpmath.workprec(self.precision_bits):
                self._epsilon = epsilon_table(self.couplings)
        return self._epsilon

    def index_env(self, l, p=None) -> Dict[str, object]:
        t = self.epsilon
        env = dict(self.scalars)
        env.update(Sl=t.rowsum[l], Ql=t.rowsq[l], Jl=t.bath_couplings[l], Xl=t.cross[l])
        if p is not None:
            env.update(Sp=t.rowsum[p], Qp=t.rowsq[p], Jlp=t.jshift[l, p])
        return env

    def value(self, expr: sympy.Expr, env: Optional[Dict[str, object]] = None):
        with mpmath.workprec(self.precision_bits):
            return evaluate(expr, env if env is not None else self.scalars, self.mode)

    # ── Single elements ──────────────────────────────────────────────────────

    def pair(self, lhs: Quantity, rhs: Quantity) -> Number:
        if lhs.is_indexed and not rhs.is_indexed:
            lhs, rhs = rhs, lhs
        if not rhs.is_indexed:
            return self.value(self.table.lookup(lhs, rhs, self.h_is_zero))
        if not lhs.is_indexed:
            if rhs.index == 0:
                return self.pair(lhs, rhs.as_family())
            self._check_index(rhs)
            return self.value(self.table.indexed(lhs.name, rhs.kind.value), self.index_env(rhs.index))
        if lhs.index == 0 and rhs.index == 0:
            return self.pair(lhs.as_family(), rhs.as_family())
        self._check_index(lhs)
        self._check_index(rhs)
        expr, first, second = self._block_expression(lhs.kind, rhs.kind, lhs.index == rhs.index)
        l, p = (lhs.index, rhs.index) if first is lhs.kind else (rhs.index, lhs.index)
        return self.value(expr, self.index_env(l, None if l == p else p))

    def _check_index(self, q: Quantity) -> None:
        if q.index > self.couplings.N:
            raise ValueError(f"{q.name} needs l <= N = {self.couplings.N}")

    def _block_expression(self, a: QuantityKind, b: QuantityKind,
                          diagonal: bool) -> Tuple[sympy.Expr, QuantityKind, QuantityKind]:
        """Expression for (a[l] | b[p]) with the kind ordering the table uses (H_l before H_l^z)."""
        first, second = (a, b) if not (a is QuantityKind.HLZ and b is QuantityKind.HL) else (b, a)
        if diagonal:
            return self.table.indexed(first.value, second.value), first, second
        other = {QuantityKind.HL: "Hp", QuantityKind.HLZ: "Hpz"}[second]
        return self.table.indexed(first.value, other), first, second

    # ── Vectorized blocks ────────────────────────────────────────────────────

    def column(self, q: Quantity, kind: QuantityKind, indices: Sequence[int]) -> np.ndarray:
        """(q | kind[l]) for every l in indices; q is not indexed."""
        indices = list(indices)
        if self.mode is not EvaluationMode.FLOAT:
            return np.array([self.pair(q, Quantity(kind, index=l)) for l in indices], dtype=object)
        out = np.empty(len(indices), dtype=float)
        rest = [i for i, l in enumerate(indices) if l != 0]
        for i, l in enumerate(indices):
            if l == 0:
                out[i] = self.pair(q, Quantity(kind, index=0))
        if rest:
            idx = np.array([indices[i] for i in rest])
            if idx.max() > self.couplings.N:
                raise ValueError(f"index {idx.max()} exceeds N = {self.couplings.N}")
            expr = self.table.indexed(q.name, kind.value)
            out[rest] = np.broadcast_to(self.value(expr, self.index_env(idx)), idx.shape)
        return out

    def block(self, kind_a: QuantityKind, idx_a: Sequence[int],
              kind_b: QuantityKind, idx_b: Sequence[int]) -> np.ndarray:
        """(kind_a[l] | kind_b[p]) for l in idx_a, p in idx_b."""
        if self.mode is not EvaluationMode.FLOAT:
            out = np.empty((len(idx_a), len(idx_b)), dtype=object)
            for i, l in enumerate(idx_a):
                for j, p in enumerate(idx_b):
                    out[i, j] = self.pair(Quantity(kind_a, index=l), Quantity(kind_b, index=p))
            return out
        if kind_a is QuantityKind.HLZ and kind_b is QuantityKind.HL:
            return self.block(kind_b, idx_b, kind_a, idx_a).T

        L = np.asarray(idx_a)[:, None]
        P = np.asarray(idx_b)[None, :]
        if max(L.max(), P.max()) > self.couplings.N:
            raise ValueError(f"index exceeds N = {self.couplings.N}")
        shape = (L.shape[0], P.shape[1])
        diag_expr, _, _ = self._block_expression(kind_a, kind_b, True)
        off_expr, _, _ = self._block_expression(kind_a, kind_b, False)
        diagonal = np.broadcast_to(self.value(diag_expr, self.index_env(L)), (L.shape[0], 1))
        off = np.broadcast_to(self.value(off_expr, self.index_env(L, P)), shape)
        return np.where(L == P, np.broadcast_to(diagonal, shape), off)


def _groups(quantities: Sequence[Quantity]) -> List[Tuple[Optional[QuantityKind], List[int]]]:
    """Consecutive runs: (kind, positions) for indexed runs, (None, [position]) otherwise."""
    groups: List[Tuple[Optional[QuantityKind], List[int]]] = []
    for position, q in enumerate(quantities):
        kind = q.kind if q.is_indexed else None
        if kind is not None and groups and groups[-1][0] is kind:
            groups[-1][1].append(position)
        else:
            groups.append((kind, [position]))
    return groups


def gram_matrix(quantities: Sequence[Quantity], ctx: ElementContext) -> np.ndarray:
    """𝐍[i][m] = (C_i | C_m); float64 in float mode, object array otherwise."""
    n = len(quantities)
    dtype = float if ctx.mode is EvaluationMode.FLOAT else object
    matrix = np.empty((n, n), dtype=dtype)
    groups = _groups(quantities)
    for gi, (kind_a, pos_a) in enumerate(groups):
        for kind_b, pos_b in groups[gi:]:
            if kind_a is None and kind_b is None:
                block = np.array([[ctx.pair(quantities[pos_a[0]], quantities[pos_b[0]])]], dtype=dtype)
            elif kind_a is None:
                block = ctx.column(quantities[pos_a[0]], kind_b,
                                   [quantities[p].index for p in pos_b])[None, :]
            elif kind_b is None:
                block = ctx.column(quantities[pos_b[0]], kind_a,
                                   [quantities[p].index for p in pos_a])[:, None]
            else:
                block = ctx.block(kind_a, [quantities[p].index for p in pos_a],
                                  kind_b, [quantities[p].index for p in pos_b])
            matrix[np.ix_(pos_a, pos_b)] = block
            matrix[np.ix_(pos_b, pos_a)] = block.T
    return matrix


def overlap_vector(target: Quantity, quantities: Sequence[Quantity], ctx: ElementContext) -> np.ndarray:
    """a_C[i] = (C_i | target)."""
    dtype = float if ctx.mode is EvaluationMode.FLOAT else object
    vector = np.empty(len(quantities), dtype=dtype)
    for kind, positions in _groups(quantities):
        if kind is None:
            vector[positions[0]] = ctx.pair(quantities[positions[0]], target)
        else:
            vector[positions] = ctx.column(target, kind, [quantities[p].index for p in positions])
    return vector


def element(lhs: Quantity, rhs: Quantity, c: CouplingSet, h: FieldStrength = 0,
            mode: Union[str, EvaluationMode] = EvaluationMode.FLOAT, precision_bits: int = 53) -> Number:
    """One scalar product from the closed-form tables."""
    ctx = ElementContext(c, h, EvaluationMode(mode), precision_bits)
    value = ctx.pair(lhs, rhs)
    return float(value) if ctx.mode is EvaluationMode.FLOAT else value


# ── Gaussian leading order ───────────────────────────────────────────────────

def double_factorial(n: int) -> int:
    """n!! for n >= -1, exact integer."""
    if n < -1:
        raise ValueError(f"double factorial undefined for {n}")
    if n <= 0:
        return 1
    return int(factorial2(n, exact=True))


def _moment_pair(c: CouplingSet, exact: bool):
    if exact:
        c = c.as_fractions()
        return c.sigma(1), c.sigma(2), c.N
    s1, s2 = (mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else mpmath.mpf(v)
              for v in (c.sigma(1), c.sigma(2)))
    return s1, s2, c.N


def gaussian_matrix_element(m: int, c: CouplingSet, exact: bool = False):
    """
    Leading order of (I^z H_0^k | I^z H_0^k') with k + k' = 2m:
    (2m+1)!!/2^{4m+2} (N Σ_2^m + (2m/3) Σ_2^{m-1} Σ_1²). At m = 0 this is N/4.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    s1, s2, n = _moment_pair(c, exact)
    weight = Fraction(double_factorial(2 * m + 1), 2 ** (4 * m + 2))
    if m == 0:
        return weight * n if exact else mpmath.mpf(weight.numerator) / weight.denominator * n
    if exact:
        return weight * (n * s2 ** m + Fraction(2 * m, 3) * s2 ** (m - 1) * s1 ** 2)
    w = mpmath.mpf(weight.numerator) / weight.denominator
    return w * (n * s2 ** m + mpmath.mpf(2 * m) / 3 * s2 ** (m - 1) * s1 ** 2)


def gaussian_vector_element(m: int, c: CouplingSet, exact: bool = False):
    """Leading order of (S_0^z | I^z H_0^{2m-1}): (2m+1)!!/(3·2^{4m}) Σ_2^{m-1} Σ_1."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    s1, s2, _ = _moment_pair(c, exact)
    weight = Fraction(double_factorial(2 * m + 1), 3 * 2 ** (4 * m))
    if exact:
        return weight * s2 ** (m - 1) * s1
    return mpmath.mpf(weight.numerator) / weight.denominator * s2 ** (m - 1) * s1


@dataclass(frozen=True)
class CovarianceEntries:
    """σ² = (B^z|B^z), β² = (B^z|I^z), α² = (I^z|I^z) to leading order (bath count N)."""

    sigma2: Number
    beta2: Number
    alpha2: Number

    @classmethod
    def from_couplings(cls, c: CouplingSet) -> "CovarianceEntries":
        if c.is_exact:
            return cls(c.sigma(2) / 4, c.sigma(1) / 4, Fraction(c.N, 4))
        return cls(float(c.sigma(2)) / 4, float(c.sigma(1)) / 4, c.N / 4)

    def is_positive(self) -> bool:
        return self.sigma2 > 0 and self.beta2 > 0 and self.alpha2 > 0
