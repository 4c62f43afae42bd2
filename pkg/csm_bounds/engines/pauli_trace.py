"""
Exact symbolic engine for spin-1/2 operators on N+1 sites.

Operators are sums of Pauli strings with Gaussian-rational coefficients. A string is stored in
the symplectic (x-mask, z-mask) encoding, bit k <-> site k, with
    sigma(x, z) = i^{popcount(x & z)} X^x Z^z,
so that X = (1, 0), Y = (1, 1), Z = (0, 1) on a single site. Traces are taken in the maximally
mixed state, i.e. the normalized trace: only the identity string survives.
"""
import logging
from fractions import Fraction
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

from csm_bounds.exceptions import ResourceExceeded
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, FieldStrength, epsilon_table
from csm_bounds.utils.quantities import Quantity, QuantityKind

logger = logging.getLogger(__name__)

LETTERS = ("X", "Y", "Z")
_LETTER_BITS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_HALF = Fraction(1, 2)


class GaussianRational:
    """re + i·im with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Union[int, Fraction] = 0, im: Union[int, Fraction] = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(Fraction(value))

    def __add__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussianRational.coerce(other)
        return GaussianRational(self.re * other.re - self.im * other.im,
                                self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def times_i_power(self, k: int) -> "GaussianRational":
        k %= 4
        if k == 0:
            return self
        if k == 1:
            return GaussianRational(-self.im, self.re)
        if k == 2:
            return GaussianRational(-self.re, -self.im)
        return GaussianRational(self.im, -self.re)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __eq__(self, other) -> bool:
        try:
            other = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        return f"{self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i"


class PauliString(NamedTuple):
    x: int
    z: int

    @classmethod
    def from_sites(cls, sites: Mapping[int, str]) -> "PauliString":
        x = z = 0
        for site, letter in sites.items():
            bx, bz = _LETTER_BITS[letter]
            x |= bx << site
            z |= bz << site
        return cls(x, z)

    @property
    def sites(self) -> Dict[int, str]:
        result: Dict[int, str] = {}
        support = self.x | self.z
        site = 0
        while support >> site:
            if (support >> site) & 1:
                bx, bz = (self.x >> site) & 1, (self.z >> site) & 1
                result[site] = "X" if not bz else ("Z" if not bx else "Y")
            site += 1
        return result

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def sort_key(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((site, LETTERS.index(letter)) for site, letter in self.sites.items())

    def __str__(self) -> str:
        return " ".join(f"{site}:{letter}" for site, letter in self.sites.items())


_IDENTITY = PauliString(0, 0)


def _string_product(p: PauliString, q: PauliString) -> Tuple[PauliString, int]:
    """sigma_p sigma_q = i^k sigma_r."""
    x, z = p.x ^ q.x, p.z ^ q.z
    k = ((p.x & p.z).bit_count() + (q.x & q.z).bit_count()
         + 2 * (p.z & q.x).bit_count() - (x & z).bit_count())
    return PauliString(x, z), k % 4


class PauliExpression:
    """Immutable sum of weighted Pauli strings on `site_count` sites."""

    __slots__ = ("site_count", "_terms")

    def __init__(self, site_count: int, terms: Optional[Mapping[PauliString, GaussianRational]] = None):
        self.site_count = site_count
        self._terms: Dict[PauliString, GaussianRational] = {}
        for string, coefficient in (terms or {}).items():
            coefficient = GaussianRational.coerce(coefficient)
            if not coefficient.is_zero():
                self._terms[string] = coefficient

    # ── constructors ─────────────────────────────────────────────────────────
    @classmethod
    def identity(cls, site_count: int, coefficient=1) -> "PauliExpression":
        return cls(site_count, {_IDENTITY: coefficient})

    @classmethod
    def zero(cls, site_count: int) -> "PauliExpression":
        return cls(site_count)

    @classmethod
    def sigma(cls, site_count: int, site: int, letter: str) -> "PauliExpression":
        _check_site(site, site_count)
        return cls(site_count, {PauliString.from_sites({site: letter}): 1})

    @classmethod
    def spin(cls, site_count: int, site: int, letter: str) -> "PauliExpression":
        """S_site^letter = sigma/2."""
        _check_site(site, site_count)
        return cls(site_count, {PauliString.from_sites({site: letter}): _HALF})

    # ── accessors ────────────────────────────────────────────────────────────
    @property
    def terms(self) -> Mapping[PauliString, GaussianRational]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, sites: Mapping[int, str]) -> GaussianRational:
        return self._terms.get(PauliString.from_sites(sites), GaussianRational())

    def is_zero(self) -> bool:
        return not self._terms

    def sorted_terms(self) -> List[Tuple[PauliString, GaussianRational]]:
        return sorted(self._terms.items(), key=lambda item: item[0].sort_key())

    # ── algebra ──────────────────────────────────────────────────────────────
    def _check_compatible(self, other: "PauliExpression") -> None:
        if self.site_count != other.site_count:
            raise ValueError(f"site count mismatch: {self.site_count} vs {other.site_count}")

    def __add__(self, other: "PauliExpression") -> "PauliExpression":
        self._check_compatible(other)
        terms = dict(self._terms)
        for string, coefficient in other._terms.items():
            terms[string] = terms[string] + coefficient if string in terms else coefficient
        return PauliExpression(self.site_count, terms)

    def __neg__(self) -> "PauliExpression":
        return PauliExpression(self.site_count, {s: -c for s, c in self._terms.items()})

    def __sub__(self, other: "PauliExpression") -> "PauliExpression":
        return self + (-other)

    def scale(self, factor) -> "PauliExpression":
        factor = GaussianRational.coerce(factor)
        return PauliExpression(self.site_count, {s: c * factor for s, c in self._terms.items()})

    def __mul__(self, other) -> "PauliExpression":
        if isinstance(other, PauliExpression):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "PauliExpression":
        return self.scale(other)

    def adjoint(self) -> "PauliExpression":
        # Pauli strings are Hermitian
        return PauliExpression(self.site_count, {s: c.conjugate() for s, c in self._terms.items()})

    def is_hermitian(self) -> bool:
        return all(c.is_real() for c in self._terms.values())

    def trace(self) -> GaussianRational:
        return trace(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliExpression):
            return NotImplemented
        return self.site_count == other.site_count and self._terms == other._terms

    def __repr__(self) -> str:
        return f"PauliExpression(site_count={self.site_count}, terms={len(self._terms)})"

    # ── text format ──────────────────────────────────────────────────────────
    def dumps(self) -> str:
        lines = [f"# sites={self.site_count}"]
        for string, coefficient in self.sorted_terms():
            line = f"{coefficient.re} {coefficient.im}"
            if not string.is_identity:
                line += f" {string}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PauliExpression":
        site_count = None
        terms: Dict[PauliString, GaussianRational] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line.lstrip("#").split():
                    if token.startswith("sites="):
                        site_count = int(token.split("=", 1)[1])
                continue
            tokens = line.split()
            coefficient = GaussianRational(Fraction(tokens[0]), Fraction(tokens[1]))
            sites = {}
            for token in tokens[2:]:
                site, _, letter = token.partition(":")
                sites[int(site)] = letter
            string = PauliString.from_sites(sites)
            terms[string] = terms[string] + coefficient if string in terms else coefficient
        if site_count is None:
            raise ValueError("missing '# sites=<n>' header")
        return cls(site_count, terms)


def _check_site(site: int, site_count: int) -> None:
    if not 0 <= site < site_count:
        raise ValueError(f"site {site} outside 0..{site_count - 1}")


def multiply(a: PauliExpression, b: PauliExpression, term_cap: Optional[int] = None) -> PauliExpression:
    """Exact product a·b; raises ResourceExceeded when the result outgrows the term cap."""
    a._check_compatible(b)
    cap = term_cap if term_cap is not None else get_settings().term_cap
    acc: Dict[PauliString, GaussianRational] = {}
    for p, ca in a._terms.items():
        for q, cb in b._terms.items():
            string, k = _string_product(p, q)
            coefficient = (ca * cb).times_i_power(k)
            if string in acc:
                acc[string] = acc[string] + coefficient
            else:
                acc[string] = coefficient
                if len(acc) > cap:
                    raise ResourceExceeded("Pauli expression term count", len(acc), cap)
    return PauliExpression(a.site_count, acc)


def trace(e: PauliExpression) -> GaussianRational:
    """Normalized trace Tr[rho e] with rho = 1/Tr 1: the identity coefficient."""
    return e._terms.get(_IDENTITY, GaussianRational())


def scalar_product(a: PauliExpression, b: PauliExpression) -> GaussianRational:
    """
    (a|b) = Tr[rho a† b]. Pauli strings are orthonormal under the normalized trace,
    so this is the coefficient overlap Σ_s conj(a_s) b_s.
    """
    a._check_compatible(b)
    total = GaussianRational()
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    for string, coefficient in small._terms.items():
        if string in large._terms:
            total = total + a._terms[string].conjugate() * b._terms[string]
    return total


def norm_squared(a: PauliExpression) -> Fraction:
    return scalar_product(a, a).re


def commutator(a: PauliExpression, b: PauliExpression) -> PauliExpression:
    return multiply(a, b) - multiply(b, a)


def power(a: PauliExpression, p: int) -> PauliExpression:
    if p < 0:
        raise ValueError(f"negative power {p}")
    result = PauliExpression.identity(a.site_count)
    for _ in range(p):
        result = multiply(result, a)
    return result


# ── Operator builders ────────────────────────────────────────────────────────

def _exact(value) -> Fraction:
    return Fraction(value) if isinstance(value, (int, Fraction)) else Fraction(float(value))


def spin_dot(site_count: int, a: int, b: int) -> PauliExpression:
    """S_a · S_b."""
    if a == b:
        return PauliExpression.identity(site_count, Fraction(3, 4))
    quarter = Fraction(1, 4)
    return PauliExpression(site_count, {
        PauliString.from_sites({a: letter, b: letter}): quarter for letter in LETTERS
    })


def weighted_sum(site_count: int, parts: Iterable[Tuple[Fraction, PauliExpression]]) -> PauliExpression:
    terms: Dict[PauliString, GaussianRational] = {}
    for weight, expr in parts:
        for string, coefficient in expr.terms.items():
            value = coefficient * weight
            terms[string] = terms[string] + value if string in terms else value
    return PauliExpression(site_count, terms)


def total_spin_component(site_count: int, letter: str = "Z") -> PauliExpression:
    return weighted_sum(site_count, ((Fraction(1), PauliExpression.spin(site_count, k, letter))
                                     for k in range(site_count)))


def pair_sum(site_count: int) -> PauliExpression:
    """Σ_{k<l} S_k·S_l over all sites; equals (I² - 3(N+1)/4)/2."""
    return weighted_sum(site_count, ((Fraction(1), spin_dot(site_count, a, b))
                                     for a in range(site_count) for b in range(a + 1, site_count)))


def total_spin_squared(site_count: int) -> PauliExpression:
    return (PauliExpression.identity(site_count, Fraction(3 * site_count, 4))
            + pair_sum(site_count).scale(2))


def overhauser_component(c: CouplingSet, letter: str = "Z") -> PauliExpression:
    """B^letter = Σ_k J_k S_k^letter."""
    n = c.N + 1
    return weighted_sum(n, ((_exact(J), PauliExpression.spin(n, k, letter))
                            for k, J in enumerate(c.values, start=1)))


def overhauser_squared(c: CouplingSet) -> PauliExpression:
    n = c.N + 1
    total = PauliExpression.zero(n)
    for letter in LETTERS:
        component = overhauser_component(c, letter)
        total = total + multiply(component, component)
    return total


def central_dot_overhauser(c: CouplingSet) -> PauliExpression:
    """S_0 · B, i.e. H_0 at zero field."""
    n = c.N + 1
    return weighted_sum(n, ((_exact(J), spin_dot(n, 0, k)) for k, J in enumerate(c.values, start=1)))


def eta_operator(c: CouplingSet) -> PauliExpression:
    """η = Σ_l J_l² S_0·S_l."""
    n = c.N + 1
    return weighted_sum(n, ((_exact(J) ** 2, spin_dot(n, 0, k)) for k, J in enumerate(c.values, start=1)))


def q_operator(c: CouplingSet) -> PauliExpression:
    """Q = B² - 2η, conserved and equal to 4 (S_0·B)²."""
    return overhauser_squared(c) - eta_operator(c).scale(2)


def zeta_operator(c: CouplingSet) -> PauliExpression:
    """ζ = Σ_{l≥1} Σ_{j≥1, j≠l} J_j^(l) (-1/ε_l) S_l·S_j."""
    n = c.N + 1
    table = epsilon_table(c.as_fractions())
    parts = []
    for l in range(1, n):
        for j in range(1, n):
            if j != l:
                parts.append((table.jshift[l, j] * (-1 / table.eps[l]), spin_dot(n, l, j)))
    return weighted_sum(n, parts)


def central_hamiltonian(c: CouplingSet, h: FieldStrength = 0) -> PauliExpression:
    """H_0(h) = Σ_k J_k S_0·S_k - h S_0^z."""
    n = c.N + 1
    return central_dot_overhauser(c) - PauliExpression.spin(n, 0, "Z").scale(_exact(h))


def gaudin_hamiltonian(c: CouplingSet, l: int, h: FieldStrength = 0, table=None) -> PauliExpression:
    """H_l(h) = Σ_{k≠l} J_k^(l) S_l·S_k - h S_l^z."""
    n = c.N + 1
    _check_site(l, n)
    if l == 0:
        return central_hamiltonian(c, h)
    table = table if table is not None else epsilon_table(c.as_fractions())
    parts = [(table.jshift[l, k], spin_dot(n, l, k)) for k in range(n) if k != l]
    return weighted_sum(n, parts) - PauliExpression.spin(n, l, "Z").scale(_exact(h))


def build_operator(q: Quantity, c: CouplingSet, h: FieldStrength = 0,
                   term_cap: Optional[int] = None) -> PauliExpression:
    """Exact Pauli expansion of a conserved quantity or target observable."""
    if not c.is_exact:
        c = c.as_fractions()
    h = _exact(h)
    n = c.N + 1
    kind = q.kind

    if kind is QuantityKind.S0Z:
        return PauliExpression.spin(n, 0, "Z")
    if kind is QuantityKind.IZ:
        return total_spin_component(n, "Z")
    if kind is QuantityKind.BZ:
        return overhauser_component(c, "Z")
    if kind is QuantityKind.IQZ:
        return multiply(total_spin_component(n, "Z"), pair_sum(n), term_cap)
    if kind is QuantityKind.IZ_I2_H0:
        inner = multiply(total_spin_squared(n), central_hamiltonian(c, 0), term_cap)
        return multiply(total_spin_component(n, "Z"), inner, term_cap)
    if kind is QuantityKind.H0_POWER:
        return _hamiltonian_power(central_hamiltonian(c, h), q.power, term_cap)
    if kind is QuantityKind.IZ_H0_POWER:
        powered = _hamiltonian_power(central_hamiltonian(c, h), q.power, term_cap)
        return multiply(total_spin_component(n, "Z"), powered, term_cap)
    if kind is QuantityKind.HL:
        return gaudin_hamiltonian(c, q.index, h)
    if kind is QuantityKind.HLZ:
        return multiply(total_spin_component(n, "Z"), gaudin_hamiltonian(c, q.index, h), term_cap)
    raise ValueError(f"no symbolic construction for {q.name}")


def _hamiltonian_power(base: PauliExpression, p: int, term_cap: Optional[int]) -> PauliExpression:
    result = base
    for step in range(1, p):
        result = multiply(result, base, term_cap)
        logger.debug(f"H0 power {step + 1}: {len(result)} strings")
    return result
