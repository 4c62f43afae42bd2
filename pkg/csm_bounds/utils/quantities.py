"""
Conserved-quantity descriptors and the named quantity sets used by the bound engine and CLI.
"""
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union


class QuantityKind(Enum):
    S0Z = "S0z"
    BZ = "Bz"
    IZ = "Iz"
    IQZ = "IQz"
    H0_POWER = "H0"
    IZ_H0_POWER = "IzH0"
    HL = "Hl"
    HLZ = "Hlz"
    IZ_I2_H0 = "IzI2H0"


# summed spin operators carried by each kind (per power for the H0 families)
_SPIN_OPERATORS = {
    QuantityKind.S0Z: 0,
    QuantityKind.BZ: 1,
    QuantityKind.IZ: 1,
    QuantityKind.IQZ: 3,
    QuantityKind.IZ_I2_H0: 4,
    QuantityKind.HL: 1,
    QuantityKind.HLZ: 2,
}

# kinds that change sign under a π rotation about x combined with h → -h
_ODD_KINDS = {QuantityKind.S0Z, QuantityKind.BZ, QuantityKind.IZ, QuantityKind.IQZ,
              QuantityKind.IZ_H0_POWER, QuantityKind.IZ_I2_H0, QuantityKind.HLZ}

# conserved only at h = 0 (or, for B^z, only meaningful as a zero-field target)
_ZERO_FIELD_KINDS = {QuantityKind.IQZ, QuantityKind.IZ_I2_H0, QuantityKind.BZ}


@dataclass(frozen=True)
class Quantity:
    kind: QuantityKind
    power: int = 1
    index: Optional[int] = None

    def __post_init__(self):
        if self.kind in (QuantityKind.H0_POWER, QuantityKind.IZ_H0_POWER):
            if self.power < 1:
                raise ValueError(f"{self.kind.value} power must be >= 1, got {self.power}")
        elif self.power != 1:
            raise ValueError(f"{self.kind.value} does not take a power")
        if self.is_indexed:
            if self.index is None or self.index < 0:
                raise ValueError(f"{self.kind.value} needs a site index l >= 0")
        elif self.index is not None:
            raise ValueError(f"{self.kind.value} does not take a site index")

    @property
    def name(self) -> str:
        if self.is_indexed:
            return f"{self.kind.value}[{self.index}]"
        if self.kind in (QuantityKind.H0_POWER, QuantityKind.IZ_H0_POWER) and self.power > 1:
            return f"{self.kind.value}^{self.power}"
        return self.kind.value

    def __str__(self) -> str:
        return self.name

    @property
    def is_indexed(self) -> bool:
        return self.kind in (QuantityKind.HL, QuantityKind.HLZ)

    @property
    def is_family(self) -> bool:
        """Members of the commuting family (I^z)^a H_0(h)^p."""
        return self.kind in (QuantityKind.IZ, QuantityKind.H0_POWER, QuantityKind.IZ_H0_POWER)

    @property
    def family_signature(self) -> Tuple[int, int]:
        if self.kind is QuantityKind.IZ:
            return (1, 0)
        if self.kind is QuantityKind.H0_POWER:
            return (0, self.power)
        if self.kind is QuantityKind.IZ_H0_POWER:
            return (1, self.power)
        raise ValueError(f"{self.name} is not in the I^z / H_0 family")

    @property
    def zero_field_only(self) -> bool:
        return self.kind in _ZERO_FIELD_KINDS

    @property
    def field_dependent(self) -> bool:
        return self.kind in (QuantityKind.H0_POWER, QuantityKind.IZ_H0_POWER,
                             QuantityKind.HL, QuantityKind.HLZ)

    @property
    def is_odd(self) -> bool:
        return self.kind in _ODD_KINDS

    @property
    def spin_operator_count(self) -> int:
        if self.kind is QuantityKind.H0_POWER:
            return self.power
        if self.kind is QuantityKind.IZ_H0_POWER:
            return 1 + self.power
        return _SPIN_OPERATORS[self.kind]

    @property
    def energy_order(self) -> int:
        if self.kind in (QuantityKind.H0_POWER, QuantityKind.IZ_H0_POWER):
            return self.power
        if self.kind in (QuantityKind.IZ_I2_H0, QuantityKind.BZ, QuantityKind.HL, QuantityKind.HLZ):
            return 1
        return 0

    def as_family(self) -> "Quantity":
        """H_l^z / H_l at l = 0 are I^z H_0(h) / H_0(h)."""
        if self.is_indexed and self.index == 0:
            kind = QuantityKind.IZ_H0_POWER if self.kind is QuantityKind.HLZ else QuantityKind.H0_POWER
            return Quantity(kind)
        return self


# ── Convenience constructors ────────────────────────────────────────────────

S0Z = Quantity(QuantityKind.S0Z)
BZ = Quantity(QuantityKind.BZ)
IZ = Quantity(QuantityKind.IZ)
IQZ = Quantity(QuantityKind.IQZ)
IZ_I2_H0 = Quantity(QuantityKind.IZ_I2_H0)


def h0_power(p: int = 1) -> Quantity:
    return Quantity(QuantityKind.H0_POWER, power=p)


def iz_h0_power(p: int = 1) -> Quantity:
    return Quantity(QuantityKind.IZ_H0_POWER, power=p)


def hl(l: int) -> Quantity:
    return Quantity(QuantityKind.HL, index=l)


def hlz(l: int) -> Quantity:
    return Quantity(QuantityKind.HLZ, index=l)


TARGETS = {"s0z": S0Z, "bz": BZ}

_SIMPLE_NAME = re.compile(r"^(S0z|Bz|Iz|IQz|IzI2H0)$", re.IGNORECASE)
_POWER_NAME = re.compile(r"^(IzH0|H0)(?:\^(\d+))?$", re.IGNORECASE)
_INDEXED_NAME = re.compile(r"^(Hlz|Hl)\[(\d+|\*)\]$", re.IGNORECASE)
_KIND_BY_LOWER = {kind.value.lower(): kind for kind in QuantityKind}


def parse_quantity(text: str, N: Optional[int] = None) -> List[Quantity]:
    """
    Parse one descriptor token. `Hlz[*]` / `Hl[*]` expand to l = 0..N and need N;
    every other token yields a single quantity.
    """
    token = text.strip()
    match = _SIMPLE_NAME.match(token)
    if match:
        return [Quantity(_KIND_BY_LOWER[match.group(1).lower()])]
    match = _POWER_NAME.match(token)
    if match:
        power = int(match.group(2)) if match.group(2) else 1
        return [Quantity(_KIND_BY_LOWER[match.group(1).lower()], power=power)]
    match = _INDEXED_NAME.match(token)
    if match:
        kind = _KIND_BY_LOWER[match.group(1).lower()]
        if match.group(2) != "*":
            return [Quantity(kind, index=int(match.group(2)))]
        if N is None:
            raise ValueError(f"'{token}' expands over all sites and needs N")
        return [Quantity(kind, index=l) for l in range(N + 1)]
    raise ValueError(f"unknown conserved quantity '{text}'")


def parse_target(text: str) -> Quantity:
    key = text.strip().lower()
    if key not in TARGETS:
        raise ValueError(f"unknown target '{text}', expected one of {sorted(TARGETS)}")
    return TARGETS[key]


# ── Named quantity sets ──────────────────────────────────────────────────────

class QuantitySet(Enum):
    IZ_ONLY = "iz-only"
    IQZ_ONLY = "iqz-only"
    IZH02_ONLY = "izh02-only"
    IZH03_ONLY = "izh03-only"
    IZI2H0_ONLY = "izi2h0-only"
    BASIC3 = "basic3"
    PLUS_H03 = "plus-h03"
    PLUS_I2H0 = "plus-i2h0"
    ALL6_ZERO_FIELD = "all6-zero-field"
    INTEGRABILITY = "integrability"
    HZ_ONLY = "hz-only"
    H_TWO = "h-two"
    H_THREE = "h-three"
    H_SIX = "h-six"
    H_SEVEN = "h-seven"
    HLZ_ALL = "hlz-all"
    H_INTEGRABILITY = "h-integrability"


_BASIC3 = ["Iz", "IQz", "IzH0"]
_H_SIX = ["H0", "IzH0", "H0^2", "IzH0^2", "H0^3", "IzH0^3"]

QUANTITY_SETS: Dict[QuantitySet, Dict[str, Any]] = {
    QuantitySet.IZ_ONLY: {"members": ["Iz"], "zero_field": False,
                          "description": "total magnetization only"},
    QuantitySet.IQZ_ONLY: {"members": ["IQz"], "zero_field": True,
                           "description": "I^z times the pair sum; decays as 1/N"},
    QuantitySet.IZH02_ONLY: {"members": ["IzH0^2"], "zero_field": False,
                             "description": "odd contraction count; decays as 1/N"},
    QuantitySet.IZH03_ONLY: {"members": ["IzH0^3"], "zero_field": False,
                             "description": "even contraction count; finite limit"},
    QuantitySet.IZI2H0_ONLY: {"members": ["IzI2H0"], "zero_field": True,
                              "description": "even contraction count; finite limit"},
    QuantitySet.BASIC3: {"members": _BASIC3, "zero_field": True,
                         "description": "I^z, I_Q^z and I^z H_0"},
    QuantitySet.PLUS_H03: {"members": _BASIC3 + ["IzH0^3"], "zero_field": True,
                           "description": "basic3 plus I^z H_0^3"},
    QuantitySet.PLUS_I2H0: {"members": _BASIC3 + ["IzI2H0"], "zero_field": True,
                            "description": "basic3 plus I^z I^2 H_0"},
    QuantitySet.ALL6_ZERO_FIELD: {"members": _BASIC3 + ["IzH0^2", "IzH0^3", "IzI2H0"],
                                  "zero_field": True,
                                  "description": "all six zero-field quantities"},
    QuantitySet.INTEGRABILITY: {"members": ["Iz", "Hlz[*]"], "zero_field": False,
                                "description": "I^z and every H_l^z (one linear dependency)"},
    QuantitySet.HZ_ONLY: {"members": ["IzH0"], "zero_field": False,
                          "description": "H_0^z(h) alone; decays as h^-2"},
    QuantitySet.H_TWO: {"members": ["IzH0", "H0"], "zero_field": False,
                        "description": "H_0^z(h) and H_0(h)"},
    QuantitySet.H_THREE: {"members": ["Iz", "IzH0", "H0"], "zero_field": False,
                          "description": "I^z, H_0^z(h) and H_0(h)"},
    QuantitySet.H_SIX: {"members": _H_SIX, "zero_field": False,
                        "description": "first three powers of H_0(h), with and without I^z"},
    QuantitySet.H_SEVEN: {"members": _H_SIX + ["Iz"], "zero_field": False,
                          "description": "h-six plus bare I^z"},
    QuantitySet.HLZ_ALL: {"members": ["Hlz[*]"], "zero_field": False,
                          "description": "every H_l^z(h)"},
    QuantitySet.H_INTEGRABILITY: {"members": ["Hlz[*]", "Hl[*]"], "zero_field": False,
                                  "description": "every H_l^z(h) and H_l(h)"},
}


def get_quantity_set(name: Union[str, QuantitySet], N: int) -> List[Quantity]:
    """Expand a named set for a bath of N spins."""
    key = name if isinstance(name, QuantitySet) else QuantitySet(name)
    quantities: List[Quantity] = []
    for token in QUANTITY_SETS[key]["members"]:
        quantities.extend(parse_quantity(token, N))
    return quantities


def parse_quantities(names: Union[str, Sequence[str]], N: int) -> List[Quantity]:
    """A set name, or an explicit comma-separated / listed collection of descriptor tokens."""
    if isinstance(names, str):
        if names in {s.value for s in QuantitySet}:
            return get_quantity_set(names, N)
        names = [token for token in names.split(",") if token.strip()]
    quantities: List[Quantity] = []
    for token in names:
        quantities.extend(parse_quantity(token, N))
    return quantities


def describe_quantities(quantities: Sequence[Quantity]) -> List[str]:
    """Compact names; a full run of H_l^z or H_l over l = 0..N collapses to Hlz[*] / Hl[*]."""
    names: List[str] = []
    indexed: Dict[QuantityKind, List[int]] = {}
    for q in quantities:
        if q.is_indexed:
            indexed.setdefault(q.kind, []).append(q.index)
        else:
            names.append(q.name)
    for kind, indices in indexed.items():
        if indices == list(range(len(indices))) and len(indices) > 1:
            names.append(f"{kind.value}[*]")
        else:
            names.extend(f"{kind.value}[{l}]" for l in indices)
    return names
