"""
Domain errors. Result-quality conditions (ILL_CONDITIONED, APPROXIMATE, ambiguous
degeneracies) are reported as flags on results, not raised.
"""
from typing import Any, List, Optional


class CsmError(Exception):
    """Base class for all errors raised by csm_bounds."""


class ConfigError(CsmError):
    pass


class DegenerateCouplings(CsmError):
    def __init__(self, first: int, second: int, value: Any):
        self.first = first
        self.second = second
        self.value = value
        super().__init__(f"couplings J_{first} and J_{second} coincide ({value}); "
                         f"epsilon table needs pairwise distinct couplings")


class ResourceExceeded(CsmError):
    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: {size} exceeds the configured limit {limit}")


class UnknownElement(CsmError):
    def __init__(self, lhs: str, rhs: str, reason: str = "not in the element table"):
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"({lhs} | {rhs}) {reason}")


class BasisDegenerate(CsmError):
    def __init__(self, message: str, null_space: Optional[List[List[Any]]] = None):
        self.null_space = null_space or []
        super().__init__(message)


class InsufficientSystems(CsmError):
    pass


class ClosedFormMismatch(CsmError):
    pass


class InsufficientPoints(CsmError):
    def __init__(self, needed: int, available: int):
        self.needed = needed
        self.available = available
        super().__init__(f"fit needs at least {needed} points, {available} available")


class AmbiguousDegeneracy(CsmError):
    def __init__(self, gaps: List[float], threshold: float):
        self.gaps = gaps
        self.threshold = threshold
        super().__init__(f"{len(gaps)} spectral gap(s) within a factor 10 of the degeneracy "
                         f"threshold {threshold:.3e}")
