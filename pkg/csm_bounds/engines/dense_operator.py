"""
Dense matrix realization of the operators on the full 2^(N+1)-dimensional Hilbert space.

Basis convention: site 0 is the most significant bit of the basis index and bit value 0 is
spin up, so S_0^z = diag(1/2, ..., -1/2, ...). Elementary spin matrices are built sparse with
scipy and cached per (site_count, site, letter); composed operators are cached per
(descriptor, coupling fingerprint, h), at most dense_cache_entries of them.
"""
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from csm_bounds.exceptions import ResourceExceeded
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, FieldStrength, epsilon_table
from csm_bounds.utils.quantities import Quantity, QuantityKind

logger = logging.getLogger(__name__)

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def site_count(self) -> int:
        return int(self.dim).bit_length() - 1

    def is_hermitian(self, rtol: float = 1e-13) -> bool:
        scale = max(np.abs(self.matrix).max(), 1.0)
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= rtol * scale)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        _check_dims(self, other)
        return DenseOperator(self.matrix @ other.matrix, f"{self.label}*{other.label}")


def _check_dims(a: DenseOperator, b: DenseOperator) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


@lru_cache(maxsize=512)
def spin_matrix(site_count: int, site: int, letter: str) -> sp.csr_matrix:
    """S_site^letter as a sparse matrix."""
    if not 0 <= site < site_count:
        raise ValueError(f"site {site} outside 0..{site_count - 1}")
    left = sp.identity(2 ** site, dtype=complex, format="csr")
    right = sp.identity(2 ** (site_count - site - 1), dtype=complex, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(_PAULI[letter] / 2)), right, format="csr")


def _dot(site_count: int, a: int, b: int) -> sp.csr_matrix:
    if a == b:
        return sp.identity(2 ** site_count, dtype=complex, format="csr") * 0.75
    return sum(spin_matrix(site_count, a, letter) @ spin_matrix(site_count, b, letter)
               for letter in "XYZ")


def _total_z_diagonal(site_count: int) -> np.ndarray:
    return np.real(sum(spin_matrix(site_count, k, "Z").diagonal() for k in range(site_count)))


def _to_dense(m) -> np.ndarray:
    dense = m.toarray() if sp.issparse(m) else np.asarray(m)
    # every operator built here is real symmetric in this basis
    if np.iscomplexobj(dense) and not np.any(dense.imag):
        dense = np.ascontiguousarray(dense.real)
    return dense


def _sparse_central_hamiltonian(c: CouplingSet, h: float) -> sp.csr_matrix:
    n = c.N + 1
    hamiltonian = sp.csr_matrix((2 ** n, 2 ** n), dtype=complex)
    for k, J in enumerate(c.array, start=1):
        hamiltonian = hamiltonian + J * _dot(n, 0, k)
    return hamiltonian - h * spin_matrix(n, 0, "Z")


def _sparse_gaudin_hamiltonian(c: CouplingSet, l: int, h: float) -> sp.csr_matrix:
    if l == 0:
        return _sparse_central_hamiltonian(c, h)
    n = c.N + 1
    table = epsilon_table(c)
    hamiltonian = sp.csr_matrix((2 ** n, 2 ** n), dtype=complex)
    for k in range(n):
        if k != l:
            hamiltonian = hamiltonian + float(table.jshift[l, k]) * _dot(n, l, k)
    return hamiltonian - h * spin_matrix(n, l, "Z")


# ── Operator cache ───────────────────────────────────────────────────────────
_operator_cache: "OrderedDict[Tuple[Quantity, str, float], DenseOperator]" = OrderedDict()
_operator_cache_lock = threading.Lock()


def clear_cache() -> None:
    with _operator_cache_lock:
        _operator_cache.clear()
    spin_matrix.cache_clear()


def build_dense(q: Quantity, c: CouplingSet, h: FieldStrength = 0) -> DenseOperator:
    n = c.N + 1
    limit = get_settings().dense_max_sites
    if n > limit:
        raise ResourceExceeded("dense operator site count", n, limit)
    c = c.as_floats()
    h = float(h)
    key = (q, c.fingerprint(), h)
    with _operator_cache_lock:
        cached = _operator_cache.get(key)
        if cached is not None:
            _operator_cache.move_to_end(key)
            return cached

    op = DenseOperator(_build_matrix(q, c, h), q.name)
    capacity = max(0, get_settings().dense_cache_entries)
    with _operator_cache_lock:
        _operator_cache[key] = op
        while len(_operator_cache) > capacity:
            evicted, _ = _operator_cache.popitem(last=False)
            logger.debug(f"Evicted dense {evicted[0].name} (h={evicted[2]}) from the operator cache")
    return op


def cache_size() -> int:
    with _operator_cache_lock:
        return len(_operator_cache)


def _build_matrix(q: Quantity, c: CouplingSet, h: float) -> np.ndarray:
    n = c.N + 1
    kind = q.kind
    if kind is QuantityKind.S0Z:
        return _to_dense(spin_matrix(n, 0, "Z"))
    if kind is QuantityKind.IZ:
        return np.diag(_total_z_diagonal(n))
    if kind is QuantityKind.BZ:
        return _to_dense(sum(J * spin_matrix(n, k, "Z") for k, J in enumerate(c.array, start=1)))
    if kind is QuantityKind.IQZ:
        pairs = sum(_dot(n, a, b) for a in range(n) for b in range(a + 1, n))
        return _total_z_diagonal(n)[:, None] * _to_dense(pairs)
    if kind is QuantityKind.IZ_I2_H0:
        squared = sum(_dot(n, a, b) for a in range(n) for b in range(n))
        product = squared @ _sparse_central_hamiltonian(c, 0.0)
        return _total_z_diagonal(n)[:, None] * _to_dense(product)
    if kind is QuantityKind.H0_POWER:
        if q.power == 1:
            return _to_dense(_sparse_central_hamiltonian(c, h))
        base = build_dense(Quantity(QuantityKind.H0_POWER), c, h).matrix
        lower = build_dense(Quantity(QuantityKind.H0_POWER, power=q.power - 1), c, h).matrix
        return lower @ base
    if kind is QuantityKind.IZ_H0_POWER:
        powered = build_dense(Quantity(QuantityKind.H0_POWER, power=q.power), c, h).matrix
        return _total_z_diagonal(n)[:, None] * powered
    if kind is QuantityKind.HL:
        return _to_dense(_sparse_gaudin_hamiltonian(c, q.index, h))
    if kind is QuantityKind.HLZ:
        return _total_z_diagonal(n)[:, None] * _to_dense(_sparse_gaudin_hamiltonian(c, q.index, h))
    raise ValueError(f"no dense construction for {q.name}")


def dense_scalar_product(a: DenseOperator, b: DenseOperator) -> complex:
    """Tr[a† b] / dim."""
    _check_dims(a, b)
    return complex(np.vdot(a.matrix, b.matrix)) / a.dim


def dense_element(lhs: Quantity, rhs: Quantity, c: CouplingSet, h: FieldStrength = 0) -> float:
    """Real part of (lhs|rhs); every pair used here is real."""
    return dense_scalar_product(build_dense(lhs, c, h), build_dense(rhs, c, h)).real


def dense_commutator_norm(a: DenseOperator, b: DenseOperator) -> float:
    _check_dims(a, b)
    return float(np.linalg.norm(a.matrix @ b.matrix - b.matrix @ a.matrix))
