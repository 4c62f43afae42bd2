"""
Exact persisting correlation from full diagonalization of H_0(h).

The infinite-time average of ⟨S_0(t) S_0(0)⟩ keeps only matrix elements between degenerate
eigenstates: S_∞ = (1/dim) Σ_b ‖P_b S_0 P_b‖_F². Degeneracy blocks come from relative gap
clustering on the ascending spectrum; gaps close to the threshold are reported and the
alternative grouping is evaluated alongside.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from csm_bounds.engines.dense_operator import _to_dense, build_dense, spin_matrix
from csm_bounds.exceptions import AmbiguousDegeneracy
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet, FieldStrength
from csm_bounds.utils.quantities import S0Z, h0_power

logger = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-10
# gaps within this factor of the threshold are ambiguous
GUARD_FACTOR = 10.0


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    blocks: List[Tuple[int, int]]
    threshold: float
    ambiguous_gaps: List[int] = field(default_factory=list)

    @property
    def width(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    @property
    def flagged(self) -> bool:
        return bool(self.ambiguous_gaps)

    def reconstruction_error(self, hamiltonian: np.ndarray) -> float:
        """‖H − VΛV†‖_F relative to ‖H‖_F."""
        v = self.eigenvectors
        rebuilt = (v * self.eigenvalues) @ v.conj().T
        scale = np.linalg.norm(hamiltonian) or 1.0
        return float(np.linalg.norm(hamiltonian - rebuilt) / scale)

    def alternative_blocks(self) -> List[Tuple[int, int]]:
        """Grouping with every ambiguous gap resolved the other way."""
        gaps = np.diff(self.eigenvalues)
        toggled = set(self.ambiguous_gaps)
        splits = [i for i, gap in enumerate(gaps) if (gap > self.threshold) != (i in toggled)]
        return _blocks_from_splits(splits, len(self.eigenvalues))


def _blocks_from_splits(splits: Sequence[int], size: int) -> List[Tuple[int, int]]:
    """Half-open index ranges; a split at i separates eigenvalue i from i + 1."""
    starts = [0] + [i + 1 for i in splits]
    ends = [i + 1 for i in splits] + [size]
    return list(zip(starts, ends))


def group_degeneracies(eigenvalues: np.ndarray, tol: float) -> Tuple[List[Tuple[int, int]], float, List[int]]:
    """Blocks, threshold (tol · spectral width) and the indices of ambiguous gaps."""
    width = float(eigenvalues[-1] - eigenvalues[0]) if len(eigenvalues) else 0.0
    if width == 0.0:
        return [(0, len(eigenvalues))], 0.0, []
    threshold = tol * width
    gaps = np.diff(eigenvalues)
    splits = [int(i) for i in np.flatnonzero(gaps > threshold)]
    ambiguous = [int(i) for i in np.flatnonzero((gaps > threshold / GUARD_FACTOR)
                                                & (gaps < threshold * GUARD_FACTOR))]
    return _blocks_from_splits(splits, len(eigenvalues)), threshold, ambiguous


def diagonalize(hamiltonian: np.ndarray, tol: float) -> SpectralDecomposition:
    eigenvalues, eigenvectors = linalg.eigh(hamiltonian)
    # eigh is ascending already; the stable sort pins the order of exact ties
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
    blocks, threshold, ambiguous = group_degeneracies(eigenvalues, tol)
    decomposition = SpectralDecomposition(eigenvalues, eigenvectors, blocks, threshold, ambiguous)
    error = decomposition.reconstruction_error(hamiltonian)
    if error >= RECONSTRUCTION_TOL:
        logger.warning(f"Eigendecomposition reconstruction error {error:.2e} exceeds {RECONSTRUCTION_TOL:.0e}")
    return decomposition


def block_weight(observable: np.ndarray, blocks: Sequence[Tuple[int, int]]) -> float:
    """(1/dim) Σ_b ‖O_bb‖_F² with O already in the eigenbasis."""
    dim = observable.shape[0]
    total = math.fsum(float(np.sum(np.abs(observable[a:b, a:b]) ** 2)) for a, b in blocks)
    return total / dim


@dataclass
class EdResult:
    N: int
    x: Optional[float]
    couplings_hash: str
    h: float
    component: str
    s_inf: float
    blocks: int
    flagged: bool
    s_inf_alternative: Optional[float] = None
    ambiguous_gaps: List[float] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "N": self.N,
            "x": self.x,
            "couplings_hash": self.couplings_hash,
            "h": self.h,
            "S_inf": self.s_inf,
            "blocks": self.blocks,
            "flagged": self.flagged,
        }


def _central_spin(site_count: int, component: str) -> np.ndarray:
    letter = component.upper()
    if letter not in ("X", "Z"):
        raise ValueError(f"component must be 'x' or 'z', got '{component}'")
    return _to_dense(spin_matrix(site_count, 0, letter))


def ed_persisting_correlation(c: CouplingSet, h: FieldStrength = 0, deg_tol: Optional[float] = None,
                              component: str = "z", strict: bool = False) -> EdResult:
    """
    S_∞ for the central spin component `component`. Ambiguous gaps flag the result and the
    alternative grouping is evaluated; with strict=True they raise AmbiguousDegeneracy.
    """
    tol = get_settings().degeneracy_tol if deg_tol is None else deg_tol
    if tol <= 0:
        raise ValueError(f"degeneracy tolerance must be positive, got {tol}")
    hamiltonian = build_dense(h0_power(1), c, h).matrix
    site_count = c.N + 1
    observable = (build_dense(S0Z, c, h).matrix if component.lower() == "z"
                  else _central_spin(site_count, component))

    logger.info(f"Diagonalizing N={c.N} (dim {hamiltonian.shape[0]}), h={float(h):g}")
    decomposition = diagonalize(hamiltonian, tol)
    v = decomposition.eigenvectors
    rotated = v.conj().T @ observable @ v
    s_inf = block_weight(rotated, decomposition.blocks)

    gaps = np.diff(decomposition.eigenvalues)
    ambiguous_values = [float(gaps[i]) for i in decomposition.ambiguous_gaps]
    alternative = None
    if decomposition.flagged:
        if strict:
            raise AmbiguousDegeneracy(ambiguous_values, decomposition.threshold)
        alternative = block_weight(rotated, decomposition.alternative_blocks())
        logger.warning(f"{len(ambiguous_values)} ambiguous gap(s) at N={c.N}, h={float(h):g}: "
                       f"S_inf={s_inf:.12g}, alternative grouping {alternative:.12g}")

    logger.debug(f"S_inf={s_inf:.12g} over {len(decomposition.blocks)} blocks")
    return EdResult(
        N=c.N,
        x=c.x,
        couplings_hash=c.fingerprint(),
        h=float(h),
        component=component.lower(),
        s_inf=s_inf,
        blocks=len(decomposition.blocks),
        flagged=decomposition.flagged,
        s_inf_alternative=alternative,
        ambiguous_gaps=ambiguous_values,
    )
