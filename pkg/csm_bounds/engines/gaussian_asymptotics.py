"""
Gaussian ensemble of (B^x, B^y, B^z, I^z) for large baths: analytic moments ⟨(I^z)² B^{2m}⟩,
the radial Wick integrals behind them, and a sharded Monte-Carlo cross-check.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate

from csm_bounds.engines.element_tables import CovarianceEntries, double_factorial
from csm_bounds.settings import get_settings
from csm_bounds.utils.couplings import CouplingSet

logger = logging.getLogger(__name__)

_GAUSS_NORM = (2 * math.pi) ** 1.5
MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class GaussianModel:
    """Covariance Ω = diag(σ², σ², σ², α²) with Ω[B^z][I^z] = β²."""

    cov: CovarianceEntries

    @classmethod
    def from_couplings(cls, c: CouplingSet) -> "GaussianModel":
        return cls(CovarianceEntries.from_couplings(c.as_floats()))

    @classmethod
    def from_entries(cls, sigma2: float, beta2: float, alpha2: float) -> "GaussianModel":
        return cls(CovarianceEntries(float(sigma2), float(beta2), float(alpha2)))

    @property
    def sigma(self) -> float:
        return math.sqrt(float(self.cov.sigma2))

    @property
    def is_positive_definite(self) -> bool:
        return float(self.cov.alpha2) * float(self.cov.sigma2) > float(self.cov.beta2) ** 2

    def covariance_matrix(self) -> np.ndarray:
        s2, b2, a2 = float(self.cov.sigma2), float(self.cov.beta2), float(self.cov.alpha2)
        return np.array([
            [s2, 0.0, 0.0, 0.0],
            [0.0, s2, 0.0, 0.0],
            [0.0, 0.0, s2, b2],
            [0.0, 0.0, b2, a2],
        ])

    def cholesky_factor(self) -> np.ndarray:
        """Closed-form lower factor of the arrow matrix; the last pivot is clamped at 0 on the boundary."""
        sigma = self.sigma
        b2, a2 = float(self.cov.beta2), float(self.cov.alpha2)
        pivot = math.sqrt(max(a2 - b2 * b2 / float(self.cov.sigma2), 0.0))
        return np.array([
            [sigma, 0.0, 0.0, 0.0],
            [0.0, sigma, 0.0, 0.0],
            [0.0, 0.0, sigma, 0.0],
            [0.0, 0.0, b2 / sigma, pivot],
        ])


def analytic_moment(m: int, g: GaussianModel) -> float:
    """⟨(I^z)² B^{2m}⟩ = (2m+1)!! σ^{2m} α² + (2m/3)(2m+1)!! σ^{2m-2} β⁴."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    s2, b2, a2 = float(g.cov.sigma2), float(g.cov.beta2), float(g.cov.alpha2)
    weight = double_factorial(2 * m + 1)
    if m == 0:
        return a2
    return weight * s2 ** m * a2 + (2 * m / 3) * weight * s2 ** (m - 1) * b2 * b2


def wick_radial_integral(m: int, sigma: float, with_cos2: bool = False) -> float:
    """
    ∫ d³B B^{2m} exp(-B²/(2σ²)) = (2π)^{3/2} (2m+1)!! σ^{2m+3}, or with the extra
    weight B² cos²θ = (B^z)²: (1/3)(2π)^{3/2} (2m+3)!! σ^{2m+5}.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if with_cos2:
        return _GAUSS_NORM * double_factorial(2 * m + 3) / 3 * sigma ** (2 * m + 5)
    return _GAUSS_NORM * double_factorial(2 * m + 1) * sigma ** (2 * m + 3)


def wick_radial_integral_numeric(m: int, sigma: float, with_cos2: bool = False) -> float:
    """Same integral by quadrature over the radius (the angular part gives 4π, or 4π/3 with cos²θ)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    extra = 2 if with_cos2 else 0
    radial, _ = integrate.quad(lambda r: r ** (2 * m + 2 + extra) * math.exp(-r * r / (2 * sigma * sigma)),
                               0.0, np.inf)
    return 4 * math.pi * radial / (3 if with_cos2 else 1)


def _shard_sums(m: int, factor: np.ndarray, samples: int, seed: np.random.SeedSequence) -> Tuple[float, float]:
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((samples, 4)) @ factor.T
    field_squared = np.einsum("ij,ij->i", draws[:, :3], draws[:, :3])
    values = draws[:, 3] ** 2 * field_squared ** m
    return float(values.sum()), float((values * values).sum())


def monte_carlo_moment(m: int, g: GaussianModel, samples: int, seed: int,
                       shards: Optional[int] = None, workers: Optional[int] = None) -> Tuple[float, float]:
    """
    Sample mean and standard error of (I^z)² B^{2m}. Shard seeds come from
    SeedSequence(seed).spawn(shards), so the result does not depend on `workers`.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    settings = get_settings()
    shards = shards or settings.mc_shards
    workers = workers or settings.workers
    factor = g.cholesky_factor()

    sizes: List[int] = [samples // shards + (1 if k < samples % shards else 0) for k in range(shards)]
    seeds = np.random.SeedSequence(seed).spawn(shards)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        sums = list(executor.map(lambda args: _shard_sums(m, factor, *args), zip(sizes, seeds)))

    total = math.fsum(s for s, _ in sums)
    total_sq = math.fsum(q for _, q in sums)
    mean = total / samples
    variance = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    error = math.sqrt(variance / samples)
    logger.debug(f"Monte Carlo m={m}: {mean:.6g} ± {error:.2g} over {samples} samples in {shards} shards")
    return mean, error
