"""
Finite-size extrapolation and asymptotic fits.

- extrapolate_inv_n: value(N) = c_0 + c_1/N + ... + c_d/N^d on points with N >= 8x,
  cubic for x <= 50 and quadratic above; c_0 is the N → ∞ value.
- fit_log_over_x: S(x) = A ln(x/B)/x, solved linearly as S·x = A ln x - A ln B.

Least squares go through scipy's SVD driver.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from csm_bounds.exceptions import InsufficientPoints

logger = logging.getLogger(__name__)

DEFAULT_MIN_DENSITY = 8.0
CUBIC_X_LIMIT = 50.0


class FitKind(str, Enum):
    POLY_INV_N = "POLY_INV_N"
    LOG_OVER_X = "LOG_OVER_X"


@dataclass(frozen=True)
class Series:
    """Bound values at increasing N for one spread x."""

    points: Tuple[Tuple[int, float], ...]
    x: Optional[float] = None

    def __post_init__(self):
        points = tuple((int(n), float(v)) for n, v in self.points)
        object.__setattr__(self, "points", points)
        ns = [n for n, _ in points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError(f"N must be strictly increasing, got {ns}")
        if not all(math.isfinite(v) for _, v in points):
            raise ValueError("series values must be finite")

    @property
    def ns(self) -> np.ndarray:
        return np.array([n for n, _ in self.points], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points], dtype=float)

    def filtered(self, min_density: float = DEFAULT_MIN_DENSITY) -> "Series":
        """Keep N >= min_density · x (no-op without x)."""
        if self.x is None or min_density <= 0:
            return self
        kept = tuple((n, v) for n, v in self.points if n >= min_density * self.x)
        dropped = len(self.points) - len(kept)
        if dropped:
            logger.debug(f"Dropped {dropped} points with N < {min_density:g}·x (x={self.x})")
        return Series(kept, self.x)

    def scaled(self, factor: float) -> "Series":
        return Series(tuple((n, v * factor) for n, v in self.points), self.x)


@dataclass
class FitResult:
    kind: FitKind
    names: List[str]
    coefficients: List[float]
    uncertainties: List[float]
    residual_norm: float
    points_used: int
    intercept: Optional[float] = None
    intercept_uncertainty: Optional[float] = None
    degree: Optional[int] = None
    degree_shift: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def coefficient(self, name: str) -> Tuple[float, float]:
        i = self.names.index(name)
        return self.coefficients[i], self.uncertainties[i]


def _least_squares(design: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Coefficients, their covariance s²(AᵀA)⁻¹ (from the SVD) and the residual norm."""
    coefficients, _, _, _ = linalg.lstsq(design, y, lapack_driver="gelsd")
    residual = y - design @ coefficients
    residual_norm = float(np.linalg.norm(residual))
    rows, cols = design.shape
    dof = rows - cols
    s2 = residual_norm ** 2 / dof if dof > 0 else 0.0
    _, sv, vt = linalg.svd(design, full_matrices=False)
    inverse = np.where(sv > sv.max() * 1e-15, 1.0 / sv ** 2, 0.0)
    covariance = (vt.T * inverse) @ vt * s2
    return coefficients, covariance, residual_norm


def _poly_fit(ns: np.ndarray, values: np.ndarray, degree: int) -> Tuple[np.ndarray, np.ndarray, float]:
    design = np.vander(1.0 / ns, degree + 1, increasing=True)
    return _least_squares(design, values)


def default_degree(x: Optional[float]) -> int:
    return 3 if x is None or x <= CUBIC_X_LIMIT else 2


def extrapolate_inv_n(series: Series, degree: Optional[int] = None,
                      min_density: float = DEFAULT_MIN_DENSITY) -> FitResult:
    """Polynomial in 1/N; degree_shift is the largest intercept change at degree ± 1."""
    used = series.filtered(min_density)
    degree = default_degree(series.x) if degree is None else degree
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    needed = degree + 2
    if len(used.points) < needed:
        raise InsufficientPoints(needed, len(used.points))

    ns, values = used.ns, used.values
    coefficients, covariance, residual_norm = _poly_fit(ns, values, degree)
    uncertainties = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    shifts = []
    for other in (degree - 1, degree + 1):
        if other >= 0 and len(ns) >= other + 2:
            refit, _, _ = _poly_fit(ns, values, other)
            shifts.append(abs(refit[0] - coefficients[0]))
    degree_shift = max(shifts) if shifts else None

    logger.debug(f"1/N extrapolation (x={series.x}, degree {degree}, {len(ns)} points): "
                 f"{coefficients[0]:.10g} ± {uncertainties[0]:.2g}")
    return FitResult(
        kind=FitKind.POLY_INV_N,
        names=[f"c{k}" for k in range(degree + 1)],
        coefficients=[float(c) for c in coefficients],
        uncertainties=[float(u) for u in uncertainties],
        residual_norm=residual_norm,
        points_used=len(ns),
        intercept=float(coefficients[0]),
        intercept_uncertainty=float(uncertainties[0]),
        degree=degree,
        degree_shift=degree_shift,
    )


def stability_shift(series: Series, degree: Optional[int] = None,
                    min_density: float = DEFAULT_MIN_DENSITY) -> float:
    """Largest intercept change when the one or two smallest-N points are dropped."""
    base = extrapolate_inv_n(series, degree, min_density).intercept
    used = series.filtered(min_density)
    shifts = []
    for drop in (1, 2):
        reduced = Series(used.points[drop:], used.x)
        try:
            shifts.append(abs(extrapolate_inv_n(reduced, degree, 0.0).intercept - base))
        except InsufficientPoints:
            break
    return max(shifts, default=0.0)


def fit_log_over_x(points: Iterable[Tuple[float, float]], x_start: float,
                   x_end: float = math.inf) -> FitResult:
    """A, B of S(x) = A ln(x/B)/x from points with x_start <= x <= x_end."""
    points = [(float(x), float(s)) for x, s in points]
    if any(x <= 0 for x, _ in points):
        raise ValueError("x values must be positive")
    selected = [(x, s) for x, s in points if x_start <= x <= x_end]
    if len(selected) < 3:
        raise InsufficientPoints(3, len(selected))
    xs = np.array([x for x, _ in selected])
    if np.all(xs == xs[0]):
        raise ValueError("all x values are equal")
    ss = np.array([s for _, s in selected])

    design = np.column_stack([np.log(xs), np.ones_like(xs)])
    (a, c), covariance, residual_norm = _least_squares(design, ss * xs)
    if a == 0:
        raise ValueError("fitted A vanishes; B is undefined")
    b = math.exp(-c / a)
    # B = exp(-c/A): gradient (∂B/∂A, ∂B/∂c) = (B c/A², -B/A)
    gradient = np.array([b * c / a ** 2, -b / a])
    sigma_a = math.sqrt(max(covariance[0, 0], 0.0))
    sigma_b = math.sqrt(max(float(gradient @ covariance @ gradient), 0.0))
    logger.debug(f"log fit on [{x_start}, {x_end}]: A={a:.6g}±{sigma_a:.2g}, B={b:.6g}±{sigma_b:.2g}")
    return FitResult(
        kind=FitKind.LOG_OVER_X,
        names=["A", "B"],
        coefficients=[float(a), float(b)],
        uncertainties=[sigma_a, sigma_b],
        residual_norm=residual_norm,
        points_used=len(selected),
        extra={"x_start": x_start, "x_end": x_end},
    )


def log_over_x(x: float, a: float, b: float) -> float:
    return a * math.log(x / b) / x


# ── CSV IO ───────────────────────────────────────────────────────────────────

def _header_values(path: Path) -> dict:
    header = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.startswith("#"):
            continue
        for token in line.lstrip("#").split():
            if "=" in token:
                key, _, value = token.partition("=")
                header[key] = value
    return header


def _read_two_columns(path: Path, names: Sequence[str]) -> pd.DataFrame:
    frame = pd.read_csv(path, comment="#", skip_blank_lines=True)
    if list(frame.columns[:2]) != list(names):
        frame = pd.read_csv(path, comment="#", header=None, names=list(names))
    return frame[list(names)]


def read_series(path: Path) -> Series:
    header = _header_values(path)
    x_text = header.get("x", "nan").lower()
    x = None if x_text in ("nan", "none", "") else float(x_text)
    frame = _read_two_columns(path, ["N", "value"]).sort_values("N")
    return Series(tuple(zip(frame["N"].astype(int), frame["value"].astype(float))), x)


def write_series(series: Series, path: Path) -> None:
    x = "nan" if series.x is None else repr(float(series.x))
    frame = pd.DataFrame(series.points, columns=["N", "value"])
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# x={x}\n")
        frame.to_csv(handle, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} points to {path}")


def read_xs_points(path: Path) -> List[Tuple[float, float]]:
    frame = _read_two_columns(path, ["x", "S"]).sort_values("x")
    return list(zip(frame["x"].astype(float), frame["S"].astype(float)))


def write_xs_points(points: Sequence[Tuple[float, float]], path: Path, comment: str = "") -> None:
    frame = pd.DataFrame(sorted(points), columns=["x", "S"])
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# {comment}\n" if comment else "# x,S\n")
        frame.to_csv(handle, index=False, float_format="%.17g")
