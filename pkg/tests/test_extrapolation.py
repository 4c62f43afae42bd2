from __future__ import annotations

import math

import numpy as np
import pytest

from csm_bounds.engines.extrapolation import (FitKind, Series, default_degree, extrapolate_inv_n,
                                              fit_log_over_x, log_over_x, read_series, read_xs_points,
                                              stability_shift, write_series, write_xs_points)
from csm_bounds.exceptions import InsufficientPoints

X_GRID = [6, 8, 11, 16, 22, 32, 45, 64]


def _cubic(n: float) -> float:
    return 0.02 + 0.5 / n - 3.0 / n ** 2 + 7.0 / n ** 3


def test_cubic_series_is_recovered() -> None:
    series = Series(tuple((n, _cubic(n)) for n in (8, 12, 16, 24, 32, 48, 64, 128)), x=1.0)
    fit = extrapolate_inv_n(series)
    assert fit.kind is FitKind.POLY_INV_N
    assert fit.degree == 3
    assert fit.intercept == pytest.approx(0.02, abs=1e-10)
    assert fit.coefficient("c3")[0] == pytest.approx(7.0, rel=1e-6)
    assert fit.intercept_uncertainty < 1e-8
    assert fit.degree_shift is not None
    assert stability_shift(series) == pytest.approx(0.0, abs=1e-9)


def test_scaling_commutes_with_extrapolation() -> None:
    series = Series(tuple((n, _cubic(n)) for n in (16, 24, 32, 48, 64, 96)), x=2.0)
    assert extrapolate_inv_n(series.scaled(3.0)).intercept == pytest.approx(
        3.0 * extrapolate_inv_n(series).intercept, rel=1e-10)


def test_constant_series() -> None:
    series = Series(tuple((n, 0.125) for n in (10, 20, 30, 40, 50)))
    fit = extrapolate_inv_n(series, degree=2)
    assert fit.intercept == pytest.approx(0.125)
    assert fit.residual_norm == pytest.approx(0.0, abs=1e-12)


def test_density_filter_and_point_count() -> None:
    series = Series(tuple((n, _cubic(n)) for n in (8, 16, 32, 64, 128, 256)), x=4.0)
    assert [n for n, _ in series.filtered().points] == [32, 64, 128, 256]
    with pytest.raises(InsufficientPoints) as info:
        extrapolate_inv_n(series)
    assert (info.value.needed, info.value.available) == (5, 4)
    assert extrapolate_inv_n(series, degree=2).points_used == 4


def test_default_degree() -> None:
    assert default_degree(None) == 3
    assert default_degree(50.0) == 3
    assert default_degree(64.0) == 2


def test_series_validation() -> None:
    with pytest.raises(ValueError):
        Series(((10, 0.1), (10, 0.2)))
    with pytest.raises(ValueError):
        Series(((10, 0.1), (20, math.nan)))


def test_log_fit_recovers_parameters() -> None:
    points = [(x, log_over_x(x, 0.3, 0.5)) for x in X_GRID]
    fit = fit_log_over_x(points, x_start=6)
    assert fit.kind is FitKind.LOG_OVER_X
    assert fit.coefficient("A")[0] == pytest.approx(0.3, rel=1e-10)
    assert fit.coefficient("B")[0] == pytest.approx(0.5, rel=1e-10)
    assert fit.points_used == len(X_GRID)
    window = fit_log_over_x(points, x_start=11, x_end=45)
    assert window.points_used == 5


def test_log_fit_errors() -> None:
    with pytest.raises(ValueError):
        fit_log_over_x([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], x_start=0.0)
    with pytest.raises(InsufficientPoints):
        fit_log_over_x([(6.0, 0.1), (8.0, 0.09)], x_start=6)
    with pytest.raises(ValueError, match="equal"):
        fit_log_over_x([(5.0, 0.1), (5.0, 0.1), (5.0, 0.1)], x_start=1)


def test_series_files(tmp_path) -> None:
    series = Series(((16, 0.031), (32, 0.0295), (64, 0.02875)), x=2.0)
    path = tmp_path / "series.csv"
    write_series(series, path)
    assert path.read_text(encoding="utf-8").startswith("# x=2.0\nN,value\n")
    assert read_series(path) == series

    bare = tmp_path / "bare.csv"
    bare.write_text("# x=nan\n64,0.3\n16,0.1\n32,0.2\n", encoding="utf-8")
    loaded = read_series(bare)
    assert loaded.x is None
    assert np.array_equal(loaded.ns, [16.0, 32.0, 64.0])


def test_xs_files(tmp_path) -> None:
    points = [(16.0, 0.012), (6.0, 0.031), (8.0, 0.025)]
    path = tmp_path / "xs.csv"
    write_xs_points(points, path, comment="s0z basic3")
    assert read_xs_points(path) == sorted(points)
