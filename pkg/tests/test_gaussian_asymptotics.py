from __future__ import annotations

import numpy as np
import pytest

from csm_bounds.engines.element_tables import gaussian_matrix_element
from csm_bounds.engines.gaussian_asymptotics import (GaussianModel, analytic_moment, monte_carlo_moment,
                                                     wick_radial_integral, wick_radial_integral_numeric)
from csm_bounds.utils.couplings import CouplingSet, exponential_couplings


@pytest.fixture
def model() -> GaussianModel:
    return GaussianModel.from_couplings(exponential_couplings(40, 1.5))


@pytest.mark.parametrize("m", [0, 1, 2, 3])
@pytest.mark.parametrize("with_cos2", [False, True])
def test_wick_integrals(m, with_cos2) -> None:
    analytic = wick_radial_integral(m, 0.7, with_cos2)
    assert wick_radial_integral_numeric(m, 0.7, with_cos2) == pytest.approx(analytic, rel=1e-8)


def test_analytic_moments(model) -> None:
    assert analytic_moment(0, model) == pytest.approx(40 / 4)
    c = CouplingSet((1.0, 2.0, 3.5))
    g = GaussianModel.from_couplings(c)
    for m in range(5):
        assert float(gaussian_matrix_element(m, c)) == pytest.approx(analytic_moment(m, g) / 4 ** m, rel=1e-12)
    with pytest.raises(ValueError):
        analytic_moment(-1, g)


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_monte_carlo_agrees(model, m) -> None:
    mean, error = monte_carlo_moment(m, model, 200_000, seed=11)
    assert abs(mean - analytic_moment(m, model)) <= 4 * error


def test_monte_carlo_ignores_worker_count(model) -> None:
    serial = monte_carlo_moment(2, model, 20_000, seed=5, shards=4, workers=1)
    parallel = monte_carlo_moment(2, model, 20_000, seed=5, shards=4, workers=4)
    assert serial == parallel


def test_monte_carlo_sample_floor(model) -> None:
    with pytest.raises(ValueError):
        monte_carlo_moment(1, model, 9_999, seed=0)


def test_cholesky_factor(model) -> None:
    factor = model.cholesky_factor()
    assert np.allclose(factor @ factor.T, model.covariance_matrix())
    assert model.is_positive_definite


def test_uniform_couplings_sit_on_the_boundary() -> None:
    g = GaussianModel.from_couplings(CouplingSet((1.0, 1.0, 1.0)))
    assert not g.is_positive_definite
    factor = g.cholesky_factor()
    assert factor[3, 3] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(factor @ factor.T, g.covariance_matrix())
