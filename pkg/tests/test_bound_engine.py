from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from csm_bounds.engines.bound_engine import (Backend, BoundFlag, BoundProblem, field_field_bound, fit_power_law,
                                             gaussian_asymptotic_bound, infinite_field_bound, project,
                                             simple_bound, simple_bound_asymptotic, solve_bound)
from csm_bounds.engines.ed_oracle import ed_persisting_correlation
from csm_bounds.engines.extrapolation import Series, extrapolate_inv_n, fit_log_over_x
from csm_bounds.utils.couplings import CouplingSet, Normalization, exponential_couplings, random_rational_couplings
from csm_bounds.utils.quantities import BZ, IQZ, IZ, S0Z, get_quantity_set, iz_h0_power


def _bound(c: CouplingSet, set_name: str, h: float = 0.0, backend: Backend = Backend.TABLES, **kwargs):
    return solve_bound(BoundProblem(S0Z, get_quantity_set(set_name, c.N), c, h, backend, **kwargs))


def test_magnetization_only_bound() -> None:
    result = _bound(exponential_couplings(3, 1.0), "iz-only")
    assert result.value == pytest.approx(1 / 16)
    assert result.rank == 1
    assert result.flags == []


def test_single_quantity_matches_simple_bound() -> None:
    c = exponential_couplings(12, 2.0)
    assert _bound(c, "hz-only").value == pytest.approx(simple_bound(c), rel=1e-12)


def test_simple_bound_exact() -> None:
    assert simple_bound(CouplingSet((1,))) == Fraction(1, 8)
    assert simple_bound(CouplingSet((1, 1))) == Fraction(1, 14)
    assert simple_bound(CouplingSet((1.0, 1.0))) == pytest.approx(1 / 14)


def test_simple_bound_asymptotic() -> None:
    assert simple_bound_asymptotic(4.0) == pytest.approx(math.tanh(2.0) / 24)
    assert simple_bound_asymptotic(4.0) == pytest.approx(0.040168, abs=1e-6)
    assert simple_bound_asymptotic(1.0) == pytest.approx(0.07701, abs=1e-5)
    assert simple_bound_asymptotic(1e-6) == pytest.approx(1 / 12, rel=1e-6)
    with pytest.raises(ValueError):
        simple_bound_asymptotic(0.0)


def test_infinite_field_bound() -> None:
    assert infinite_field_bound(1.0, 0.0) == pytest.approx(0.047656, abs=1e-6)
    assert infinite_field_bound(1.0, 1e6) == pytest.approx(0.25, rel=1e-9)
    values = [infinite_field_bound(2.0, h) for h in (0.0, 0.5, 1.0, 2.0, 10.0)]
    assert values[-1] > values[0]


def test_backends_agree() -> None:
    c = CouplingSet((1.0, 2.5))
    values = [_bound(c, "basic3", backend=backend).value for backend in Backend]
    assert values == pytest.approx([values[0]] * 3, rel=1e-12)
    c = CouplingSet((1.0, 2.5, 1.7))
    field_values = [_bound(c, "h-six", 0.8, backend).value for backend in Backend]
    assert field_values == pytest.approx([field_values[0]] * 3, rel=1e-9)


def test_sets_are_monotone() -> None:
    c = exponential_couplings(10, 1.5)
    chain = ["iz-only", "basic3", "plus-h03", "all6-zero-field"]
    values = [_bound(c, name).value for name in chain]
    assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("h", [0.0, 0.6])
def test_bound_below_exact_value(h) -> None:
    c = CouplingSet((1.0, 1.7, 2.9, 0.6))
    exact = ed_persisting_correlation(c, h).s_inf
    for name in ("integrability", "h-seven", "h-integrability"):
        assert _bound(c, name, h).value <= exact + 1e-10
    assert 0.0 <= exact <= 0.25 + 1e-12


def test_linear_dependency_is_projected_out() -> None:
    c = CouplingSet((1.0, 1.7, 2.9))
    result = _bound(c, "integrability")
    # the H_l^z sum to -h (I^z)² and vanish at h = 0
    assert result.rank == c.N + 1
    assert BoundFlag.ILL_CONDITIONED.value not in result.flags
    assert result.quantities == ["Iz", "Hlz[*]"]


def test_extended_precision_matches_float() -> None:
    c = exponential_couplings(20, 2.0)
    float_value = _bound(c, "plus-h03").value
    extended = _bound(c, "plus-h03", precision_bits=200)
    assert extended.value == pytest.approx(float_value, rel=1e-9)


def test_validation() -> None:
    c = CouplingSet((1.0, 2.0))
    with pytest.raises(ValueError, match="h = 0"):
        BoundProblem(S0Z, [IQZ], c, 0.5).validate()
    with pytest.raises(ValueError, match="target"):
        BoundProblem(IZ, [IZ], c).validate()
    with pytest.raises(ValueError):
        BoundProblem(S0Z, [], c).validate()


def test_project_rejects_shape_mismatch() -> None:
    with pytest.raises(ValueError):
        project(np.ones(2), np.eye(3))


def test_bz_target() -> None:
    c = CouplingSet((1.0, 2.0))
    result = solve_bound(BoundProblem(BZ, [IZ], c))
    # (B^z|I^z)² / (I^z|I^z) = (Σ_1/4)² / ((N+1)/4)
    assert result.value == pytest.approx((3 / 4) ** 2 / (3 / 4))
    assert result.target == "Bz"


def test_field_field_bound_is_flagged() -> None:
    c = CouplingSet((1.0, 1.6, 2.3))
    result = field_field_bound(c)
    assert BoundFlag.APPROXIMATE.value in result.flags
    assert result.value >= 0.0
    assert result.to_record()["flags"] == result.flags


def test_gaussian_bound() -> None:
    c = exponential_couplings(200, 2.0, Normalization.SIGMA2_UNIT)
    first = gaussian_asymptotic_bound(c, 1)
    s1, s2 = float(c.sigma(1)), float(c.sigma(2))
    assert first.value == pytest.approx(s1 ** 2 / (4 * (2 * s1 ** 2 + 3 * c.N * s2)), rel=1e-12)
    values = [gaussian_asymptotic_bound(c, m).value for m in (1, 2, 3, 4)]
    assert all(later >= earlier - 1e-14 for earlier, later in zip(values, values[1:]))
    assert gaussian_asymptotic_bound(c, 3).quantities == [iz_h0_power(p).name for p in (1, 3, 5)]
    with pytest.raises(ValueError):
        gaussian_asymptotic_bound(c, 0)


def test_fit_power_law() -> None:
    ns = np.array([10.0, 20.0, 40.0, 80.0])
    exponent, prefactor = fit_power_law(ns, 3.0 / ns)
    assert exponent == pytest.approx(-1.0)
    assert prefactor == pytest.approx(3.0)
    with pytest.raises(ValueError):
        fit_power_law([10.0], [1.0])


@pytest.mark.slow
def test_large_bath_extended_precision() -> None:
    c = exponential_couplings(400, 4.0, precision_bits=256)
    result = _bound(c, "all6-zero-field", precision_bits=256)
    assert 0.0 < result.value < 0.25


def _exact(c: CouplingSet, h: float) -> float:
    result = ed_persisting_correlation(c, h)
    if result.flagged and result.s_inf_alternative is not None:
        return max(result.s_inf, result.s_inf_alternative)
    return result.s_inf


def test_two_spin_bound_is_tight() -> None:
    c = CouplingSet((1,))
    assert simple_bound(c) == Fraction(1, 8)
    assert ed_persisting_correlation(c).s_inf == pytest.approx(1 / 8, abs=1e-12)


@pytest.mark.parametrize("set_name", ["iz-only", "iqz-only", "izh02-only"])
def test_even_quantities_decay_as_inverse_bath_size(set_name) -> None:
    ns = [256, 512, 1024, 2048, 4096]
    values = [_bound(exponential_couplings(n, 4.0), set_name).value for n in ns]
    exponent, _ = fit_power_law(ns, values)
    assert exponent == pytest.approx(-1.0, abs=0.05)


@pytest.mark.parametrize("set_name", ["izh03-only", "izi2h0-only"])
def test_odd_quantities_share_a_finite_limit(set_name) -> None:
    c = exponential_couplings(4096, 4.0, precision_bits=128)
    s1, s2 = float(c.sigma(1)), float(c.sigma(2))
    limit = 0.25 * 5 / (42 + 21 * c.N * s2 / s1 ** 2)
    assert _bound(c, set_name, precision_bits=128).value == pytest.approx(limit, abs=1e-3)


@pytest.mark.parametrize("x", [1.0, 4.0])
@pytest.mark.parametrize("h", [1.0, 2.0, 4.0])
def test_two_field_quantities_reach_the_closed_form(x, h) -> None:
    c = exponential_couplings(4096, x, Normalization.SIGMA2_UNIT)
    assert _bound(c, "h-two", h).value == pytest.approx(infinite_field_bound(x, h), abs=1e-3)


@pytest.mark.parametrize("h", [2.0, 4.0])
def test_six_field_quantities_improve_on_two(h) -> None:
    c = exponential_couplings(19, 1.0, Normalization.SIGMA2_UNIT)
    six = _bound(c, "h-six", h)
    assert six.value > _bound(c, "h-two", h).value
    assert not six.ill_conditioned

    small = exponential_couplings(9, 1.0, Normalization.SIGMA2_UNIT)
    assert _bound(small, "h-six", h).value <= _exact(small, h) + 1e-9


def test_gaussian_bound_converges_in_the_number_of_powers() -> None:
    c = exponential_couplings(20, 4.0)
    results = [gaussian_asymptotic_bound(c, m) for m in range(1, 21)]
    values = [r.value for r in results]
    assert all(later >= earlier - 1e-14 for earlier, later in zip(values, values[1:]))
    assert all(r.flags == [] for r in results)
    # increments from m_max = 12 → 13 onwards
    assert np.max(np.abs(np.diff(values)[11:])) < 1e-6


def test_gaussian_bound_converges_slowly_for_narrow_spread() -> None:
    # at x = 1 the projected function has a pole close to the real axis
    c = exponential_couplings(20, 1.0)
    v12, v13, v20 = (gaussian_asymptotic_bound(c, m).value for m in (12, 13, 20))
    assert v12 <= v13 <= v20
    assert v13 - v12 > 1e-6


_FIELD_SETS = ["iz-only", "hz-only", "h-two", "h-three", "h-six", "h-seven", "integrability", "hlz-all",
               "h-integrability"]
_ZERO_FIELD_SETS = ["basic3", "plus-h03", "plus-i2h0", "all6-zero-field", "iqz-only", "izi2h0-only"]


@pytest.mark.slow
def test_bounds_never_exceed_exact_value() -> None:
    rng = random.Random(2024)
    for case in range(200):
        c = random_rational_couplings(rng.randint(1, 9), rng).as_floats()
        h = 0.0 if case % 3 == 0 else round(rng.uniform(0.1, 4.0), 3)
        name = rng.choice(_FIELD_SETS + (_ZERO_FIELD_SETS if h == 0 else []))
        value = _bound(c, name, h).value
        assert value <= _exact(c, h) + 1e-9, (case, name, c.values, h)


@pytest.mark.slow
def test_field_field_limit_follows_log_law() -> None:
    grid = [256, 512, 1024, 1536, 2048, 3072, 4096]
    intercepts = []
    for x in (6.0, 8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0):
        points = tuple((n, field_field_bound(exponential_couplings(n, x)).value) for n in grid if n >= 8 * x)
        intercepts.append((x, extrapolate_inv_n(Series(points, x)).intercept))

    fit = fit_log_over_x(intercepts, x_start=6)
    a, b = fit.coefficient("A")[0], fit.coefficient("B")[0]
    assert a == pytest.approx(0.05345, rel=0.10)
    assert b == pytest.approx(0.1141, rel=0.25)
    later = fit_log_over_x(intercepts, x_start=16)
    assert later.coefficient("A")[0] > a
    assert later.coefficient("B")[0] > b
