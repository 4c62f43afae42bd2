from __future__ import annotations

from fractions import Fraction

import pytest

from csm_bounds.engines.pauli_trace import (GaussianRational, PauliExpression, build_operator,
                                            central_dot_overhauser, commutator, gaudin_hamiltonian,
                                            multiply, norm_squared, overhauser_squared, pair_sum, power,
                                            q_operator, scalar_product, total_spin_component,
                                            total_spin_squared, trace, zeta_operator)
from csm_bounds.exceptions import ResourceExceeded
from csm_bounds.utils.couplings import CouplingSet
from csm_bounds.utils.quantities import IZ, S0Z, h0_power, iz_h0_power


def test_single_site_algebra() -> None:
    sx = PauliExpression.spin(1, 0, "X")
    sy = PauliExpression.spin(1, 0, "Y")
    sz = PauliExpression.spin(1, 0, "Z")
    assert commutator(sx, sy) == sz.scale(GaussianRational(0, 1))
    assert multiply(sz, sz) == PauliExpression.identity(1, Fraction(1, 4))
    assert trace(sz) == 0


def test_normalized_trace_and_scalar_product() -> None:
    c = CouplingSet((1, 2, 5))
    iz = build_operator(IZ, c)
    assert scalar_product(build_operator(S0Z, c), iz) == Fraction(1, 4)
    assert norm_squared(iz) == Fraction(4, 4)


def test_conserved_quantities_commute_with_hamiltonian() -> None:
    c = CouplingSet((1, 3, Fraction(7, 2)))
    h = Fraction(1, 2)
    hamiltonian = build_operator(h0_power(1), c, h)
    assert commutator(hamiltonian, total_spin_component(4, "Z")).is_zero()
    assert commutator(hamiltonian, build_operator(iz_h0_power(2), c, h)).is_zero()


@pytest.mark.parametrize("h", [Fraction(0), Fraction(3, 2)])
def test_gaudin_hamiltonians_commute(h: Fraction) -> None:
    c = CouplingSet((1, 2, 4))
    hamiltonians = [gaudin_hamiltonian(c, l, h) for l in range(4)]
    for l in range(4):
        for p in range(l + 1, 4):
            assert commutator(hamiltonians[l], hamiltonians[p]).is_zero()


def test_gaudin_hamiltonians_sum_to_field_term() -> None:
    c = CouplingSet((1, 2, 4))
    h = Fraction(2)
    total = PauliExpression.zero(4)
    for l in range(4):
        total = total + gaudin_hamiltonian(c, l, h)
    assert total == total_spin_component(4, "Z").scale(-h)


def test_central_square_identity() -> None:
    c = CouplingSet((1, 2, Fraction(5, 3)))
    s_dot_b = central_dot_overhauser(c)
    assert multiply(s_dot_b, s_dot_b).scale(4) == q_operator(c)


def test_bath_pair_identity() -> None:
    c = CouplingSet((1, 2, Fraction(5, 3)))
    expected = overhauser_squared(c).scale(Fraction(1, 2)) - PauliExpression.identity(4, Fraction(3, 8) * c.sigma(2))
    assert zeta_operator(c) == expected


def test_total_spin_squared_matches_components() -> None:
    n = 3
    components = PauliExpression.zero(n)
    for letter in "XYZ":
        component = total_spin_component(n, letter)
        components = components + multiply(component, component)
    assert total_spin_squared(n) == components
    assert pair_sum(n) == (components - PauliExpression.identity(n, Fraction(3 * n, 4))).scale(Fraction(1, 2))


def test_power_and_hermiticity() -> None:
    c = CouplingSet((1, 2))
    hamiltonian = build_operator(h0_power(1), c, Fraction(1))
    assert power(hamiltonian, 2) == multiply(hamiltonian, hamiltonian)
    assert power(hamiltonian, 0) == PauliExpression.identity(3)
    assert build_operator(iz_h0_power(3), c, Fraction(1)).is_hermitian()
    with pytest.raises(ValueError):
        power(hamiltonian, -1)


def test_term_cap() -> None:
    pairs = pair_sum(5)
    with pytest.raises(ResourceExceeded):
        multiply(pairs, pairs, term_cap=5)


def test_text_format() -> None:
    text = "# sites=2\n1/2 0 0:Z\n1/4 0 0:X 1:X\n"
    expr = PauliExpression.loads(text)
    assert expr.coefficient({0: "Z"}) == Fraction(1, 2)
    assert PauliExpression.loads(expr.dumps()) == expr
    with pytest.raises(ValueError):
        PauliExpression.loads("1 0 0:Z\n")


def test_site_count_mismatch() -> None:
    with pytest.raises(ValueError):
        scalar_product(PauliExpression.identity(2), PauliExpression.identity(3))
