from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
import sympy

from csm_bounds.engines.bound_engine import Backend, BoundProblem, assemble
from csm_bounds.engines.element_tables import (CovarianceEntries, ElementContext, ElementTable, EvaluationMode,
                                               Scope, double_factorial, element, gaussian_matrix_element,
                                               gaussian_vector_element, get_element_table, gram_matrix)
from csm_bounds.exceptions import UnknownElement
from csm_bounds.utils.couplings import CouplingSet
from csm_bounds.utils.quantities import (BZ, IQZ, IZ, IZ_I2_H0, S0Z, get_quantity_set, h0_power, hl, hlz,
                                         iz_h0_power)

ONE_TWO = CouplingSet((Fraction(1), Fraction(2)))


def test_shipped_table_is_self_consistent() -> None:
    table = get_element_table()
    assert table.version == 1
    assert table.entries(Scope.ZERO_FIELD)
    assert table.entries(Scope.INDEXED)
    assert table.consistency_mismatches() == []
    assert len(table.alternates()) == 1


def test_closed_form_values() -> None:
    c = CouplingSet((1.0, 2.0, 4.0))
    assert element(S0Z, IZ, c) == pytest.approx(0.25)
    assert element(IZ, IZ, c, 0.3) == pytest.approx(1.0)
    assert element(S0Z, S0Z, c, 2.0) == pytest.approx(0.25)
    assert element(BZ, BZ, c) == pytest.approx(21 / 4)


def test_exact_mode_values() -> None:
    exact = EvaluationMode.EXACT
    assert element(IZ, iz_h0_power(2), ONE_TWO, mode=exact) == Fraction(33, 64)
    assert element(iz_h0_power(1), iz_h0_power(1), ONE_TWO, mode=exact) == Fraction(33, 64)
    assert element(h0_power(1), h0_power(1), ONE_TWO, Fraction(2), mode=exact) == Fraction(31, 16)
    assert element(IZ_I2_H0, IZ, ONE_TWO, mode=exact) == Fraction(27, 16)
    assert element(BZ, iz_h0_power(2), ONE_TWO, mode=exact) == Fraction(39, 64)


def test_family_lookup_uses_commutation() -> None:
    c = CouplingSet((1.0, 1.5, 2.5))
    h = 0.5
    assert element(IZ, iz_h0_power(2), c, h) == pytest.approx(element(iz_h0_power(1), iz_h0_power(1), c, h))
    assert element(h0_power(1), h0_power(3), c, h) == pytest.approx(element(h0_power(2), h0_power(2), c, h))


def test_zero_field_only_entries_reject_a_field() -> None:
    with pytest.raises(UnknownElement, match="h = 0"):
        element(IQZ, IZ, ONE_TWO, 0.5)
    assert element(IQZ, IZ, ONE_TWO) == pytest.approx(6 / 16)


def test_indexed_entries() -> None:
    c = CouplingSet((Fraction(1), Fraction(3), Fraction(5, 2)))
    exact = EvaluationMode.EXACT
    assert element(S0Z, hlz(2), c, mode=exact) == Fraction(-3, 16)
    assert element(S0Z, hl(1), c, mode=exact) == 0
    # H_0 plus every H_l sums to -h I^z
    h = Fraction(3, 2)
    total = sum(element(IZ, hl(l), c, h, mode=exact) for l in range(c.N + 1))
    assert total == -h * element(IZ, IZ, c, h, mode=exact)


def test_index_above_bath_size() -> None:
    with pytest.raises(ValueError):
        element(S0Z, hlz(3), ONE_TWO)


@pytest.mark.parametrize("set_name, h", [("basic3", 0.0), ("all6-zero-field", 0.0), ("h-seven", 0.7),
                                         ("h-integrability", 0.7), ("integrability", 0.0)])
def test_tables_match_dense(set_name, h) -> None:
    c = CouplingSet((1.0, 1.6, 2.5))
    quantities = get_quantity_set(set_name, c.N)
    a_tab, n_tab = assemble(BoundProblem(S0Z, quantities, c, h, Backend.TABLES))
    a_den, n_den = assemble(BoundProblem(S0Z, quantities, c, h, Backend.DENSE))
    assert np.allclose(a_tab, a_den, rtol=1e-10, atol=1e-12)
    assert np.allclose(n_tab, n_den, rtol=1e-10, atol=1e-12)


def test_extended_precision_gram_matrix() -> None:
    c = CouplingSet((1.0, 2.0, 3.0))
    quantities = get_quantity_set("basic3", c.N)
    floats = gram_matrix(quantities, ElementContext(c, 0))
    extended = gram_matrix(quantities, ElementContext(c, 0, EvaluationMode.MP, 200))
    assert extended.dtype == object
    assert np.allclose(floats, extended.astype(float), rtol=1e-14)


def test_double_factorial() -> None:
    assert [double_factorial(n) for n in (-1, 0, 1, 5, 7)] == [1, 1, 1, 15, 105]
    with pytest.raises(ValueError):
        double_factorial(-3)


def test_gaussian_elements() -> None:
    assert gaussian_matrix_element(0, ONE_TWO, exact=True) == Fraction(1, 2)
    assert gaussian_matrix_element(1, ONE_TWO, exact=True) == Fraction(3, 4)
    assert gaussian_vector_element(1, ONE_TWO, exact=True) == Fraction(3, 16)
    assert float(gaussian_matrix_element(2, ONE_TWO)) == pytest.approx(
        float(gaussian_matrix_element(2, ONE_TWO, exact=True)))
    with pytest.raises(ValueError):
        gaussian_vector_element(0, ONE_TWO)


def test_covariance_entries() -> None:
    entries = CovarianceEntries.from_couplings(ONE_TWO)
    assert (entries.sigma2, entries.beta2, entries.alpha2) == (Fraction(5, 4), Fraction(3, 4), Fraction(1, 2))
    assert entries.is_positive()


def test_table_text_reload() -> None:
    table = get_element_table()
    reloaded = ElementTable.loads(table.dumps())
    assert len(reloaded.entries()) == len(table.entries())
    entry = table.get("Bz", "IzH0^2", Scope.ZERO_FIELD)
    assert sympy.expand(reloaded.get("IzH0^2", "Bz", Scope.ZERO_FIELD).expr - entry.expr) == 0


@pytest.mark.parametrize("text, message", [
    ("[zero-field]\nS0z Iz : 1\nIz S0z : 2\n", "duplicate"),
    ("[nowhere]\nS0z Iz : 1\n", "unknown section"),
    ("S0z Iz : 1\n", "outside a section"),
    ("[field]\nS0z Iz = Bz Bz\n", "unresolved"),
])
def test_malformed_tables(text, message) -> None:
    with pytest.raises(ValueError, match=message):
        ElementTable.loads(text)
