from __future__ import annotations

import math
from fractions import Fraction

import pytest

from csm_bounds.exceptions import DegenerateCouplings
from csm_bounds.utils.couplings import (CouplingSet, Normalization, epsilon_table, exponential_couplings,
                                        loads_couplings, dumps_couplings, moments_infinite)


def test_exact_moments() -> None:
    c = CouplingSet((1, 2))
    assert c.is_exact
    assert c.sigma(1) == 3
    assert c.sigma(2) == 5
    assert c.moments(3).as_dict(3) == {"S1": 3, "S2": 5, "S3": 9, "N": 2}


def test_rejects_nonpositive_couplings() -> None:
    with pytest.raises(ValueError):
        CouplingSet((1, 0))
    with pytest.raises(ValueError):
        CouplingSet(())


def test_exponential_family_raw_and_normalized() -> None:
    raw = exponential_couplings(4, 1.0)
    assert raw.array[0] == pytest.approx(math.exp(-0.25))
    assert raw.array[-1] == pytest.approx(math.exp(-1.0))
    unit = exponential_couplings(50, 3.0, Normalization.SIGMA2_UNIT)
    assert float(unit.sigma(2)) == pytest.approx(1.0, rel=1e-12)
    assert unit.x == 3.0


def test_exponential_family_extended_precision_matches_float() -> None:
    extended = exponential_couplings(8, 2.0, Normalization.SIGMA2_UNIT, precision_bits=120)
    plain = exponential_couplings(8, 2.0, Normalization.SIGMA2_UNIT)
    assert extended.is_extended
    assert [float(v) for v in extended.values] == pytest.approx(list(plain.array), rel=1e-14)


def test_moments_infinite_limit() -> None:
    # N Σ_m / N → (1 - e^{-mx}) / (mx)
    c = exponential_couplings(20000, 2.0)
    assert float(c.sigma(2)) / c.N == pytest.approx(moments_infinite(2.0, 2), rel=1e-3)
    with pytest.raises(ValueError):
        moments_infinite(0.0, 1)


def test_epsilon_table_exact_entries() -> None:
    t = epsilon_table(CouplingSet((1, 2)))
    assert list(t.eps) == [0, -1, Fraction(-1, 2)]
    assert list(t.bath_couplings) == [0, 1, 2]
    assert t.jshift[1, 0] == -1
    assert t.jshift[1, 2] == -2
    assert t.jshift[2, 1] == 2
    assert t.rowsum[1] == -3
    assert t.rowsum[0] == 3


def test_epsilon_table_float_matches_exact(two_three) -> None:
    exact = epsilon_table(two_three)
    approx = epsilon_table(two_three.as_floats())
    for l in range(3):
        assert approx.rowsum[l] == pytest.approx(float(exact.rowsum[l]))
        assert approx.rowsq[l] == pytest.approx(float(exact.rowsq[l]))
        assert approx.cross[l] == pytest.approx(float(exact.cross[l]))


def test_epsilon_table_rejects_equal_couplings() -> None:
    with pytest.raises(DegenerateCouplings):
        epsilon_table(CouplingSet((1, 3, 1)))


def test_fingerprint_tracks_values() -> None:
    a = CouplingSet((1, 2), x=None)
    assert a.fingerprint() == CouplingSet((1, 2)).fingerprint()
    assert a.fingerprint() != CouplingSet((2, 1)).fingerprint()
    assert len(a.fingerprint()) == 64


def test_text_format_keeps_exact_values() -> None:
    c = CouplingSet((Fraction(1, 3), 2))
    text = dumps_couplings(c)
    assert text.splitlines()[0] == "# N=2 x=nan norm=RAW"
    assert loads_couplings(text).values == (Fraction(1, 3), 2)


def test_text_format_checks_announced_size() -> None:
    with pytest.raises(ValueError):
        loads_couplings("# N=3 x=nan norm=RAW\n1\n2\n")
