from __future__ import annotations

import numpy as np
import pytest

from csm_bounds.engines.ed_oracle import (SpectralDecomposition, block_weight, ed_persisting_correlation,
                                          group_degeneracies)
from csm_bounds.exceptions import AmbiguousDegeneracy
from csm_bounds.utils.couplings import CouplingSet, exponential_couplings


def test_two_spins() -> None:
    result = ed_persisting_correlation(CouplingSet((1.0,)))
    assert result.s_inf == pytest.approx(1 / 8, abs=1e-12)
    assert not result.flagged
    assert result.blocks == 2


def test_strong_field_freezes_the_central_spin() -> None:
    result = ed_persisting_correlation(CouplingSet((1.0, 1.4, 0.7)), h=1e3)
    assert result.s_inf == pytest.approx(0.25, abs=1e-4)


def test_zero_field_isotropy() -> None:
    c = CouplingSet((1.0, 1.7, 2.9))
    z = ed_persisting_correlation(c, component="z")
    x = ed_persisting_correlation(c, component="x")
    assert x.s_inf == pytest.approx(z.s_inf, rel=1e-10)
    assert 0.0 < z.s_inf <= 0.25


def test_record() -> None:
    c = exponential_couplings(3, 1.0)
    record = ed_persisting_correlation(c, 0.5).to_record()
    assert set(record) == {"N", "x", "couplings_hash", "h", "S_inf", "blocks", "flagged"}
    assert record["x"] == 1.0
    assert record["couplings_hash"] == c.fingerprint()


def test_ambiguous_grouping() -> None:
    # singlet and triplet one unit apart; a coarse tolerance puts the gap next to the threshold
    c = CouplingSet((1.0,))
    result = ed_persisting_correlation(c, deg_tol=0.5)
    assert result.flagged
    assert result.s_inf_alternative == pytest.approx(0.25)
    with pytest.raises(AmbiguousDegeneracy):
        ed_persisting_correlation(c, deg_tol=0.5, strict=True)


def test_argument_checks() -> None:
    c = CouplingSet((1.0,))
    with pytest.raises(ValueError):
        ed_persisting_correlation(c, deg_tol=0.0)
    with pytest.raises(ValueError):
        ed_persisting_correlation(c, component="y")


def test_group_degeneracies() -> None:
    eigenvalues = np.array([0.0, 0.0, 1.0, 1.0 + 1e-13, 3.0])
    blocks, threshold, ambiguous = group_degeneracies(eigenvalues, 1e-9)
    assert blocks == [(0, 2), (2, 4), (4, 5)]
    assert threshold == pytest.approx(3e-9)
    assert ambiguous == []

    flat, threshold, _ = group_degeneracies(np.zeros(4), 1e-9)
    assert flat == [(0, 4)]
    assert threshold == 0.0


def test_alternative_blocks() -> None:
    eigenvalues = np.array([0.0, 2e-9, 1.0])
    blocks, threshold, ambiguous = group_degeneracies(eigenvalues, 1e-9)
    assert blocks == [(0, 1), (1, 2), (2, 3)]
    assert ambiguous == [0]
    decomposition = SpectralDecomposition(eigenvalues, np.eye(3), blocks, threshold, ambiguous)
    assert decomposition.flagged
    assert decomposition.alternative_blocks() == [(0, 2), (2, 3)]


def test_block_weight() -> None:
    observable = np.ones((4, 4))
    assert block_weight(observable, [(0, 4)]) == pytest.approx(4.0)
    assert block_weight(observable, [(0, 1), (1, 2), (2, 3), (3, 4)]) == pytest.approx(1.0)
