from __future__ import annotations

import random
from fractions import Fraction

import pytest

from csm_bounds.engines import ansatz_solver, dense_operator
from csm_bounds.settings import reset_settings
from csm_bounds.utils.couplings import CouplingSet, random_rational_couplings


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Fresh settings per test with the closed-form cache under tmp_path."""
    monkeypatch.setenv("CSM_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("CSM_WORKERS", raising=False)
    reset_settings()
    ansatz_solver.clear_cache()
    yield
    reset_settings()
    ansatz_solver.clear_cache()
    dense_operator.clear_cache()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def small_couplings(rng) -> list[CouplingSet]:
    """Seeded random distinct rational coupling sets of sizes 1..4."""
    return [random_rational_couplings(n, rng, distinct=True) for n in range(1, 5)]


@pytest.fixture
def two_three() -> CouplingSet:
    return CouplingSet((Fraction(2), Fraction(3)))
