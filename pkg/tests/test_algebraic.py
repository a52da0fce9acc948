from __future__ import annotations

import numpy as np
import pytest

from app.solvers import algebraic_condition_numbers, condition_number
from app.solvers.algebraic import ALGEBRAIC_PRECONDITIONERS, random_saddle, schur_preconditioner

ALPHAS = [1e-4, 1e-2, 1.0, 1e2, 1e4]
GOLDEN = (1 + np.sqrt(5)) / 2


@pytest.mark.parametrize("alpha", [1e-3, 1.0, 1e3])
def test_schur_preconditioner_spectrum(alpha):
    saddle = random_saddle(12, 4, alpha, seed=3)
    eigs = condition_number(saddle.matrix(), schur_preconditioner(saddle), expected_kernel=0).eigenvalues
    expected = np.sort(np.r_[np.ones(12 - 4), np.full(4, GOLDEN), np.full(4, 1 - GOLDEN)])
    np.testing.assert_allclose(eigs, expected, atol=1e-8)


def test_condition_numbers_over_alpha():
    results = algebraic_condition_numbers(30, 10, ALPHAS, seed=1)
    assert set(results) == set(ALGEBRAIC_PRECONDITIONERS)
    assert all(len(values) == len(ALPHAS) for values in results.values())
    np.testing.assert_allclose(results["schur"], GOLDEN**2, rtol=1e-8)
    # a change of pressure scale maps one alpha onto another
    np.testing.assert_allclose(results["augmented_b1"], results["augmented_b1"][0], rtol=1e-6)
    assert max(results["augmented_b2"]) < 20


def test_random_saddle_is_reproducible():
    first, second = random_saddle(8, 3, 1.0, seed=7), random_saddle(8, 3, 1.0, seed=7)
    np.testing.assert_array_equal(first.matrix(), second.matrix())
    assert first.matrix().shape == (11, 11)
    assert np.linalg.eigvalsh(first.a).min() >= 1.0 - 1e-12


@pytest.mark.parametrize("n, m, alpha", [(5, 5, 1.0), (5, 0, 1.0), (5, 2, 0.0)])
def test_random_saddle_arguments(n, m, alpha):
    with pytest.raises(ValueError):
        random_saddle(n, m, alpha)
