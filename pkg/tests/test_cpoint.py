import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relcpd.cpoint import cusum_objective, estimate_cp


def test_noiseless_step():
    fit = estimate_cp(np.r_[np.zeros(6), np.ones(4)])
    assert fit.k_hat == 6 and fit.theta_hat == 0.6


def test_constant_matrix_ties_to_first():
    fit = estimate_cp(np.full((9, 3), 4.2))
    assert fit.k_hat == 1 and fit.objective == 0.0


def test_objective_matches_definition(rng):
    X = rng.normal(size=(15, 3))
    n = len(X)
    direct = [
        np.sum((k * (n - k) / n**2 * (X[:k].mean(0) - X[k:].mean(0))) ** 2) for k in range(1, n)
    ]
    assert np.allclose(cusum_objective(X), direct, rtol=1e-12)


def test_too_short():
    with pytest.raises(ValueError):
        estimate_cp(np.ones((1, 2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-50, 50), st.sampled_from([-3.0, 0.5, 7.0]))
def test_location_and_scale_invariance(seed, shift, c):
    X = np.random.default_rng(seed).normal(size=(30, 4))
    X[18:] += 1.0
    k = estimate_cp(X).k_hat
    assert estimate_cp(X + shift).k_hat == k
    assert estimate_cp(c * X).k_hat == k
