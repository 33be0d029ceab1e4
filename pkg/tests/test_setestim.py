import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relcpd.dgp import DGPSpec, simulate_array
from relcpd.limitdist import draw
from relcpd.setestim import (
    delta_seq_all,
    estimate_S,
    set_threshold,
    support_metrics,
)
from relcpd.ustat import useq_naive


def test_constant_column_is_zero(rng):
    X = rng.normal(size=(30, 3))
    X[:, 1] = 7.0
    assert np.all(delta_seq_all(X, 14, 1, [0.5, 1.0])[:, 1] == 0)


def test_noiseless_step():
    X = np.zeros((20, 2))
    X[8:, 0] = 1.5
    assert delta_seq_all(X, 8, 0, [1.0])[0, 0] == pytest.approx(2.25)


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 30), st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_matches_per_coordinate_oracle(n, p, m, seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, p))
    k = int(r.integers(1, n))
    grid = [0.3, 0.6, 1.0]
    fast = delta_seq_all(X, k, m, grid)
    for ell in range(p):
        slow = useq_naive(X, [ell], k, m, grid, norm_size=1).t_values
        assert np.allclose(fast[:, ell], slow, rtol=1e-10, atol=1e-10)


def test_strong_two_coordinate_signal():
    # near-noiseless steps in coordinates 1 and 2 are always selected; noise
    # coordinates enter only at the rate of the inactive-coordinate limit
    hits, false_pos = 0, 0
    for seed in range(30):
        r = np.random.default_rng(seed)
        X = 0.05 * r.normal(size=(100, 400))
        X[60:, [1, 2]] += 4.0
        est = estimate_S(X, 60, 0)
        hits += {1, 2} <= set(est.S_hat)
        false_pos += len(set(est.S_hat) - {1, 2})
        assert set(np.flatnonzero(est.delta_sq > est.v_ell * est.threshold)) == set(est.S_hat)
    assert hits == 30
    assert false_pos / (30 * 398) <= 0.02


def test_membership_scale_invariant(rng):
    X = rng.normal(size=(80, 10))
    X[50:, :3] += 1.2
    a, b = estimate_S(X, 50, 1), estimate_S(5.0 * X, 50, 1)
    assert a.S_hat == b.S_hat
    assert np.allclose(b.delta_sq, 25 * a.delta_sq) and np.allclose(b.v_ell, 25 * a.v_ell)


def test_threshold_and_p1():
    assert set_threshold(100) == pytest.approx(math.log(100) ** 1.5)
    assert all(set_threshold(p) < set_threshold(p + 1) for p in range(2, 50))
    with pytest.raises(ValueError, match="dense test"):
        estimate_S(np.zeros((20, 1)), 10, 0)


def test_csv_export(tmp_path, rng):
    est = estimate_S(rng.normal(size=(40, 3)), 20, 0)
    est.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "coordinate,delta_sq,v_ell,member" and len(lines) == 4


def test_metrics_examples():
    m = support_metrics({1, 2, 3}, {1, 2, 3})
    assert (m.precision, m.recall, m.f_score) == (1, 1, 1)
    m = support_metrics({1, 2}, {2, 3})
    assert (m.precision, m.recall, m.f_score) == (0.5, 0.5, 0.5)
    m = support_metrics({1}, set())
    assert (m.precision, m.recall, m.f_score) == (0, 0, 0)
    m = support_metrics(set(), set())
    assert m.precision == 1 and math.isnan(m.recall)


def _limit_rate(p):
    # P(H > log(p)^1.5), H the inactive-coordinate limit of delta_sq / v_ell
    values, _ = draw("H", 0, 100_000, 11)
    return float(np.mean(values > set_threshold(p)))


@pytest.mark.slow
def test_pure_noise_rate_matches_limit():
    frac = []
    for r in range(100):
        X = simulate_array(DGPSpec(n=200, p=100, seed=r))
        frac.append(len(estimate_S(X, 120, 0).S_hat) / 100)
    assert np.mean(frac) == pytest.approx(_limit_rate(100), rel=0.2)


@pytest.mark.slow
def test_pure_noise_selects_little_in_high_dimension():
    frac = []
    for r in range(40):
        X = simulate_array(DGPSpec(n=200, p=800, seed=r))
        frac.append(len(estimate_S(X, 120, 0).S_hat) / 800)
    assert np.mean(frac) <= 0.01
