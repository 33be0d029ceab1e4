import numpy as np
import pytest

from relcpd import limitdist
from relcpd._parallel import derive_rng
from relcpd.limitdist import (
    QuantileTable,
    brownian_path,
    cached_quantile_table,
    draw,
    laplace_V_exact,
    quantile_table,
    sample_G,
    sample_H,
    sample_V_alpha,
    sample_W_alpha,
    tail_bound_constants,
)


def test_tail_constants():
    C, D = tail_bound_constants(1)
    assert C == pytest.approx(1 / 64) and D == pytest.approx(3 * (1 / 256) ** (4 / 3))
    assert tail_bound_constants(4)[0] == pytest.approx(1 / 112)
    Cs = [tail_bound_constants(a)[0] for a in np.linspace(1, 10, 20)]
    assert np.all(np.diff(Cs) < 0)
    with pytest.raises(ValueError):
        tail_bound_constants(0.5)


def test_brownian_increments():
    rng = derive_rng(1)
    path = brownian_path([0.25, 0.5, 1.0], rng, size=200_000)
    inc = np.diff(path.values, axis=1, prepend=0.0)
    assert np.allclose(inc.var(axis=0), [0.25, 0.25, 0.5], rtol=0.02)
    assert abs(np.corrcoef(inc[:, 0], inc[:, 2])[0, 1]) < 0.01


def test_scalar_and_array_outputs():
    rng = derive_rng(2)
    assert isinstance(sample_G(20, rng), float)
    assert sample_H(100, rng, size=3).shape == (3,)
    assert sample_V_alpha(0, 100, rng, size=4).shape == (4,)
    assert np.all(sample_W_alpha(1, 100, rng, size=4) > 0)
    with pytest.raises(ValueError):
        sample_G(1, rng)
    with pytest.raises(ValueError):
        sample_H(50, rng)
    with pytest.raises(ValueError):
        sample_W_alpha(0.5, 100, rng)


def test_G_symmetry_and_no_redraws():
    values, redrawn = draw("G", 20, 100_000, 5)
    assert abs(np.median(values)) <= 0.3
    assert redrawn == 0
    q = np.quantile(values, [0.05, 0.95])
    assert abs(q[0] + q[1]) < 0.1 * q[1]


def test_H_numerator_centred():
    rng = derive_rng(6)
    B1 = brownian_path([1.0], rng, size=100_000).values[:, 0]
    num = B1**2 - 1
    assert abs(num.mean()) < 3 * num.std() / np.sqrt(num.size)


def test_V0_mean():
    rng = derive_rng(7)
    V = np.concatenate([sample_V_alpha(0, 500, rng, size=5000) for _ in range(4)])
    assert abs(V.mean() - 1 / 6) < 3 * V.std(ddof=1) / np.sqrt(V.size)


def test_laplace_exact_matches_mc_and_closed_form():
    t = np.array([1.0, 10.0, 100.0])
    # alpha = 0 is the Brownian bridge: (sqrt(2t) / sinh(sqrt(2t)))^(1/2)
    x = np.sqrt(2 * t)
    assert np.allclose(laplace_V_exact(t, 0.0), np.sqrt(x / np.sinh(x)), rtol=1e-12)
    rng = derive_rng(8)
    for alpha in (0.0, 6.0):
        V = np.concatenate([sample_V_alpha(alpha, 1000, rng, size=5000) for _ in range(4)])
        for tt in t:
            e = np.exp(-tt * V)
            assert abs(e.mean() - laplace_V_exact(tt, alpha)) < 4 * e.std() / np.sqrt(e.size) + 2e-3
    assert laplace_V_exact(0.0, 3.0) == 1.0


def test_quantile_table_deterministic_across_threads():
    a = quantile_table("G", 15, reps=20_000, seed=9, threads=1)
    limitdist._memo.clear()  # force a fresh draw
    b = quantile_table("G", 15, reps=20_000, seed=9, threads=4)
    assert np.array_equal(a.quantiles, b.quantiles)
    assert np.all(np.diff(a.quantiles) >= 0)
    with pytest.raises(ValueError):
        quantile_table("G", 15, reps=10)
    with pytest.raises(ValueError):
        quantile_table("Z", 15, reps=2000)


def test_table_csv_and_cache(tmp_path):
    t = quantile_table("G", 10, levels=(0.9, 0.95), reps=5000, seed=3)
    t.to_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("# dist=G,K=10,reps=5000,seed=3\n")
    back = QuantileTable.from_csv(tmp_path / "t.csv")
    assert np.array_equal(back.quantiles, t.quantiles) and back.quantile(0.95) == t.quantile(0.95)
    c1 = cached_quantile_table("G", 10, (0.9,), 5000, 3, directory=tmp_path)
    assert (tmp_path / "G_K10_reps5000_seed3.csv").exists()
    c2 = cached_quantile_table("G", 10, (0.9, 0.99), 5000, 3, directory=tmp_path)
    assert c2.quantile(0.9) == c1.quantile(0.9) and len(c2.levels) == 2
    with pytest.raises(KeyError):
        c1.quantile(0.5)


@pytest.mark.slow
def test_H_grid_convergence():
    q = [np.quantile(draw("H", 0, 40_000, 21, grid_size=g)[0], 0.95) for g in (500, 1000)]
    assert abs(q[1] / q[0] - 1) < 0.02


@pytest.mark.slow
def test_W_laplace_bound():
    rng = derive_rng(12)
    for alpha in (1.0, 4.0):
        C, _ = tail_bound_constants(alpha)
        W = np.concatenate([sample_W_alpha(alpha, 500, rng, size=5000) for _ in range(4)])
        for t in (10.0, 100.0, 1000.0, 1e4):
            assert np.exp(-t * W).mean() <= 9 * np.exp(-C * t**0.25)
