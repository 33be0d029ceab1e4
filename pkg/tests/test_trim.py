import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relcpd.dgp import DGPSpec, simulate_array
from relcpd.trim import (
    _first_small,
    emit_deltaF,
    read_deltaF,
    select_m,
    trace_curve,
    trace_stat,
    trace_stat_naive,
)


@settings(max_examples=50, deadline=None)
@given(st.integers(6, 20), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_trace_matches_loops(n, p, seed):
    X = np.random.default_rng(seed).normal(size=(n, p)) + 3
    start = 1
    stop = n
    for m in range(0, 3):
        if (stop - start) - m - 1 <= 0:
            break
        assert np.isclose(trace_stat(X, (start, stop), m), trace_stat_naive(X, (start, stop), m),
                          rtol=1e-10, atol=1e-12)


def test_identical_rows_give_zero():
    X = np.tile([1.5, -2.0], (12, 1))
    assert np.all(trace_curve(X, (0, 12), 3) == 0)


def test_short_segment_rejected():
    with pytest.raises(ValueError):
        trace_stat(np.zeros((5, 1)), (0, 3), 2)


def test_iid_mean_near_zero():
    vals = [trace_stat(simulate_array(DGPSpec(n=100, p=5, seed=r)), (0, 100), 0) for r in range(400)]
    assert abs(np.mean(vals)) < 3 * np.std(vals, ddof=1) / np.sqrt(400) + 0.5 * 5 / 100


def test_first_small_rule():
    cut = 0.01
    assert _first_small(np.array([0.001, 0.5]), cut, 7) == 0
    # |dF| first small at m = 3 -> m_hat 2; at m = 5 -> 4
    assert _first_small(np.array([0.4, 0.2, 0.005, 0.3]), cut, 7) == 2
    assert _first_small(np.array([0.4, 0.2, 0.1, 0.05, -0.002]), cut, 7) == 4
    assert _first_small(np.array([0.4, 0.2]), cut, 7) == 7


def test_select_m_follows_rule():
    X = simulate_array(DGPSpec(model="MA(4)", n=200, p=30, seed=2))
    sel = select_m(X, 120)
    for curve, seg, cap, got in ((sel.deltaF1, (0, 120), 40, sel.m1), (sel.deltaF2, (120, 200), 26, sel.m2)):
        full = trace_curve(X, seg, cap)
        assert np.allclose(curve, np.diff(full))
        small = [m for m in range(1, cap + 1) if abs(full[m] - full[m - 1]) <= 0.01]
        assert got == (small[0] - 1 if small else cap)
    assert sel.m_hat == max(sel.m1, sel.m2)
    assert sel.caps == (40, 26)


def test_select_m_caps_too_small():
    with pytest.raises(ValueError):
        select_m(np.zeros((10, 2)), 2)


def test_emit_roundtrip_and_padding(tmp_path):
    X = simulate_array(DGPSpec(n=90, p=4, seed=1))
    sel = select_m(X, 60)
    assert len(sel.deltaF1) != len(sel.deltaF2)
    emit_deltaF(sel, tmp_path / "d.csv", tmp_path / "d.svg")
    d1, d2 = read_deltaF(tmp_path / "d.csv")
    assert np.array_equal(d1, sel.deltaF1) and np.array_equal(d2, sel.deltaF2)
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "m,deltaF1,deltaF2" and lines[-1].endswith(",")
    svg = (tmp_path / "d.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_svg_deterministic(tmp_path):
    X = simulate_array(DGPSpec(n=90, p=4, seed=1))
    sel = select_m(X, 60)
    emit_deltaF(sel, tmp_path / "a.csv", tmp_path / "a.svg")
    emit_deltaF(sel, tmp_path / "b.csv", tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_emit_empty_rejected(tmp_path):
    from relcpd.trim import TrimSelection

    empty = TrimSelection(0, 0, 0, 0.01, (0, 0), np.array([]), np.array([]))
    with pytest.raises(ValueError):
        emit_deltaF(empty, tmp_path / "e.csv")


@pytest.mark.slow
def test_ma2_never_below_order():
    spec = DGPSpec(model="MA(2)", n=200, p=100)
    ms = []
    for r in range(60):
        X = simulate_array(spec.with_(seed=r))
        ms.append(select_m(X, spec.k0).m_hat)
    assert min(ms) >= 2
