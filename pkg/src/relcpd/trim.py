"""Data-driven choice of the trimming lag ``m``.

The selector looks at how the trimmed, centred autocovariance-trace sum of
each segment changes when ``m`` grows by one, and stops at the first lag where
that change is negligible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tsdata import as_array
from .ustat import pair_count


@dataclass(frozen=True, eq=False)
class TrimSelection:
    m1: int
    m2: int
    m_hat: int
    cutoff: float
    caps: tuple[int, int]
    deltaF1: np.ndarray = field(repr=False)
    deltaF2: np.ndarray = field(repr=False)


def _centred_segment(X, segment) -> np.ndarray:
    arr = as_array(X)
    start, stop = segment
    if not 0 <= start < stop <= arr.shape[0]:
        raise ValueError(f"segment {segment} outside 0..{arr.shape[0]}")
    seg = arr[start:stop]
    # shifting by the first row first makes identical rows centre to exact zeros
    seg = seg - seg[0]
    return seg - seg.mean(axis=0)


def trace_curve(X, segment, max_m: int) -> np.ndarray:
    """Trimmed trace statistic ``F(m)`` for ``m = 0..max_m``.

    ``F(m) = N_m(L)^{-1} sum_{|j1 - j2| > m} (X_j1 - Xbar)'(X_j2 - Xbar)``
    over the rows of the half-open, 0-based ``segment = (start, stop)``.
    """
    z = _centred_segment(X, segment)
    L = z.shape[0]
    if max_m < 0 or pair_count(L, max_m) == 0:
        raise ValueError(f"segment of length {L} too short for m={max_m}")
    total = z.sum(axis=0)
    gamma = np.array([np.sum(z[h:] * z[: L - h]) for h in range(max_m + 1)])
    # pairs within distance m: lag 0 once, lags 1..m twice
    near = np.cumsum(np.r_[gamma[0], 2.0 * gamma[1:]])
    pairs = np.array([pair_count(L, m) for m in range(max_m + 1)], dtype=float)
    return (np.dot(total, total) - near) / pairs


def trace_stat(X, segment, m: int) -> float:
    return float(trace_curve(X, segment, m)[m])


def trace_stat_naive(X, segment, m: int) -> float:
    """Double loop over row pairs; oracle for :func:`trace_stat`."""
    z = _centred_segment(X, segment)
    L = z.shape[0]
    N = pair_count(L, m)
    if N == 0:
        raise ValueError(f"segment of length {L} too short for m={m}")
    acc = 0.0
    for j1 in range(L):
        for j2 in range(L):
            if abs(j1 - j2) > m:
                acc += float(np.dot(z[j1], z[j2]))
    return acc / N


def _first_small(delta: np.ndarray, cutoff: float, cap: int) -> int:
    small = np.flatnonzero(np.abs(delta) <= cutoff)
    if small.size == 0:
        return cap
    return int(small[0])  # delta[0] is m = 1, so the index is already "min - 1"


def select_m(X, k_hat: int, cutoff: float = 0.01) -> TrimSelection:
    """Pick ``m`` from the first-difference curves of both segments.

    Segment caps are ``floor(k_hat / 3)`` and ``floor((n - k_hat) / 3)``.
    When no lag up to the cap qualifies, the cap itself is used.
    """
    arr = as_array(X)
    n = arr.shape[0]
    k_hat = int(k_hat)
    M1, M2 = k_hat // 3, (n - k_hat) // 3
    if M1 < 1 or M2 < 1:
        raise ValueError(
            f"segments too short for trimming selection: k_hat={k_hat}, n={n} "
            f"(caps {M1}, {M2}; need both >= 1)"
        )
    dF1 = np.diff(trace_curve(arr, (0, k_hat), M1))
    dF2 = np.diff(trace_curve(arr, (k_hat, n), M2))
    m1 = _first_small(dF1, cutoff, M1)
    m2 = _first_small(dF2, cutoff, M2)
    return TrimSelection(
        m1=m1, m2=m2, m_hat=max(m1, m2), cutoff=cutoff, caps=(M1, M2), deltaF1=dF1, deltaF2=dF2
    )


def emit_deltaF(selection: TrimSelection, csv_path, svg_path=None) -> None:
    """Write the difference curves as CSV (``m, deltaF1, deltaF2``) and optionally SVG.

    The shorter curve is padded with empty fields.
    """
    d1, d2 = np.asarray(selection.deltaF1), np.asarray(selection.deltaF2)
    rows = max(d1.size, d2.size)
    if rows == 0:
        raise ValueError("selection has no difference curves to emit")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "deltaF1", "deltaF2"])
        for i in range(rows):
            w.writerow(
                [
                    i + 1,
                    repr(float(d1[i])) if i < d1.size else "",
                    repr(float(d2[i])) if i < d2.size else "",
                ]
            )
    if svg_path is not None:
        _plot_deltaF(selection, Path(svg_path))


def read_deltaF(csv_path) -> tuple[np.ndarray, np.ndarray]:
    d1, d2 = [], []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["deltaF1"]:
                d1.append(float(row["deltaF1"]))
            if row["deltaF2"]:
                d2.append(float(row["deltaF2"]))
    return np.array(d1), np.array(d2)


def _plot_deltaF(selection: TrimSelection, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "relcpd", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for curve, label in ((selection.deltaF1, "pre-change"), (selection.deltaF2, "post-change")):
            ax.plot(np.arange(1, len(curve) + 1), curve, marker=".", label=label)
        ax.axhspan(-selection.cutoff, selection.cutoff, color="0.85", zorder=0)
        ax.axvline(selection.m_hat, color="k", ls=":", lw=1)
        ax.set_xlabel("m")
        ax.set_ylabel(r"$\Delta F(m)$")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
