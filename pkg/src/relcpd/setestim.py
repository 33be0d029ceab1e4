"""Per-coordinate change estimates and the estimated support set."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .selfnorm import NuMeasure, v_ell
from .tsdata import as_array
from .ustat import check_grid, coordinate_sums, pair_count


@dataclass(frozen=True, eq=False)
class SetEstimate:
    """Estimated set of changing coordinates (0-based) with its diagnostics.

    ``delta_sq`` holds the full-sample per-coordinate U-statistics, which can
    be negative.  Coordinate ``l`` belongs to ``S_hat`` iff
    ``delta_sq[l] > v_ell[l] * threshold``.
    """

    S_hat: tuple[int, ...]
    delta_sq: np.ndarray = field(repr=False)
    v_ell: np.ndarray = field(repr=False)
    threshold: float
    k_hat: int = 0
    m: int = 0

    def to_csv(self, path) -> None:
        members = set(self.S_hat)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coordinate", "delta_sq", "v_ell", "member"])
            for ell, (d, v) in enumerate(zip(self.delta_sq, self.v_ell)):
                w.writerow([ell, repr(float(d)), repr(float(v)), int(ell in members)])


@dataclass(frozen=True)
class SupportMetrics:
    precision: float
    recall: float
    f_score: float


def delta_seq_all(X, k_hat: int, m: int, grid) -> np.ndarray:
    """Sequential per-coordinate estimates, shape ``(len(grid), p)``.

    Column ``l`` equals ``useq(X, [l], k_hat, m, grid).t_values``, computed for
    all coordinates in one pass.  All zeros when the split leaves too few
    pairs for lag ``m``.
    """
    arr = as_array(X)
    n, p = arr.shape
    grid = check_grid(grid)
    denom = pair_count(k_hat, m) * pair_count(n - k_hat, m)
    if denom == 0:
        return np.zeros((len(grid), p))
    return coordinate_sums(arr, k_hat, m, grid) / denom


def set_threshold(p: int, kappa: float = 1.5) -> float:
    return math.log(p) ** kappa


def estimate_S(X, k_hat: int, m: int, grid_K: int = 20, kappa: float = 1.5) -> SetEstimate:
    """Threshold the self-normalised coordinate statistics at ``log(p)^kappa``.

    Raises
    ------
    ValueError
        If ``p < 2`` (the threshold is zero there; use the dense test) or
        ``kappa <= 1``.
    """
    arr = as_array(X)
    p = arr.shape[1]
    if p < 2:
        raise ValueError("support estimation needs p >= 2; for a single series use the dense test")
    if kappa <= 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    nu = NuMeasure(grid_K)
    grid = nu.grid()
    seq = delta_seq_all(arr, k_hat, m, grid)
    d = seq[-1]
    v = v_ell(seq, grid, nu)
    thr = set_threshold(p, kappa)
    S_hat = tuple(int(i) for i in np.flatnonzero(d > v * thr))
    return SetEstimate(S_hat=S_hat, delta_sq=d, v_ell=v, threshold=thr, k_hat=int(k_hat), m=int(m))


def support_metrics(S_true, S_hat) -> SupportMetrics:
    """Precision, recall and F-score of an estimated support.

    An empty estimate scores precision 1 when the truth is empty and 0
    otherwise.  Recall against an empty truth is undefined and returned as
    NaN; the F-score then falls back to 0.

    >>> support_metrics({1, 2}, {2, 3})
    SupportMetrics(precision=0.5, recall=0.5, f_score=0.5)
    """
    S, Sh = set(S_true), set(S_hat)
    hit = len(S & Sh)
    if Sh:
        precision = hit / len(Sh)
    else:
        precision = 1.0 if not S else 0.0
    recall = hit / len(S) if S else math.nan
    if S and precision + recall > 0:
        f = 2 * precision * recall / (precision + recall)
    else:
        f = 0.0
    return SupportMetrics(precision=precision, recall=recall, f_score=f)
