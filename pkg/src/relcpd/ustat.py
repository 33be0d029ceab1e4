"""Trimmed two-sample U-statistics and their sequential versions.

For a split ``k``, trimming lag ``m`` and ``lam`` in (0, 1] the sequential
statistic compares the first ``floor(lam * k)`` observations with the
``floor(lam * (n - k))`` observations following the split,

    T(k, m; lam) = 1 / (N_m(k) N_m(n - k) |A|)
                   * sum_{i1, i2 <= a, |i1 - i2| > m}
                     sum_{k < j1, j2 <= k + b, |j1 - j2| > m}
                     sum_{l in A} (X[i1, l] - X[j1, l]) (X[i2, l] - X[j2, l]),

with ``a = floor(lam k)``, ``b = floor(lam (n - k))`` and
``N_m(L) = (L - m)(L - m - 1)``.

The quadruple sum is never formed.  Expanding the product gives

    N_m(b) S_I + N_m(a) S_J - 2 <W_I, W_J>,

where ``S_B`` is the sum of inner products over index pairs of block ``B``
more than ``m`` apart, and ``W_B`` weights each row by the number of such
partners it has.  Both are read off prefix sums, so one split costs
``O(n |A|)`` plus ``O(|A|)`` per grid point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tsdata import as_array

# absorbs representation error in lam * k before flooring (0.29 * 100 -> 29)
_FLOOR_EPS = 1e-9


def pair_count(k: int, m: int) -> int:
    """Number of ordered pairs in ``{1..k}`` more than ``m`` apart."""
    k, m = int(k), int(m)
    if k <= m + 1:
        return 0
    return (k - m) * (k - m - 1)


def floor_fraction(lam, length: int):
    """``floor(lam * length)`` robust to binary representation of ``lam``."""
    out = np.floor(np.asarray(lam, dtype=float) * length + _FLOOR_EPS).astype(int)
    return np.minimum(out, length)


def lambda_factor(lam: float, k: int, n: int, m: int) -> float:
    """Finite-sample centring factor ``Lambda_n(lam)``.

    Equals ``N_m(floor(lam k)) / N_m(k) * N_m(floor(lam (n-k))) / N_m(n-k)``.
    """
    nk, nnk = pair_count(k, m), pair_count(n - k, m)
    if nk == 0 or nnk == 0:
        raise ValueError(
            f"lambda_factor undefined: N_m(k)={nk}, N_m(n-k)={nnk} for k={k}, n={n}, m={m}"
        )
    a = int(floor_fraction(lam, k))
    b = int(floor_fraction(lam, n - k))
    return pair_count(a, m) / nk * pair_count(b, m) / nnk


@dataclass(frozen=True, eq=False)
class SequentialUStat:
    """Sequential statistic on a grid of ``lam`` values.

    Attributes
    ----------
    k, m : int
        Split point and trimming lag.
    grid : ndarray
        Strictly increasing ``lam`` values in (0, 1].
    t_values : ndarray
        ``T(k, m; lam)`` for each grid point.
    lambda_values : ndarray
        ``Lambda_n(lam)`` for each grid point (zeros when degenerate).
    t_full : float
        ``T(k, m; 1)``.
    norm_size : int
        The divisor ``|A|``.
    degenerate : bool
        True when ``k <= m + 1`` or ``k + m >= n - 1``; every value is then 0.
    """

    k: int
    m: int
    grid: np.ndarray
    t_values: np.ndarray
    lambda_values: np.ndarray
    t_full: float
    norm_size: int
    degenerate: bool = False

    def at(self, lam: float) -> float:
        idx = _grid_index(self.grid, lam)
        return float(self.t_values[idx])


def _grid_index(grid: np.ndarray, lam: float) -> int:
    hits = np.flatnonzero(np.isclose(grid, lam, rtol=0, atol=1e-12))
    if hits.size == 0:
        raise KeyError(f"lambda={lam} not on grid")
    return int(hits[0])


def check_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(grid <= 0) or np.any(grid > 1):
        raise ValueError("lambda grid values must lie in (0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    return grid


def _columns(p: int, A) -> np.ndarray:
    if A is None:
        return np.arange(p)
    cols = np.unique(np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=int))
    if cols.size == 0:
        raise ValueError("coordinate set A is empty")
    if cols[0] < 0 or cols[-1] >= p:
        raise ValueError(f"coordinate set A must be a subset of 0..{p - 1}")
    return cols


def _check_split(n: int, k: int) -> None:
    if not 1 <= k <= n - 1:
        raise ValueError(f"split k={k} outside 1..{n - 1}")


def block_prefix_sums(z: np.ndarray, lengths, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Trimmed pair sums of the leading rows of ``z``.

    For every ``L`` in ``lengths`` and each column returns

    * ``S[L] = sum_{i1, i2 < L, |i1 - i2| > m} z[i1] z[i2]``
    * ``W[L] = sum_{i < L} w_L(i) z[i]``, ``w_L(i)`` being the number of
      partners of ``i`` inside the block that are more than ``m`` away.

    Both arrays have shape ``(len(lengths), z.shape[1])``.
    """
    L_max = z.shape[0]
    lengths = np.asarray(lengths, dtype=int)
    p = z.shape[1]
    P = np.zeros((L_max + 1, p))
    np.cumsum(z, axis=0, out=P[1:])
    idx = np.arange(1, L_max + 1)
    R = np.zeros((L_max + 1, p))
    np.cumsum(z * idx[:, None], axis=0, out=R[1:])

    # near[i] = sum_{max(i-m, 0) <= t <= i} z[t]
    lo = np.maximum(np.arange(L_max) - m, 0)
    near = P[1:] - P[lo]
    C = np.zeros((L_max + 1, p))
    np.cumsum(z * near, axis=0, out=C[1:])
    Q = np.zeros((L_max + 1, p))
    np.cumsum(z * z, axis=0, out=Q[1:])

    S = P[lengths] ** 2 - (2.0 * C[lengths] - Q[lengths])

    # 1-based weights: (L - m - i)_+ for i <= L - m - 1 and (i - m - 1)_+ for i >= m + 2
    c = np.maximum(lengths - m - 1, 0)
    W = (lengths - m)[:, None] * P[c] - R[c]
    d = np.minimum(m + 1, lengths)
    W += (R[lengths] - R[d]) - (m + 1) * (P[lengths] - P[d])
    short = lengths <= m + 1
    S[short] = 0.0
    W[short] = 0.0
    return S, W


def coordinate_sums(X, k: int, m: int, grid) -> np.ndarray:
    """Untrimmed-normalised quadruple sums per coordinate.

    Returns an array of shape ``(len(grid), p)`` whose entry ``(g, l)`` is the
    quadruple sum of the module docstring restricted to coordinate ``l`` at
    ``lam = grid[g]``, before division by ``N_m(k) N_m(n - k)``.
    """
    arr = as_array(X)
    n = arr.shape[0]
    k, m = int(k), int(m)
    _check_split(n, k)
    if m < 0:
        raise ValueError("trimming lag m must be nonnegative")
    grid = check_grid(grid)
    # any common shift cancels in the differences; the first row keeps
    # magnitudes at noise level and makes constant columns exactly zero
    z = arr - arr[0]
    a = floor_fraction(grid, k)
    b = floor_fraction(grid, n - k)
    S_I, W_I = block_prefix_sums(z[:k], a, m)
    S_J, W_J = block_prefix_sums(z[k:], b, m)
    Na = np.array([pair_count(x, m) for x in a], dtype=float)[:, None]
    Nb = np.array([pair_count(x, m) for x in b], dtype=float)[:, None]
    return Nb * S_I + Na * S_J - 2.0 * W_I * W_J


def _lambda_values(grid, k, n, m, degenerate):
    if degenerate:
        return np.zeros(len(grid))
    return np.array([lambda_factor(g, k, n, m) for g in grid])


def _finish(raw_sum, grid, k, n, m, norm_size, degenerate) -> SequentialUStat:
    if degenerate:
        t = np.zeros(len(grid))
    else:
        t = raw_sum / (pair_count(k, m) * pair_count(n - k, m) * norm_size)
    full = float(t[-1]) if np.isclose(grid[-1], 1.0) else np.nan
    return SequentialUStat(
        k=k,
        m=m,
        grid=grid,
        t_values=t,
        lambda_values=_lambda_values(grid, k, n, m, degenerate),
        t_full=full,
        norm_size=norm_size,
        degenerate=degenerate,
    )


def _prepare(X, A, k, m, grid):
    arr = as_array(X)
    n, p = arr.shape
    cols = _columns(p, A)
    k, m = int(k), int(m)
    _check_split(n, k)
    if m < 0:
        raise ValueError("trimming lag m must be nonnegative")
    grid = check_grid(grid)
    work = grid if np.isclose(grid[-1], 1.0) else np.append(grid, 1.0)
    degenerate = pair_count(k, m) == 0 or pair_count(n - k, m) == 0
    return arr, n, cols, k, m, grid, work, degenerate


def _trim_to(stat: SequentialUStat, grid: np.ndarray) -> SequentialUStat:
    if len(stat.grid) == len(grid):
        return stat
    return SequentialUStat(
        k=stat.k,
        m=stat.m,
        grid=grid,
        t_values=stat.t_values[: len(grid)],
        lambda_values=stat.lambda_values[: len(grid)],
        t_full=stat.t_full,
        norm_size=stat.norm_size,
        degenerate=stat.degenerate,
    )


def useq(X, A=None, k: int = 1, m: int = 0, grid=(1.0,), norm_size: int | None = None) -> SequentialUStat:
    """Sequential trimmed U-statistic over the coordinates ``A``.

    Parameters
    ----------
    X : TimeSeriesMatrix or array_like, shape (n, p)
    A : iterable of int, optional
        0-based coordinate indices; all coordinates when omitted.
    k : int
        Split point, ``1 <= k <= n - 1``.
    m : int
        Trimming lag.
    grid : array_like
        Strictly increasing ``lam`` values in (0, 1].
    norm_size : int, optional
        Divisor; defaults to ``|A|``.

    Returns
    -------
    SequentialUStat
    """
    arr, n, cols, k, m, grid, work, degenerate = _prepare(X, A, k, m, grid)
    norm = len(cols) if norm_size is None else int(norm_size)
    raw = np.zeros(len(work))
    if not degenerate:
        raw = coordinate_sums(arr[:, cols], k, m, work).sum(axis=1)
    return _trim_to(_finish(raw, work, k, n, m, norm, degenerate), grid)


def useq_naive(X, A=None, k: int = 1, m: int = 0, grid=(1.0,), norm_size: int | None = None) -> SequentialUStat:
    """Literal evaluation of the quadruple sum; a test oracle for :func:`useq`.

    Enumerates every index tuple ``(i1, i2, j1, j2)`` through a dense
    contraction of the ``a x b x |A|`` difference tensor with the two pair
    masks.  Cost is ``O(a^2 b^2 |A|)``, so keep ``n`` below about 50.
    """
    arr, n, cols, k, m, grid, work, degenerate = _prepare(X, A, k, m, grid)
    norm = len(cols) if norm_size is None else int(norm_size)
    sub = arr[:, cols]
    raw = np.zeros(len(work))
    if not degenerate:
        for g, lam in enumerate(work):
            a = int(floor_fraction(lam, k))
            b = int(floor_fraction(lam, n - k))
            if a == 0 or b == 0:
                continue
            I = sub[:a]
            J = sub[k : k + b]
            D = I[:, None, :] - J[None, :, :]
            ia = np.arange(a)
            jb = np.arange(b)
            MI = (np.abs(ia[:, None] - ia[None, :]) > m).astype(float)
            MJ = (np.abs(jb[:, None] - jb[None, :]) > m).astype(float)
            raw[g] = np.einsum("ac,bd,abl,cdl->", MI, MJ, D, D)
    return _trim_to(_finish(raw, work, k, n, m, norm, degenerate), grid)
