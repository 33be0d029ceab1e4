"""Self-normalisers for the global statistic and for single coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ustat import SequentialUStat, _grid_index


@dataclass(frozen=True)
class NuMeasure:
    """Discrete uniform measure on ``{1/K, ..., (K-1)/K}``."""

    K: int = 20

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K}")

    @cached_property
    def support(self) -> np.ndarray:
        return np.arange(1, self.K) / self.K

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.K - 1, 1.0 / (self.K - 1))

    def grid(self) -> np.ndarray:
        """Support plus the end point 1, the grid a sequential statistic needs."""
        return np.append(self.support, 1.0)


def _atoms(grid: np.ndarray, nu: NuMeasure) -> np.ndarray:
    try:
        return np.array([_grid_index(grid, lam) for lam in nu.support])
    except KeyError as exc:
        raise ValueError(f"grid does not contain every atom of nu (K={nu.K}): {exc}") from None


def v_statistic(seq: SequentialUStat, nu: NuMeasure = NuMeasure()) -> float:
    """``sqrt(sum_j w_j (T(lam_j) - Lambda_n(lam_j) T(1))^2)`` over the atoms of ``nu``."""
    idx = _atoms(seq.grid, nu)
    resid = seq.t_values[idx] - seq.lambda_values[idx] * seq.t_full
    return float(np.sqrt(np.dot(nu.weights, resid**2)))


def v_ell(delta_seq: np.ndarray, grid, nu: NuMeasure = NuMeasure()) -> np.ndarray:
    """Per-coordinate self-normaliser.

    ``delta_seq`` has shape ``(len(grid), p)`` (or ``(len(grid),)``) and must
    include ``lam = 1``.  The Lebesgue integral of
    ``(d(lam) - lam^4 d(1))^2`` is replaced by the uniform average over the
    atoms of ``nu``.
    """
    grid = np.asarray(grid, dtype=float)
    d = np.asarray(delta_seq, dtype=float)
    idx = _atoms(grid, nu)
    try:
        full = d[_grid_index(grid, 1.0)]
    except KeyError:
        raise ValueError("grid must contain lam = 1") from None
    lam = nu.support.reshape((-1,) + (1,) * (d.ndim - 1))
    resid = d[idx] - lam**4 * full
    return np.sqrt(np.tensordot(nu.weights, resid**2, axes=1))
