"""CUSUM-type estimator of a single mean change location."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tsdata import as_array


@dataclass(frozen=True)
class ChangeFit:
    k_hat: int
    theta_hat: float
    objective: float


def cusum_objective(X) -> np.ndarray:
    """Criterion ``||k(n-k)/n^2 (mean(X[:k]) - mean(X[k:]))||^2`` for ``k = 1..n-1``."""
    arr = as_array(X)
    n = arr.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 observations, got n={n}")
    z = arr - arr[0]
    csum = np.cumsum(z, axis=0)
    S, total = csum[:-1], csum[-1]
    k = np.arange(1, n)[:, None]
    # k(n-k)/n^2 * (S_k/k - (S_n - S_k)/(n-k)) = (n S_k - k S_n) / n^2
    diff = (n * S - k * total) / n**2
    return np.sum(diff**2, axis=1)


def estimate_cp(X) -> ChangeFit:
    """Estimate the change location; ties go to the smallest ``k``.

    Examples
    --------
    >>> import numpy as np
    >>> estimate_cp(np.r_[np.zeros(6), np.ones(4)]).k_hat
    6
    """
    obj = cusum_objective(X)
    idx = int(np.argmax(obj))
    n = obj.size + 1
    return ChangeFit(k_hat=idx + 1, theta_hat=(idx + 1) / n, objective=float(obj[idx]))
