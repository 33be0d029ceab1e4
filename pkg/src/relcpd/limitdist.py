"""Brownian functionals behind the pivotal limits, and their quantile tables.

``G`` is the dense-test pivot; it only needs the Brownian motion at the
atoms ``j/K`` of the discrete measure, which are simulated exactly.  ``H``
(inactive coordinates) and the integrals ``V_alpha`` and ``W_alpha`` use a
trapezoid rule on a uniform grid.

Draws come in fixed-size chunks, and chunk ``c`` always uses the generator
``derive_rng(seed, dist_code, K, c)``.  Results are therefore identical for
any worker count.
"""

from __future__ import annotations

import csv
import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from ._parallel import derive_rng, pmap

CHUNK = 2000
DEFAULT_LEVELS = (0.8, 0.9, 0.95, 0.975, 0.99, 0.995)
DEFAULT_GRID = 1000
CACHE_ENV = "RELCPD_CACHE"
_DIST_CODE = {"G": 1, "H": 2}


@dataclass(frozen=True)
class BrownianPath:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class QuantileTable:
    dist: str
    K: int
    levels: np.ndarray
    quantiles: np.ndarray
    reps: int
    seed: int
    resampled: int = 0

    def quantile(self, level: float) -> float:
        hits = np.flatnonzero(np.isclose(self.levels, level, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise KeyError(f"level {level} not in table {list(self.levels)}")
        return float(self.quantiles[hits[0]])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# dist={self.dist},K={self.K},reps={self.reps},seed={self.seed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "quantile"])
            for lv, q in zip(self.levels, self.quantiles):
                w.writerow([repr(float(lv)), repr(float(q))])

    @classmethod
    def from_csv(cls, path) -> "QuantileTable":
        with open(path, newline="", encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing '# dist=...' header line")
            meta = dict(item.split("=", 1) for item in header[1:].strip().split(","))
            rows = list(csv.DictReader(fh))
        return cls(
            dist=meta["dist"],
            K=int(meta["K"]),
            levels=np.array([float(r["level"]) for r in rows]),
            quantiles=np.array([float(r["quantile"]) for r in rows]),
            reps=int(meta["reps"]),
            seed=int(meta["seed"]),
        )


def brownian_path(times, rng: np.random.Generator, size: int | None = None) -> BrownianPath:
    """Exact Brownian motion values at sorted ``times`` in ``(0, 1]``."""
    times = np.asarray(times, dtype=float)
    dt = np.diff(times, prepend=0.0)
    if np.any(dt <= 0):
        raise ValueError("times must be strictly increasing and positive")
    shape = (len(times),) if size is None else (size, len(times))
    values = np.cumsum(rng.standard_normal(shape) * np.sqrt(dt), axis=-1)
    return BrownianPath(times=times, values=values)


def _uniform_paths(grid_size: int, rng, size: int):
    if grid_size < 100:
        raise ValueError(f"grid_size must be >= 100, got {grid_size}")
    lam = np.arange(grid_size + 1) / grid_size
    B = np.zeros((size, grid_size + 1))
    B[:, 1:] = brownian_path(lam[1:], rng, size).values
    w = np.full(grid_size + 1, 1.0 / grid_size)
    w[[0, -1]] *= 0.5
    return lam, B, w


def _as_output(values, size):
    return float(values[0]) if size is None else values


def _draw_G(K: int, rng, size: int) -> tuple[np.ndarray, int]:
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    lam = np.arange(1, K + 1) / K
    out = np.empty(size)
    todo = np.arange(size)
    resampled = 0
    while todo.size:
        B = brownian_path(lam, rng, todo.size).values
        B1 = B[:, -1]
        bridge = B[:, :-1] - lam[:-1] * B1[:, None]
        den = np.sqrt(np.mean(lam[:-1] ** 6 * bridge**2, axis=1))
        ok = den > 0
        out[todo[ok]] = B1[ok] / den[ok]
        resampled += int((~ok).sum())
        todo = todo[~ok]
    return out, resampled


def _w_integrand(lam, B):
    B1 = B[:, -1:]
    return (B**2 - lam) - lam**2 * (B1**2 - 1.0)


def _draw_H(grid_size: int, rng, size: int) -> tuple[np.ndarray, int]:
    out = np.empty(size)
    todo = np.arange(size)
    resampled = 0
    while todo.size:
        lam, B, w = _uniform_paths(grid_size, rng, todo.size)
        den = np.sqrt((lam**4 * _w_integrand(lam, B) ** 2) @ w)
        ok = den > 0
        out[todo[ok]] = (B[ok, -1] ** 2 - 1.0) / den[ok]
        resampled += int((~ok).sum())
        todo = todo[~ok]
    return out, resampled


def sample_G(K: int, rng: np.random.Generator, size: int | None = None):
    """``B(1) / sqrt(mean_j (j/K)^6 (B(j/K) - (j/K) B(1))^2)`` over ``j = 1..K-1``.

    Zero denominators are redrawn.
    """
    return _as_output(_draw_G(K, rng, 1 if size is None else size)[0], size)


def sample_H(grid_size: int, rng: np.random.Generator, size: int | None = None):
    """``(B(1)^2 - 1) / sqrt(int lam^4 ((B^2 - lam) - lam^2 (B(1)^2 - 1))^2)``."""
    return _as_output(_draw_H(grid_size, rng, 1 if size is None else size)[0], size)


def sample_V_alpha(alpha: float, grid_size: int, rng: np.random.Generator, size: int | None = None):
    """``int_0^1 lam^alpha (B(lam) - lam B(1))^2 dlam`` (the integral, not its root)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    lam, B, w = _uniform_paths(grid_size, rng, 1 if size is None else size)
    vals = (lam**alpha * (B - lam * B[:, -1:]) ** 2) @ w
    return _as_output(vals, size)


def sample_W_alpha(alpha: float, grid_size: int, rng: np.random.Generator, size: int | None = None):
    """``int_0^1 lam^alpha ((B^2 - lam) - lam^2 (B(1)^2 - 1))^2 dlam``."""
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    lam, B, w = _uniform_paths(grid_size, rng, 1 if size is None else size)
    vals = (lam**alpha * _w_integrand(lam, B) ** 2) @ w
    return _as_output(vals, size)


def tail_bound_constants(alpha: float) -> tuple[float, float]:
    """``C = 1 / (16 (alpha + 3))`` and ``D = 3 (C / 4)^(4/3)``; needs ``alpha >= 1``."""
    if alpha < 1:
        raise ValueError(f"tail bound constants need alpha >= 1, got {alpha}")
    C = 1.0 / (16.0 * (alpha + 3.0))
    return C, 3.0 * (C / 4.0) ** (4.0 / 3.0)


def laplace_V_exact(t, alpha: float):
    """Exact ``E exp(-t V_alpha)`` for the weighted bridge integral.

    With ``nu = 1/(alpha+2)`` and ``beta = 2 sqrt(2t)/(alpha+2)`` the transform
    is ``(Gamma(nu+1) (beta/2)^(-nu) I_nu(beta))^(-1/2)``.  This solves
    ``psi'' = 2 t lam^alpha psi`` with ``psi(0) = 0`` and ``psi'(0) = 1``,
    evaluated at ``lam = 1``.
    """
    t = np.asarray(t, dtype=float)
    nu = 1.0 / (alpha + 2.0)
    beta = 2.0 * np.sqrt(2.0 * t) / (alpha + 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # ive = iv * exp(-beta) keeps large t finite
        log_psi = (
            special.gammaln(nu + 1)
            - nu * np.log(beta / 2)
            + np.log(special.ive(nu, beta))
            + beta
        )
        out = np.exp(-0.5 * log_psi)
    return np.where(t == 0, 1.0, out)


def draw(dist: str, K: int, reps: int, seed: int, threads: int | None = None,
         grid_size: int = DEFAULT_GRID) -> tuple[np.ndarray, int]:
    """``reps`` draws of ``G`` (at ``K``) or ``H`` plus the count of redraws."""
    if dist not in _DIST_CODE:
        raise ValueError(f"dist must be 'G' or 'H', got {dist!r}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    code = _DIST_CODE[dist]
    key_K = int(K) if dist == "G" else int(grid_size)
    sizes = [min(CHUNK, reps - start) for start in range(0, reps, CHUNK)]

    def chunk(c):
        rng = derive_rng(seed, code, key_K, c)
        if dist == "G":
            return _draw_G(int(K), rng, sizes[c])
        return _draw_H(int(grid_size), rng, sizes[c])

    parts = pmap(chunk, range(len(sizes)), threads)
    return np.concatenate([v for v, _ in parts]), sum(r for _, r in parts)


_memo: dict = {}
_memo_lock = threading.Lock()


def _sorted_draws(dist, K, reps, seed, threads, grid_size):
    key = (dist, int(K), int(reps), int(seed), int(grid_size))
    with _memo_lock:
        hit = _memo.get(key)
    if hit is None:
        values, resampled = draw(dist, K, reps, seed, threads, grid_size)
        values.sort()
        values.flags.writeable = False
        hit = (values, resampled)
        with _memo_lock:
            _memo[key] = hit
    return hit


def quantile_table(dist: str = "G", K: int = 20, levels=DEFAULT_LEVELS, reps: int = 100_000,
                   seed: int = 0, threads: int | None = None,
                   grid_size: int = DEFAULT_GRID) -> QuantileTable:
    """Type-7 empirical quantiles of ``reps`` draws.

    Draws are memoised per ``(dist, K, reps, seed, grid_size)`` in the
    process, so asking for new levels does not redraw.
    """
    if reps < 1000:
        raise ValueError(f"reps must be >= 1000 for a quantile table, got {reps}")
    levels = np.asarray(sorted(float(x) for x in levels))
    if levels.size == 0 or levels[0] <= 0 or levels[-1] >= 1:
        raise ValueError("levels must be a nonempty set of probabilities in (0, 1)")
    values, resampled = _sorted_draws(dist, K, reps, seed, threads, grid_size)
    q = np.quantile(values, levels, method="linear")
    return QuantileTable(dist=dist, K=int(K) if dist == "G" else 0, levels=levels, quantiles=q,
                         reps=int(reps), seed=int(seed), resampled=resampled)


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "relcpd")


def cached_quantile_table(dist: str, K: int, levels, reps: int, seed: int,
                          threads: int | None = None, directory=None,
                          regenerate: bool = False) -> QuantileTable:
    """Load a persisted table when it covers ``levels``; otherwise compute and store it."""
    directory = Path(directory) if directory is not None else cache_dir()
    path = directory / f"{dist}_K{int(K)}_reps{int(reps)}_seed{int(seed)}.csv"
    wanted = np.asarray(sorted(float(x) for x in levels))
    if path.exists() and not regenerate:
        table = QuantileTable.from_csv(path)
        if all(np.isclose(table.levels, lv, rtol=0, atol=1e-12).any() for lv in wanted):
            return table
        wanted = np.union1d(wanted, table.levels)
    table = quantile_table(dist, K, wanted, reps, seed, threads)
    directory.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    return table
