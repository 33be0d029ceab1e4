"""Gaussian simulation designs with a single mean change.

Observations follow ``X_j = mu + eta_j`` up to ``k0 = floor(n theta0)`` and
``X_j = mu + eta_j + delta`` afterwards, where ``delta`` has ``s`` equal
nonzero leading entries of square ``signal``.  The error process ``eta`` is
one of

* ``IND``      independent ``N(0, Sigma)`` rows,
* ``MA(q)``    ``e_j + sum_{k<=q} c_k e_{j-k}`` with fixed ``c``,
* ``AR(c)``    ``c eta_{j-1} + e_j`` after a burn-in from zero,

with innovations ``N(0, diag(0.5))`` ("diagonal") or
``N(0, 0.5 * 0.9^|i-j|)`` ("toeplitz").  Starred models force diagonal
innovations.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields, replace
from functools import lru_cache

import numpy as np

from ._parallel import derive_rng
from .tsdata import TimeSeriesMatrix

MA_COEFFS = (0.5, 0.25, 0.2, 0.1, 0.05, 0.025)
AR_BURN_IN = 500
SPATIAL = ("diagonal", "toeplitz")

_MODEL_RE = re.compile(r"^(IND|MA(\*?)\((\d+)\)|AR(\*?)\(([0-9.]+)\))$")


def parse_model(model: str) -> tuple[str, float, bool]:
    """Split a model name into ``(kind, order_or_coefficient, starred)``.

    >>> parse_model("MA*(6)")
    ('MA', 6, True)
    """
    m = _MODEL_RE.match(model.replace(" ", "").upper())
    if m is None:
        raise ValueError(f"unknown model {model!r}; expected IND, MA(q), AR(c), MA*(q) or AR*(c)")
    if m.group(1) == "IND":
        return "IND", 0, False
    if m.group(3) is not None:
        q = int(m.group(3))
        if not 1 <= q <= len(MA_COEFFS):
            raise ValueError(f"MA order must be in 1..{len(MA_COEFFS)}, got {q}")
        return "MA", q, bool(m.group(2))
    c = float(m.group(5))
    if not 0 <= c < 1:
        raise ValueError(f"AR coefficient must be in [0, 1), got {c}")
    return "AR", c, bool(m.group(4))


def default_spatial(model: str) -> str:
    kind, _, starred = parse_model(model)
    return "diagonal" if kind == "IND" or starred else "toeplitz"


@dataclass(frozen=True)
class DGPSpec:
    model: str = "IND"
    spatial: str | None = None
    n: int = 200
    p: int = 100
    theta0: float = 0.6
    mu: float = 10.0
    s: int | None = None
    signal: float = 0.0
    seed: int = 0

    def __post_init__(self):
        kind, _, starred = parse_model(self.model)
        spatial = self.spatial or default_spatial(self.model)
        if spatial not in SPATIAL:
            raise ValueError(f"spatial must be one of {SPATIAL}, got {spatial!r}")
        if starred and spatial != "diagonal":
            raise ValueError(f"{self.model} uses diagonal innovations by definition")
        object.__setattr__(self, "spatial", spatial)
        s = self.p if self.s is None else int(self.s)
        object.__setattr__(self, "s", s)
        if self.n < 2 or self.p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 1 <= s <= self.p:
            raise ValueError(f"s must be in 1..p, got s={s}, p={self.p}")
        if self.signal < 0:
            raise ValueError("signal is a squared magnitude and must be >= 0")
        if not 1 <= self.k0 <= self.n - 1:
            raise ValueError(f"floor(n * theta0) = {self.k0} outside 1..{self.n - 1}")

    @property
    def k0(self) -> int:
        return int(math.floor(self.n * self.theta0 + 1e-9))

    @property
    def delta(self) -> np.ndarray:
        d = np.zeros(self.p)
        d[: self.s] = math.sqrt(self.signal)
        return d

    @property
    def support(self) -> list[int]:
        """0-based indices of the changing coordinates (empty if no signal)."""
        return list(range(self.s)) if self.signal > 0 else []

    def with_(self, **changes) -> "DGPSpec":
        """Copy with ``changes``; a dense design stays dense when only ``p`` changes."""
        if "p" in changes and "s" not in changes and self.s == self.p:
            changes["s"] = changes["p"]
        return replace(self, **changes)

    def to_config(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_mapping(cls, mapping: dict) -> "DGPSpec":
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in mapping.items():
            if key not in types:
                raise KeyError(f"unknown DGP key {key!r}")
            kw[key] = _coerce(key, raw)
        return cls(**kw)

    @classmethod
    def from_config(cls, text: str) -> "DGPSpec":
        mapping = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)


_INT_KEYS = {"n", "p", "s", "seed"}
_FLOAT_KEYS = {"theta0", "mu", "signal"}


def _coerce(key, raw):
    if not isinstance(raw, str):
        return raw
    if raw.lower() in ("", "none"):
        return None
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


@lru_cache(maxsize=16)
def _toeplitz_cholesky(p: int) -> np.ndarray:
    i = np.arange(p)
    sigma = 0.5 * 0.9 ** np.abs(i[:, None] - i[None, :])
    return np.linalg.cholesky(sigma)


def _innovations(rng: np.random.Generator, rows: int, p: int, spatial: str) -> np.ndarray:
    z = rng.standard_normal((rows, p))
    if spatial == "diagonal":
        return z * math.sqrt(0.5)
    return z @ _toeplitz_cholesky(p).T


def simulate_errors(spec: DGPSpec, rng: np.random.Generator) -> np.ndarray:
    kind, par, _ = parse_model(spec.model)
    n, p = spec.n, spec.p
    if kind == "IND":
        return _innovations(rng, n, p, spec.spatial)
    if kind == "MA":
        q = int(par)
        e = _innovations(rng, n + q, p, spec.spatial)
        eta = e[q:].copy()
        for lag in range(1, q + 1):
            eta += MA_COEFFS[lag - 1] * e[q - lag : q - lag + n]
        return eta
    e = _innovations(rng, n + AR_BURN_IN, p, spec.spatial)
    eta = np.empty_like(e)
    prev = np.zeros(p)
    for j in range(e.shape[0]):
        prev = par * prev + e[j]
        eta[j] = prev
    return eta[AR_BURN_IN:]


def simulate_array(spec: DGPSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    if rng is None:
        rng = derive_rng(spec.seed)
    X = spec.mu + simulate_errors(spec, rng)
    X[spec.k0 :] += spec.delta
    return X


def simulate(spec: DGPSpec) -> TimeSeriesMatrix:
    """Draw one sample; deterministic in ``spec.seed``."""
    return TimeSeriesMatrix(simulate_array(spec))
