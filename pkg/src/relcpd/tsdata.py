"""Observation matrix type, CSV ingestion and preprocessing.

Rows are time points, columns are coordinates.  Missing values are carried as
``NaN`` until :func:`preprocess` removes them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MISSING_TOKENS = {"", "na", "nan"}


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class PreprocessPolicy:
    interpolate_missing: bool = True
    zero_negatives: bool = False


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """An ``n x p`` real observation matrix, row ``j`` holding ``X_j``.

    The wrapped array is made read-only on construction.  ``NaN`` entries are
    permitted only before preprocessing (see :attr:`has_missing`).
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f"expected a 2-d array, got shape {values.shape}")
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise DataError("empty input: matrix has zero rows or columns")
        if np.isinf(values).any():
            raise DataError("matrix contains infinite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        return f"TimeSeriesMatrix(n={self.n}, p={self.p})"


def as_array(X) -> np.ndarray:
    """Return the float ``n x p`` array behind ``X`` (matrix or array-like)."""
    if isinstance(X, TimeSeriesMatrix):
        return X.values
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def _parse_token(token: str) -> float:
    token = token.strip()
    if token.lower() in MISSING_TOKENS:
        return np.nan
    try:
        return float(token)
    except ValueError:
        return np.nan


def load_csv(path, has_header: bool = False) -> TimeSeriesMatrix:
    """Read a comma-separated file into a :class:`TimeSeriesMatrix`.

    Empty fields, ``NA`` and ``NaN`` (any case) as well as non-numeric tokens
    become missing values.  Ragged rows raise :class:`DataError` naming the
    1-based line number of the offending row.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    rows: list[list[float]] = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {width}"
                )
            rows.append([_parse_token(t) for t in row])
    if not rows or not width:
        raise DataError(f"{path}: empty input")
    return TimeSeriesMatrix(np.array(rows, dtype=float))


def save_csv(X, path, header: list[str] | None = None, fmt: str = "%.17g") -> None:
    arr = as_array(X)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        np.savetxt(fh, arr, delimiter=",", fmt=fmt)


def _fill_column(col: np.ndarray, index: int) -> np.ndarray:
    miss = np.isnan(col)
    if not miss.any():
        return col
    if miss.all():
        raise DataError(f"column {index} has no observed values")
    t = np.arange(col.size)
    # np.interp holds the end values constant outside the observed range
    out = col.copy()
    out[miss] = np.interp(t[miss], t[~miss], col[~miss])
    return out


def preprocess(X, policy: PreprocessPolicy = PreprocessPolicy()) -> TimeSeriesMatrix:
    """Fill missing values and optionally clamp negatives to zero.

    Interior gaps are linearly interpolated between the nearest observed
    neighbours, leading and trailing gaps take the nearest observed value.
    Columns are 0-based in error messages.
    """
    arr = np.array(as_array(X), dtype=float, copy=True)
    if policy.interpolate_missing:
        for j in range(arr.shape[1]):
            arr[:, j] = _fill_column(arr[:, j], j)
    elif np.isnan(arr).any():
        bad = int(np.flatnonzero(np.isnan(arr).any(axis=0))[0])
        raise DataError(f"column {bad} has missing values and interpolation is disabled")
    if policy.zero_negatives:
        arr[arr < 0] = 0.0
    return TimeSeriesMatrix(arr)
