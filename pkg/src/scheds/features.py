"""Dataset ingestion and the dictionaries of the daily-temperature model.

Mean dictionary: products ``psi_l(t) * u_i u_i'`` of 16 time functions

    psi_1 = 1,  psi_l = t^{1/(l-1)} (l = 2..4),
    psi_l = cos(2 pi (l-4) t / 365) (l = 5..10),  psi_l = sin(2 pi (l-10) t / 365) (l = 11..16)

with the 136 quadratic monomials of a 16-dimensional covariate ``u_t``; one
group per monomial, 2176 columns in all.

Variance dictionary (11 columns):

    1,  t,  (t + 730)^{-1/2},  1 + cos(2 pi l t / 365) (l = 1..4),  1 + sin(2 pi l t / 365) (l = 1..4)
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import GroupPartition

__all__ = [
    "Dataset",
    "load_csv",
    "load_mapping",
    "GSOD_MAPPING",
    "time_basis",
    "build_temperature_design",
    "build_variance_dictionary",
    "temperature_covariates",
    "synthetic_daily_weather",
    "N_COVARIATES",
    "N_TIME",
    "PERIOD",
]

N_COVARIATES = 16
N_TIME = 16
PERIOD = 365.0

# canonical field -> GSOD column; sentinel strings mark missing values
GSOD_MAPPING = {
    "columns": {"date": "YEARMODA", "temp": "TEMP", "max": "MAX", "min": "MIN", "wind": "WDSP"},
    "missing": ["9999.9", "999.9", "99.99"],
    "strip": "*",
}


@dataclass
class Dataset:
    """Numeric columns with a response and a time index; complete rows only."""

    columns: dict
    response: np.ndarray
    t: np.ndarray
    dropped: int = 0
    names: list = field(default_factory=list)

    @property
    def T(self) -> int:
        return self.response.size

    def matrix(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        names = self.names if names is None else list(names)
        if not names:
            return np.zeros((self.T, 0))
        return np.column_stack([self.columns[n] for n in names])

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset({k: v[rows] for k, v in self.columns.items()}, self.response[rows],
                       self.t[rows], self.dropped, list(self.names))


def load_mapping(path) -> dict:
    """Column mapping file: ``{"columns": {canonical: csv_name}, "missing": [...]}``."""
    with open(path) as fh:
        m = json.load(fh)
    if "columns" not in m or not isinstance(m["columns"], dict):
        raise ValueError(f"{path}: mapping needs a 'columns' object")
    return m


def load_csv(path, response_column: str, covariate_columns: Sequence[str],
             time_column: Optional[str] = None, delimiter: str = ",",
             mapping: Optional[dict] = None) -> Dataset:
    """Read a headed CSV file.

    Rows with an empty (or mapped-missing) cell in a requested column are
    dropped and counted; any other non-numeric cell is an error naming its
    row and column.  Without ``time_column`` the time index is ``1..T``.
    Names may be canonical names resolved through ``mapping``.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    mapping = mapping or {}
    alias = mapping.get("columns", {})
    missing = set(mapping.get("missing", []))
    strip = mapping.get("strip", "")
    wanted = [response_column] + list(covariate_columns) + ([time_column] if time_column else [])
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        index = {}
        for name in wanted:
            col = alias.get(name, name)
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
            index[name] = header.index(col)
        values = {name: [] for name in wanted}
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            cells = {}
            gap = False
            for name, j in index.items():
                cell = row[j].strip() if j < len(row) else ""
                if strip:
                    cell = cell.rstrip(strip)
                if cell == "" or cell in missing:
                    gap = True
                    break
                try:
                    cells[name] = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: row {lineno}, column {alias.get(name, name)!r}: "
                                     f"non-numeric value {cell!r}") from None
            if gap:
                dropped += 1
                continue
            for name, val in cells.items():
                values[name].append(val)
    cols = {name: np.asarray(v, dtype=float) for name, v in values.items()}
    y = cols[response_column]
    t = cols[time_column] if time_column else np.arange(1, y.size + 1, dtype=float)
    return Dataset({n: cols[n] for n in covariate_columns}, y, t, dropped, list(covariate_columns))


# -- dictionaries ----------------------------------------------------------------

def _check_t(t):
    t = np.asarray(t, dtype=float).ravel()
    if np.any(t <= 0):
        raise ValueError("time values must be positive")
    return t


def time_basis(t) -> np.ndarray:
    """The 16 time functions ``psi_l(t)`` as a ``T x 16`` matrix."""
    t = _check_t(t)
    cols = [np.ones_like(t)]
    cols += [t ** (1.0 / (l - 1)) for l in (2, 3, 4)]
    cols += [np.cos(2 * np.pi * (l - 4) * t / PERIOD) for l in range(5, 11)]
    cols += [np.sin(2 * np.pi * (l - 10) * t / PERIOD) for l in range(11, 17)]
    return np.column_stack(cols)


def build_temperature_design(t, U):
    """``(X, partition)``: ``X[:, 16 g + l] = psi_l(t) u_i u_i'`` for the ``g``-th
    pair ``i <= i'`` in lexicographic order."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] != N_COVARIATES:
        raise ValueError(f"covariate dimension must be {N_COVARIATES}, got {U.shape[1]}")
    psi = time_basis(t)
    if psi.shape[0] != U.shape[0]:
        raise ValueError("t and U have different row counts")
    ii, jj = np.triu_indices(N_COVARIATES)
    chi = U[:, ii] * U[:, jj]  # (T, 136)
    X = (chi[:, :, None] * psi[:, None, :]).reshape(U.shape[0], -1)
    partition = GroupPartition.contiguous([N_TIME] * ii.size)
    return X, partition


def build_variance_dictionary(t) -> np.ndarray:
    t = _check_t(t)
    cols = [np.ones_like(t), t, 1.0 / np.sqrt(t + 2 * PERIOD)]
    cols += [1.0 + np.cos(2 * np.pi * l * t / PERIOD) for l in range(1, 5)]
    cols += [1.0 + np.sin(2 * np.pi * l * t / PERIOD) for l in range(1, 5)]
    return np.column_stack(cols)


def temperature_covariates(temp, tmax, tmin, wind, t=None, lags: int = 7):
    """Response and covariates from daily series.

    ``y_t = temp_t - temp_{t-1}``; ``u_t = (1, y_{t-1..t-lags},
    (max - min)_{t-1..t-lags}, wind_{t-1})``.  Days without full history are
    dropped.  Returns ``(t, U, y)``.
    """
    temp, tmax, tmin, wind = (np.asarray(a, dtype=float).ravel() for a in (temp, tmax, tmin, wind))
    n = temp.size
    if not (tmax.size == tmin.size == wind.size == n):
        raise ValueError("daily series must have equal length")
    t = np.arange(1, n + 1, dtype=float) if t is None else np.asarray(t, dtype=float).ravel()
    incr = np.full(n, np.nan)
    incr[1:] = np.diff(temp)
    rng = tmax - tmin
    first = lags + 1
    if n <= first:
        raise ValueError(f"need more than {first} days of history")
    rows = np.arange(first, n)
    U = np.empty((rows.size, 1 + 2 * lags + 1))
    U[:, 0] = 1.0
    for k in range(1, lags + 1):
        U[:, k] = incr[rows - k]
        U[:, lags + k] = rng[rows - k]
    U[:, -1] = wind[rows - 1]
    return t[rows], U, incr[rows]


def synthetic_daily_weather(n_days: int, seed: int = 0):
    """Seasonal temperature-like series ``(temp, max, min, wind)`` for tests and demos.

    Daily increments are Gaussian with a seasonal mean and a seasonal noise
    level, so the series resembles the real data qualitatively.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 17])))
    t = np.arange(1, n_days + 1, dtype=float)
    season = np.sin(2 * np.pi * t / PERIOD)
    sd = 3.0 + 1.5 * (1 + np.cos(2 * np.pi * (t - 170) / PERIOD))
    temp = 52.0 + 15.0 * season + sd * rng.standard_normal(n_days)
    spread = 10.0 + 4.0 * (1 + season) + rng.gamma(2.0, 1.0, n_days)
    tmax = temp + 0.5 * spread
    tmin = temp - 0.5 * spread
    wind = np.abs(8.0 + 3.0 * rng.standard_normal(n_days))
    return temp, tmax, tmin, wind
