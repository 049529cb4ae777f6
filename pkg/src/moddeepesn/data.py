"""Benchmark series: Mackey-Glass generation, CSV loading and forecast splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Real-valued samples, shape ``(T,)`` or ``(T, n_features)``."""

    values: np.ndarray
    dt: float = 1.0
    name: str = "series"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2) or values.shape[0] == 0:
            raise DataError(f"time series {self.name!r} must be a nonempty 1-D or 2-D array")
        if not np.all(np.isfinite(values)):
            raise DataError(f"time series {self.name!r} contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]


@dataclass(frozen=True)
class Scaler:
    """Affine map ``x -> (x - offset) * scale`` onto [0, 1] of the fitted range."""

    scale: float
    offset: float

    @classmethod
    def fit(cls, values) -> "Scaler":
        values = np.asarray(values, dtype=float)
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            raise DataError("cannot normalise a constant series")
        return cls(scale=1.0 / (hi - lo), offset=lo)

    def transform(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.offset) * self.scale

    def inverse(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float) / self.scale + self.offset


@dataclass(frozen=True, eq=False)
class ForecastSplit:
    """Contiguous train/test segments with targets shifted ``horizon`` steps ahead.

    Arrays hold normalised values when ``scaler`` is set; use
    :meth:`to_original` before computing metrics.
    """

    train_in: np.ndarray
    train_target: np.ndarray
    test_in: np.ndarray
    test_target: np.ndarray
    horizon: int
    washout: int
    scaler: Optional[Scaler] = None

    def to_original(self, values) -> np.ndarray:
        if self.scaler is None:
            return np.asarray(values, dtype=float)
        return self.scaler.inverse(values)


def gen_mackey_glass(
    n: int,
    tau: float = 17.0,
    dt: float = 1.0,
    a: float = 0.2,
    b: float = 0.1,
    p: float = 10.0,
    x0: float = 1.2,
    transient: int = 1000,
) -> TimeSeries:
    """Integrate the Mackey-Glass delay equation with classical RK4.

    ``dx/dt = a*x(t-tau) / (1 + x(t-tau)**p) - b*x(t)`` with constant history
    ``x0`` on ``[-tau, 0]``. Sample ``k`` of the result is ``x((transient + k) * dt)``.

    The delayed value is read from the stored grid without interpolation:
    ``x(t_n - tau)`` for the first two stages and ``x(t_n + dt - tau)`` for the
    last two.
    """
    if n <= 0:
        raise ConfigError(f"n must be positive, got {n}")
    if dt <= 0 or tau <= 0:
        raise ConfigError("tau and dt must be positive")
    ratio = tau / dt
    lag = int(round(ratio))
    if not math.isclose(ratio, lag, rel_tol=0, abs_tol=1e-9):
        raise ConfigError(f"tau/dt = {ratio} must be an integer")
    if transient < lag:
        raise ConfigError(f"transient ({transient}) must be >= tau/dt ({lag})")

    total = transient + n
    # x[i] holds x((i - lag) * dt); the first lag+1 entries are the constant history
    x = np.empty(total + lag)
    x[: lag + 1] = x0

    def rhs(current: float, delayed: float) -> float:
        return a * delayed / (1.0 + delayed**p) - b * current

    for i in range(lag, total + lag - 1):
        d_start = x[i - lag]
        d_end = x[i - lag + 1]
        k1 = rhs(x[i], d_start)
        k2 = rhs(x[i] + 0.5 * dt * k1, d_start)
        k3 = rhs(x[i] + 0.5 * dt * k2, d_end)
        k4 = rhs(x[i] + dt * k3, d_end)
        x[i + 1] = x[i] + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    return TimeSeries(x[lag + transient :], dt=dt, name="mackey-glass")


def load_csv_series(path, column: str) -> TimeSeries:
    """Read one numeric column of a CSV file with a header row."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        if column not in header:
            raise DataError(f"{path}: column {column!r} not in header {header}")
        idx = header.index(column)
        values = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= idx:
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, expected > {idx}")
            try:
                values.append(float(row[idx]))
            except ValueError:
                raise DataError(f"{path}: row {row_no}: non-numeric value {row[idx]!r}") from None
    if not values:
        raise DataError(f"{path} has no data rows")
    return TimeSeries(np.array(values), name=path.stem)


def save_csv_series(series: TimeSeries, path_or_file, column: str = "value") -> None:
    """Write ``series`` as CSV with a header row; accepts a path or an open text file."""
    if hasattr(path_or_file, "write"):
        _write_series(series, path_or_file, column)
        return
    with Path(path_or_file).open("w", newline="", encoding="utf-8") as fh:
        _write_series(series, fh, column)


def _write_series(series, fh, column):
    values = series.values.reshape(len(series), -1)
    writer = csv.writer(fh, lineterminator="\n")
    if values.shape[1] == 1:
        writer.writerow([column])
    else:
        writer.writerow([f"{column}{j}" for j in range(values.shape[1])])
    for row in values:
        writer.writerow([repr(float(v)) for v in row])


def make_split(
    series: TimeSeries,
    train_len: int,
    test_len: int,
    horizon: int,
    washout: int,
    normalize: bool = True,
) -> ForecastSplit:
    """Cut ``series`` into train and test segments for ``horizon``-step forecasting.

    The normalising scaler is fitted on the training inputs only.
    """
    if min(train_len, test_len) < 1 or horizon < 0 or washout < 0:
        raise ConfigError("train_len, test_len must be >= 1; horizon, washout >= 0")
    if train_len + test_len + horizon > len(series):
        raise DataError(
            f"series of length {len(series)} is too short for "
            f"{train_len} + {test_len} samples at horizon {horizon}"
        )
    if washout >= min(train_len, test_len):
        raise DataError(f"washout {washout} leaves no samples in a segment")
    v = series.values
    scaler = Scaler.fit(v[:train_len]) if normalize else None
    if scaler is not None:
        v = scaler.transform(v)
    end = train_len + test_len
    return ForecastSplit(
        train_in=v[:train_len],
        train_target=v[horizon : train_len + horizon],
        test_in=v[train_len:end],
        test_target=v[train_len + horizon : end + horizon],
        horizon=horizon,
        washout=washout,
        scaler=scaler,
    )
