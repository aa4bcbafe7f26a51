"""Time-series containers, preprocessing, and sample correlation estimators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import CsvParseError, DegenerateVarianceError, InsufficientDataError

__all__ = [
    "TimeSeriesMatrix",
    "LaggedCorrelation",
    "remove_climatology",
    "running_mean",
    "lagged_correlation",
    "forward_diff_covariances",
    "read_series_csv",
    "write_series_csv",
]


@dataclass
class TimeSeriesMatrix:
    """n state variables sampled at a uniform interval dt.

    data has shape (n, T). t0_phase records the phase of the first sample
    within the seasonal period so trimming operations keep climatology
    removal aligned.
    """

    data: np.ndarray
    dt: float = 1.0
    t0_phase: int = 0

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.ndim != 2:
            raise ValueError("data must be a 2-d array of shape (n, T)")
        if self.data.shape[1] < 2:
            raise InsufficientDataError("need at least 2 samples")
        if not np.isfinite(self.data).all():
            raise ValueError("data contains NaN or Inf samples")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def n_vars(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def demeaned(self) -> "TimeSeriesMatrix":
        """Subtract each row's sample mean."""
        return replace(self, data=self.data - self.data.mean(axis=1, keepdims=True))

    def normalized(self) -> "TimeSeriesMatrix":
        """Scale each row to unit sample standard deviation."""
        sd = self.data.std(axis=1)
        if np.any(sd <= 0):
            raise DegenerateVarianceError("cannot normalize a zero-variance row")
        return replace(self, data=self.data / sd[:, None])


@dataclass
class LaggedCorrelation:
    """Sample (or model) correlation function K(s) on a set of lags.

    lags are times in ascending order starting at 0, mats[k] estimates
    <x(t + lags[k]) x(t)^T>, and cov is the symmetrized zero-lag matrix.
    dt is the grid step when the lags are a uniform grid, else None.
    """

    lags: np.ndarray
    mats: np.ndarray
    cov: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=float)
        self.mats = np.asarray(self.mats, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.lags.ndim != 1 or self.mats.ndim != 3 or len(self.lags) != len(self.mats):
            raise ValueError("lags and mats must align as (m,) and (m, n, n)")
        if len(self.lags) == 0 or self.lags[0] < 0.0 or np.any(np.diff(self.lags) <= 0):
            raise ValueError("lags must be nonnegative and strictly increasing")
        if not (np.isfinite(self.mats).all() and np.isfinite(self.cov).all()):
            raise ValueError("correlation matrices contain NaN or Inf")
        c_scale = max(float(np.max(np.abs(self.cov))), 1.0)
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-12 * c_scale:
            raise ValueError("zero-lag covariance must be symmetric")
        if self.dt is None and len(self.lags) > 1:
            steps = np.diff(self.lags)
            if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                self.dt = float(steps[0])

    @property
    def n_vars(self) -> int:
        return self.mats.shape[1]

    @property
    def max_lag(self) -> float:
        return float(self.lags[-1])

    def lag_index(self, lag_time: float) -> int:
        """Index of lag_time in the lag set; raises if absent."""
        hits = np.flatnonzero(np.isclose(self.lags, lag_time, rtol=1e-9, atol=1e-12))
        if len(hits) != 1:
            raise ValueError(f"lag {lag_time} is not on the lag grid {self.lags}")
        return int(hits[0])

    def at(self, lag_time: float) -> np.ndarray:
        return self.mats[self.lag_index(lag_time)]


def remove_climatology(x: TimeSeriesMatrix, period: int) -> TimeSeriesMatrix:
    """Subtract from every sample the mean of its phase class (t mod period)."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if period > x.n_samples:
        raise InsufficientDataError(
            f"period {period} exceeds series length {x.n_samples}"
        )
    out = x.data.copy()
    phases = (x.t0_phase + np.arange(x.n_samples)) % period
    for p in range(period):
        sel = phases == p
        if sel.any():
            out[:, sel] -= out[:, sel].mean(axis=1, keepdims=True)
    return replace(x, data=out)


def running_mean(x: TimeSeriesMatrix, w: int) -> TimeSeriesMatrix:
    """Centered moving average of odd width w; endpoints trimmed."""
    if w < 1 or w % 2 == 0:
        raise ValueError(f"window width must be odd and positive, got {w}")
    if w > x.n_samples:
        raise InsufficientDataError(f"window {w} exceeds series length {x.n_samples}")
    if w == 1:
        return replace(x, data=x.data.copy())
    smoothed = np.lib.stride_tricks.sliding_window_view(x.data, w, axis=1).mean(axis=-1)
    # first output sample sits (w-1)/2 steps later in the seasonal cycle
    return replace(x, data=smoothed, t0_phase=x.t0_phase + (w - 1) // 2)


def lagged_correlation(x: TimeSeriesMatrix, L: int) -> LaggedCorrelation:
    """Sample correlation function K(s), s = 0..L samples, rows centered first.

    K(s)_ij = (1/(T-s)) sum_t x_i(t+s) x_j(t); the zero-lag matrix is
    symmetrized to serve as the covariance constraint in the fits.
    """
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L >= x.n_samples:
        raise InsufficientDataError(f"need more than {L} samples, have {x.n_samples}")
    d = x.data - x.data.mean(axis=1, keepdims=True)
    T = d.shape[1]
    n = d.shape[0]
    mats = np.empty((L + 1, n, n))
    for s in range(L + 1):
        mats[s] = d[:, s:] @ d[:, : T - s].T / (T - s)
    mats[0] = 0.5 * (mats[0] + mats[0].T)
    return LaggedCorrelation(
        lags=np.arange(L + 1) * x.dt, mats=mats, cov=mats[0].copy(), dt=x.dt
    )


def forward_diff_covariances(x: TimeSeriesMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Covariances of the state and its forward-difference derivative.

    Returns (C, Cd) where Cd[k, i] is the covariance of x_k with
    xdot_i = (x_i(t+dt) - x_i(t))/dt.  Both use population covariances over
    the trimmed index range t = 0..T-2 so they cover identical samples.
    """
    if x.n_samples < 3:
        raise InsufficientDataError("need at least 3 samples for a forward difference")
    d = x.data
    xd = (d[:, 1:] - d[:, :-1]) / x.dt
    xs = d[:, :-1]
    xs_c = xs - xs.mean(axis=1, keepdims=True)
    xd_c = xd - xd.mean(axis=1, keepdims=True)
    m = xs.shape[1]
    C = xs_c @ xs_c.T / m
    Cd = xs_c @ xd_c.T / m
    return 0.5 * (C + C.T), Cd


def read_series_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Read a `time,var1,...,varn` CSV; returns (names, times, data[n, T])."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0].lower() != "time":
            raise CsvParseError(
                f"{path}: header must be 'time,var1,...', got {header!r}"
            )
        ncol = len(header)
        times, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != ncol:
                raise CsvParseError(
                    f"{path}: row {lineno}: expected {ncol} columns, got {len(row)}"
                )
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise CsvParseError(f"{path}: row {lineno}: {exc}") from None
            times.append(vals[0])
            rows.append(vals[1:])
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float).T
    return header[1:], np.asarray(times, dtype=float), data


def write_series_csv(path, ts: TimeSeriesMatrix, names: list[str] | None = None) -> None:
    """Write a TimeSeriesMatrix in the standard `time,var...` format."""
    names = names if names is not None else [f"var{i + 1}" for i in range(ts.n_vars)]
    if len(names) != ts.n_vars:
        raise ValueError(f"got {len(names)} names for {ts.n_vars} variables")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time"] + list(names))
        for k in range(ts.n_samples):
            writer.writerow(
                [format(k * ts.dt, ".17g")]
                + [format(v, ".17g") for v in ts.data[:, k]]
            )
