"""Reference forecasts: 24-hour persistence and a two-quantile network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeriesFrame, WindowedDataset
from .errors import ContractError
from .metrics import mpiw, picp
from .uncertainty import deterministic_predict

LAG_HOURS = 24


def _hours(timestamps) -> np.ndarray:
    return np.asarray(timestamps, dtype="datetime64[s]").astype("datetime64[h]").astype(np.int64)


def _lookup(frame: TimeSeriesFrame, column: str, hours: np.ndarray) -> np.ndarray:
    """Value of ``column`` at each absolute hour, NaN when the row is absent."""
    have = _hours(frame.timestamps)
    col = frame.columns[column]
    pos = np.searchsorted(have, hours)
    pos_c = np.clip(pos, 0, len(have) - 1)
    found = (pos < len(have)) & (have[pos_c] == hours)
    return np.where(found, col[pos_c], np.nan)


def persistence_forecast(frame: TimeSeriesFrame, column: str, timestamps=None) -> np.ndarray:
    """Forecast each timestamp with the value observed 24 hours earlier.

    Unavailable sources (before the frame starts, or missing) give NaN.
    """
    if column not in frame.columns:
        raise ContractError(f"unknown column {column!r}")
    ts = frame.timestamps if timestamps is None else timestamps
    return _lookup(frame, column, _hours(ts) - LAG_HOURS)


def persistence_for_windows(frame: TimeSeriesFrame, dataset: WindowedDataset) -> np.ndarray:
    """Persistence forecasts aligned with ``dataset.targets`` (N, horizon, n_targets)."""
    lead = np.arange(dataset.horizon)
    hours = _hours(dataset.anchors)[:, None] + lead[None, :] - LAG_HOURS
    return np.stack([_lookup(frame, c, hours) for c in dataset.target_names], axis=2)


def pinball(y, pred, q: float) -> float:
    """Mean pinball loss ``q (y-pred)^+ + (1-q) (pred-y)^+``."""
    if not 0.0 < q < 1.0:
        raise ContractError(f"quantile must be in (0, 1), got {q}")
    d = np.asarray(y, dtype=np.float64) - np.asarray(pred, dtype=np.float64)
    return float(np.mean(q * np.maximum(d, 0.0) + (1 - q) * np.maximum(-d, 0.0)))


@dataclass
class QuantileForecast:
    lower: np.ndarray
    upper: np.ndarray
    quantiles: tuple = (0.05, 0.95)
    repaired: int = 0

    @classmethod
    def repaired_from(cls, lower, upper, quantiles=(0.05, 0.95)) -> "QuantileForecast":
        """Swap crossed pairs so that lower <= upper everywhere."""
        lo = np.asarray(lower, dtype=np.float64)
        hi = np.asarray(upper, dtype=np.float64)
        crossed = lo > hi
        return cls(np.where(crossed, hi, lo), np.where(crossed, lo, hi), tuple(quantiles),
                   int(crossed.sum()))


def quantile_predict(model, x, target_mean=None, target_std=None, n_targets: int | None = None):
    """Repaired quantile bounds from a trained quantile network, optionally in raw units."""
    lower, upper = deterministic_predict(model, x)
    if target_mean is not None:
        reps = lower.shape[-1] // n_targets
        m = np.tile(np.asarray(target_mean, dtype=float), reps)
        s = np.tile(np.asarray(target_std, dtype=float), reps)
        lower, upper = lower * s + m, upper * s + m
    return QuantileForecast.repaired_from(lower, upper, model.quantiles)


def quantile_interval_eval(forecast: QuantileForecast, y) -> tuple[float, float]:
    y = np.asarray(y, dtype=np.float64)
    return picp(y, forecast.lower, forecast.upper), mpiw(forecast.lower, forecast.upper)
