"""Seasonal-naive baseline: repeat the value from one season earlier."""

from __future__ import annotations

import numpy as np

from ..errors import SeriesTooShort
from ..timeseries import HourlyIndex, Series

WEEK_SEASON = 168


def seasonal_naive_values(history: np.ndarray, season: int, steps: int) -> np.ndarray:
    history = np.asarray(history, dtype=np.float64)
    if len(history) < season:
        raise SeriesTooShort(
            f"history of {len(history)} hours is shorter than season {season}")
    reps = int(np.ceil(steps / season))
    return np.tile(history[-season:], reps)[:steps]


def seasonal_naive(series: Series, season: int = WEEK_SEASON,
                   steps: int = 24) -> Series:
    """Forecast `steps` hours past the end of `series` as y[t - season]."""
    values = seasonal_naive_values(series.values, season, steps)
    return Series(series.id, HourlyIndex(series.index.end, steps), values,
                  unit=series.unit)
