"""Hourly series containers, alignment, splitting, window enumeration and
bottom-up aggregation.

All series live on a uniform hourly grid of naive timestamps (one internal
clock, no DST). Calendar semantics (weeks, holidays) are applied against a
declared zone by the preprocessing layer; by the time data reaches these
containers every day has exactly 24 hours.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Iterator, Literal, Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyHierarchy,
    EmptyOverlap,
    IndexMismatch,
)

HOUR = timedelta(hours=1)

# Per-hour quality flags. Non-ok values are carried until interpolation
# resolves them (see preprocess.interpolate_flagged).
QUALITY_OK = 0
QUALITY_PROVISIONAL = 1
QUALITY_DEFECTIVE = 2
QUALITY_INCORRECT = 3
QUALITY_MISSING = 4

QUALITY_NAMES = {
    QUALITY_OK: "ok",
    QUALITY_PROVISIONAL: "provisional",
    QUALITY_DEFECTIVE: "defective",
    QUALITY_INCORRECT: "incorrect",
    QUALITY_MISSING: "missing",
}
QUALITY_CODES = {name: code for code, name in QUALITY_NAMES.items()}


def _check_hour_aligned(ts: datetime) -> None:
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError(f"timestamp not hour-aligned: {ts!r}")


@dataclass(frozen=True)
class HourlyIndex:
    """A contiguous run of hourly timestamps: start plus a length in hours."""

    start: datetime
    length: int

    def __post_init__(self):
        _check_hour_aligned(self.start)
        if self.length < 0:
            raise ValueError("index length must be non-negative")

    @property
    def end(self) -> datetime:
        """First timestamp after the index (exclusive)."""
        return self.start + HOUR * self.length

    @property
    def last(self) -> datetime:
        return self.start + HOUR * (self.length - 1)

    def timestamps(self) -> Iterator[datetime]:
        for i in range(self.length):
            yield self.start + HOUR * i

    def at(self, position: int) -> datetime:
        if not 0 <= position < self.length:
            raise IndexError(position)
        return self.start + HOUR * position

    def position(self, ts: datetime) -> int:
        """Offset of `ts` within the index; raises KeyError if outside."""
        _check_hour_aligned(ts)
        delta = ts - self.start
        hours = delta // HOUR
        if delta != HOUR * hours or not 0 <= hours < self.length:
            raise KeyError(ts)
        return hours

    def contains_span(self, start: datetime, length: int) -> bool:
        try:
            pos = self.position(start)
        except KeyError:
            return False
        return pos + length <= self.length

    def intersect(self, other: "HourlyIndex") -> "HourlyIndex":
        start = max(self.start, other.start)
        end = min(self.end, other.end)
        length = max(0, (end - start) // HOUR) if end > start else 0
        return HourlyIndex(start, int(length))

    def slice(self, offset: int, length: int) -> "HourlyIndex":
        if offset < 0 or length < 0 or offset + length > self.length:
            raise IndexError((offset, length))
        return HourlyIndex(self.start + HOUR * offset, length)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Series:
    """Hourly values with a declared unit and per-hour quality flags."""

    id: str
    index: HourlyIndex
    values: np.ndarray
    quality: np.ndarray = None  # type: ignore[assignment]
    unit: str = "kW"

    def __post_init__(self):
        values = _freeze(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if len(values) != self.index.length:
            raise ValueError(
                f"series {self.id!r}: {len(values)} values for index of "
                f"length {self.index.length}"
            )
        quality = self.quality
        if quality is None:
            quality = np.zeros(len(values), dtype=np.uint8)
        quality = _freeze(np.asarray(quality, dtype=np.uint8))
        if quality.shape != values.shape:
            raise ValueError("quality flags must match values in length")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "quality", quality)

    def __len__(self) -> int:
        return self.index.length

    def with_values(self, values: np.ndarray, quality: np.ndarray | None = None) -> "Series":
        return Series(self.id, self.index, values,
                      self.quality if quality is None else quality, self.unit)

    def slice(self, offset: int, length: int) -> "Series":
        return Series(self.id, self.index.slice(offset, length),
                      self.values[offset:offset + length],
                      self.quality[offset:offset + length], self.unit)

    def window(self, start: datetime, length: int) -> np.ndarray:
        """Values for `length` hours starting at `start`."""
        pos = self.index.position(start)
        if pos + length > len(self):
            raise KeyError((start, length))
        return self.values[pos:pos + length]


@dataclass(frozen=True)
class HierarchicalSet:
    """Grid-level series plus its substation members."""

    grid: Series
    substations: tuple[Series, ...]
    membership: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "substations", tuple(self.substations))
        if not self.membership:
            object.__setattr__(
                self, "membership",
                {s.id: self.grid.id for s in self.substations})

    def substation_ids(self) -> list[str]:
        return [s.id for s in self.substations]


@dataclass(frozen=True)
class SplitSpec:
    """Time-wise split: either a train fraction or an explicit boundary.

    In date mode the boundary timestamp is the first test hour.
    """

    mode: Literal["fraction", "date"]
    fraction: float | None = None
    boundary: datetime | None = None

    def __post_init__(self):
        if self.mode == "fraction":
            if self.fraction is None or not 0.0 < self.fraction < 1.0:
                raise ValueError("fraction mode requires 0 < fraction < 1")
        elif self.mode == "date":
            if self.boundary is None:
                raise ValueError("date mode requires a boundary timestamp")
            _check_hour_aligned(self.boundary)
        else:
            raise ValueError(f"unknown split mode {self.mode!r}")

    @classmethod
    def by_fraction(cls, fraction: float) -> "SplitSpec":
        return cls("fraction", fraction=fraction)

    @classmethod
    def at(cls, boundary: datetime) -> "SplitSpec":
        return cls("date", boundary=boundary)


@dataclass(frozen=True)
class EvalWindow:
    """One evaluation case: k input hours immediately preceding a target span."""

    input_start: datetime
    input_length: int
    target_start: datetime
    target_length: int
    kind: Literal["day", "week"]

    def __post_init__(self):
        if self.input_start + HOUR * self.input_length != self.target_start:
            raise ValueError("input range must immediately precede target range")
        expected = 24 if self.kind == "day" else 168
        if self.target_length != expected:
            raise ValueError(f"{self.kind} window must target {expected} hours")

    @property
    def target_end(self) -> datetime:
        return self.target_start + HOUR * self.target_length


def align(series_list: Sequence[Series]) -> list[Series]:
    """Truncate all series to their common hourly range.

    Raises EmptyOverlap when the intersection of the indices is empty.
    """
    if not series_list:
        return []
    common = series_list[0].index
    for s in series_list[1:]:
        common = common.intersect(s.index)
    if common.length == 0:
        raise EmptyOverlap(
            "series have no common time range: "
            + ", ".join(f"{s.id}[{s.index.start}..{s.index.end})" for s in series_list))
    out = []
    for s in series_list:
        offset = s.index.position(common.start)
        out.append(s.slice(offset, common.length))
    return out


def time_split(series: Series, spec: SplitSpec) -> tuple[Series, Series]:
    """Split a series into a leading train part and a trailing test part."""
    n = len(series)
    if n < 2:
        raise DegenerateSplit(f"series {series.id!r} too short to split (length {n})")
    if spec.mode == "fraction":
        n_train = int(np.floor(spec.fraction * n))
    else:
        delta = spec.boundary - series.index.start
        n_train = delta // HOUR
    if n_train <= 0 or n_train >= n:
        raise DegenerateSplit(
            f"split leaves an empty side (train={n_train}, total={n})")
    return series.slice(0, n_train), series.slice(n_train, n - n_train)


def enumerate_eval_windows(test: Series, k: int,
                           kind: Literal["day", "week"]) -> list[EvalWindow]:
    """All complete-day (0h-23h) or complete-week (Mon-Sun) targets in `test`.

    Day windows stride by one day, week windows by seven (non-overlapping).
    The k input hours precede each target and may reach back before the test
    span; the caller supplies that history when forecasting.
    """
    if k < 1:
        raise ValueError("input window k must be >= 1")
    index = test.index
    if index.length == 0:
        return []
    if kind == "day":
        horizon, stride = 24, 24
        first = index.start
        if first.hour != 0:
            first = first.replace(hour=0) + timedelta(days=1)
    elif kind == "week":
        horizon, stride = 168, 168
        first = index.start
        if first.hour != 0:
            first = first.replace(hour=0) + timedelta(days=1)
        # advance to Monday
        first += timedelta(days=(7 - first.weekday()) % 7)
    else:
        raise ValueError(f"unknown window kind {kind!r}")

    windows = []
    start = first
    while start + HOUR * horizon <= index.end:
        windows.append(EvalWindow(
            input_start=start - HOUR * k,
            input_length=k,
            target_start=start,
            target_length=horizon,
            kind=kind,
        ))
        start += HOUR * stride
    return windows


def aggregate_bottom_up(substation_forecasts: Sequence[Series],
                        grid_id: str = "grid") -> Series:
    """Sum substation series hour by hour into one grid-level series."""
    if not substation_forecasts:
        raise EmptyHierarchy("no substation forecasts to aggregate")
    ref = substation_forecasts[0].index
    for s in substation_forecasts[1:]:
        if s.index != ref:
            raise IndexMismatch(
                f"series {s.id!r} index differs from {substation_forecasts[0].id!r}")
    total = np.sum([s.values for s in substation_forecasts], axis=0)
    return Series(grid_id, ref, total, unit=substation_forecasts[0].unit)


def rebuild_grid(hset: HierarchicalSet) -> HierarchicalSet:
    """Replace the grid series by the exact hourly sum of the substations."""
    if not hset.substations:
        raise EmptyHierarchy("hierarchical set has no substations")
    grid = aggregate_bottom_up(hset.substations, grid_id=hset.grid.id)
    return replace(hset, grid=grid)
