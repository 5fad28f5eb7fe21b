"""Cleaning and feature construction: household filtering, DST harmonization,
quality-flag interpolation, IQR outlier removal, min-max normalization,
cyclic calendar encoding and covariate assembly.

Note on the outlier fence: only a lower fence q25 - 1.5*(q75 - q25) is
applied. Outages show up as implausibly low readings; high demand peaks are
real load and must survive cleaning. Quantiles use linear interpolation
between order statistics (numpy's default).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import AllBad, CalendarGap, IndexMismatch, MalformedDay, ParseError
from .timeseries import (
    HOUR,
    QUALITY_OK,
    HierarchicalSet,
    HourlyIndex,
    Series,
)

MEAN_KWH_FLOOR = 0.01   # households below this mean consumption are dropped
TOTAL_KWH_FLOOR = 100.0  # ... or below this total consumption

CALENDAR_COLUMNS = (
    "hour_sin", "hour_cos",
    "dow_sin", "dow_cos",
    "doy_sin", "doy_cos",
    "holiday_weekend",
)


@dataclass(frozen=True)
class CleaningReport:
    """What a cleaning step removed, interpolated or dropped."""

    removed_count: int = 0
    removed_positions: tuple[int, ...] = ()
    interpolated_count: int = 0
    households_dropped: tuple[str, ...] = ()

    def __post_init__(self):
        if self.removed_count != len(self.removed_positions):
            raise ValueError("removed_count must match removed_positions length")


def filter_low_consumption(households: Sequence[Series]) -> tuple[list[Series], CleaningReport]:
    """Drop households with mean < 0.01 kWh or total < 100 kWh."""
    kept, dropped = [], []
    for s in households:
        if float(np.mean(s.values)) < MEAN_KWH_FLOOR or float(np.sum(s.values)) < TOTAL_KWH_FLOOR:
            dropped.append(s.id)
        else:
            kept.append(s)
    return kept, CleaningReport(households_dropped=tuple(dropped))


def harmonize_dst(records: Iterable[tuple], series_id: str = "series",
                  unit: str = "kWh") -> Series:
    """Reshape local-civil-time readings into uniform 24-hour days.

    `records` are (timestamp, value) or (timestamp, value, quality) tuples in
    chronological order; autumn transition days carry their repeated
    wall-clock hour twice in sequence, spring days are one hour short. The
    repeated hour keeps its first occurrence; the missing spring hour is
    linearly interpolated between its neighbours. Raises MalformedDay for
    any day with other than 23/24/25 readings (absent days included).
    """
    rows = []
    for rec in records:
        ts, value = rec[0], float(rec[1])
        quality = int(rec[2]) if len(rec) > 2 else QUALITY_OK
        rows.append((ts, value, quality))
    if not rows:
        raise MalformedDay("no records")

    by_day: dict[date, list[tuple[datetime, float, int]]] = {}
    for ts, value, quality in rows:
        by_day.setdefault(ts.date(), []).append((ts, value, quality))

    days = sorted(by_day)
    for prev, cur in zip(days, days[1:]):
        if cur != prev + timedelta(days=1):
            raise MalformedDay(f"{series_id}: day {prev + timedelta(days=1)} absent")

    n_days = len(days)
    values = np.full(n_days * 24, np.nan)
    quality = np.zeros(n_days * 24, dtype=np.uint8)
    for d, day in enumerate(days):
        recs = by_day[day]
        if len(recs) == 25:
            seen = set()
            kept = []
            for ts, value, q in recs:
                if ts.hour in seen:
                    continue  # drop the second pass through the repeated hour
                seen.add(ts.hour)
                kept.append((ts, value, q))
            recs = kept
        if not 23 <= len(recs) <= 24:
            raise MalformedDay(
                f"{series_id}: {day} has {len(by_day[day])} readings")
        hours = [ts.hour for ts, _, _ in recs]
        if len(set(hours)) != len(hours):
            raise MalformedDay(f"{series_id}: {day} repeats an hour twice over")
        for ts, value, q in recs:
            values[d * 24 + ts.hour] = value
            quality[d * 24 + ts.hour] = q

    gaps = np.isnan(values)
    if gaps.any():
        known = np.flatnonzero(~gaps)
        if known.size == 0:
            raise MalformedDay(f"{series_id}: no readings at all")
        positions = np.flatnonzero(gaps)
        values[positions] = np.interp(positions, known, values[known])
        quality[positions] = QUALITY_OK

    start = datetime(days[0].year, days[0].month, days[0].day)
    return Series(series_id, HourlyIndex(start, len(values)), values, quality,
                  unit=unit)


def interpolate_flagged(series: Series) -> tuple[Series, CleaningReport]:
    """Replace non-ok values by linear interpolation between ok neighbours.

    Leading/trailing bad runs take the nearest ok value. All flags are ok
    afterwards. Raises AllBad when no ok value exists.
    """
    ok = series.quality == QUALITY_OK
    if ok.all():
        return series, CleaningReport()
    if not ok.any():
        raise AllBad(f"series {series.id!r} has no ok-flagged value")
    bad = np.flatnonzero(~ok)
    good = np.flatnonzero(ok)
    values = series.values.copy()
    values[bad] = np.interp(bad, good, values[good])
    quality = np.zeros(len(series), dtype=np.uint8)
    return series.with_values(values, quality), CleaningReport(
        interpolated_count=int(bad.size))


def iqr_clean(series: Series) -> tuple[Series, CleaningReport]:
    """Remove implausibly low values (outages) below the lower IQR fence.

    Values strictly below q25 - 1.5*(q75 - q25) are removed and linearly
    interpolated from the surviving values.
    """
    if len(series) < 4:
        raise ValueError(f"series {series.id!r} too short for quantiles")
    q25, q75 = np.quantile(series.values, [0.25, 0.75])
    fence = q25 - 1.5 * (q75 - q25)
    removed = np.flatnonzero(series.values < fence)
    if removed.size == 0:
        return series, CleaningReport()
    kept = np.flatnonzero(series.values >= fence)
    values = series.values.copy()
    values[removed] = np.interp(removed, kept, values[kept])
    report = CleaningReport(
        removed_count=int(removed.size),
        removed_positions=tuple(int(i) for i in removed),
        interpolated_count=int(removed.size),
    )
    return series.with_values(values), report


def iqr_clean_hierarchy(hset: HierarchicalSet) -> tuple[HierarchicalSet, dict[str, CleaningReport]]:
    """IQR-clean every substation, then rebuild the grid sum."""
    from .timeseries import rebuild_grid

    cleaned, reports = [], {}
    for s in hset.substations:
        out, report = iqr_clean(s)
        cleaned.append(out)
        reports[s.id] = report
    return rebuild_grid(HierarchicalSet(hset.grid, tuple(cleaned))), reports


# --- calendar features ---

@dataclass(frozen=True)
class HolidayCalendar:
    """Public holidays plus the date span the calendar is valid for."""

    dates: frozenset[date]
    coverage_start: date
    coverage_end: date

    @classmethod
    def from_csv(cls, path) -> "HolidayCalendar":
        """Load `date,name` rows; coverage spans the listed years."""
        path = Path(path)
        try:
            with path.open(newline="", encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise ParseError(f"cannot read file: {exc}", path=path) from exc
        if not rows or [c.strip().lower() for c in rows[0]] != ["date", "name"]:
            raise ParseError("expected header date,name", path=path, row=1)
        dates = set()
        for rix, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                dates.add(date.fromisoformat(row[0].strip()))
            except ValueError:
                raise ParseError(f"bad date {row[0]!r}", path=path, row=rix,
                                 column="date")
        if not dates:
            raise ParseError("no holiday rows", path=path)
        years = sorted({d.year for d in dates})
        return cls(frozenset(dates),
                   date(years[0], 1, 1), date(years[-1], 12, 31))

    @classmethod
    def empty(cls, start: date, end: date) -> "HolidayCalendar":
        """No public holidays; weekend flags only."""
        return cls(frozenset(), start, end)

    def covers(self, day: date) -> bool:
        return self.coverage_start <= day <= self.coverage_end

    def is_holiday(self, day: date) -> bool:
        return day in self.dates


def encode_calendar(index: HourlyIndex,
                    holiday_calendar: HolidayCalendar) -> np.ndarray:
    """Cyclic hour/day-of-week/day-of-year encodings plus a holiday-or-weekend flag.

    Returns an (hours x 7) matrix with columns CALENDAR_COLUMNS. Day-of-year
    uses a fixed 365-day cycle; the 366th day of leap years shares the
    day-365 phase. Raises CalendarGap when the calendar's coverage does not
    span the index.
    """
    first, last = index.start.date(), index.last.date()
    if not (holiday_calendar.covers(first) and holiday_calendar.covers(last)):
        raise CalendarGap(
            f"holiday calendar covers {holiday_calendar.coverage_start}.."
            f"{holiday_calendar.coverage_end} but index spans {first}..{last}")

    out = np.empty((index.length, len(CALENDAR_COLUMNS)))
    day_flags: dict[date, float] = {}
    for i, ts in enumerate(index.timestamps()):
        hour_angle = 2 * np.pi * ts.hour / 24.0
        dow_angle = 2 * np.pi * ts.weekday() / 7.0
        doy = min(ts.timetuple().tm_yday, 365)
        doy_angle = 2 * np.pi * (doy - 1) / 365.0
        day = ts.date()
        flag = day_flags.get(day)
        if flag is None:
            flag = 1.0 if (ts.weekday() >= 5 or holiday_calendar.is_holiday(day)) else 0.0
            day_flags[day] = flag
        out[i] = (np.sin(hour_angle), np.cos(hour_angle),
                  np.sin(dow_angle), np.cos(dow_angle),
                  np.sin(doy_angle), np.cos(doy_angle), flag)
    return out


# --- normalization ---

@dataclass(frozen=True)
class Normalizer:
    """Per-feature min-max scaler fitted on training data only.

    Constant features pass through unscaled and are flagged in
    `constant`; test values may map outside [0, 1].
    """

    names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    constant: np.ndarray
    method: str = "minmax"

    def to_jsonable(self) -> dict:
        return {
            "method": self.method,
            "names": list(self.names),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
            "constant": [bool(v) for v in self.constant],
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "Normalizer":
        return cls(tuple(data["names"]), np.array(data["mins"]),
                   np.array(data["maxs"]), np.array(data["constant"], dtype=bool),
                   data["method"])


def fit_normalizer(train_features: np.ndarray,
                   names: Sequence[str]) -> Normalizer:
    """Fit per-column min/max on the training split."""
    x = np.asarray(train_features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != len(names):
        raise ValueError(f"{x.shape[1]} columns but {len(names)} names")
    mins = x.min(axis=0)
    maxs = x.max(axis=0)
    constant = maxs <= mins
    return Normalizer(tuple(names), mins, maxs, constant)


def apply_normalizer(norm: Normalizer, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[1] != len(norm.names):
        raise ValueError(f"expected {len(norm.names)} columns, got {x.shape[1]}")
    span = np.where(norm.constant, 1.0, norm.maxs - norm.mins)
    shift = np.where(norm.constant, 0.0, norm.mins)
    out = (x - shift) / span
    return out[:, 0] if squeeze else out


def invert_normalizer(norm: Normalizer, features: np.ndarray) -> np.ndarray:
    y = np.asarray(features, dtype=np.float64)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    if y.shape[1] != len(norm.names):
        raise ValueError(f"expected {len(norm.names)} columns, got {y.shape[1]}")
    span = np.where(norm.constant, 1.0, norm.maxs - norm.mins)
    shift = np.where(norm.constant, 0.0, norm.mins)
    out = y * span + shift
    return out[:, 0] if squeeze else out


# --- covariate assembly ---

@dataclass(frozen=True)
class CovariateSchema:
    """Named columns per horizon: past-known, future-known, static."""

    past: tuple[str, ...]
    future: tuple[str, ...]
    static: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for group in (self.past, self.future, self.static):
            for name in group:
                if name in seen:
                    raise ValueError(f"column {name!r} appears in two horizons")
                seen.add(name)

    def to_jsonable(self) -> dict:
        return {"past": list(self.past), "future": list(self.future),
                "static": list(self.static)}

    @classmethod
    def from_jsonable(cls, data: dict) -> "CovariateSchema":
        return cls(tuple(data["past"]), tuple(data["future"]), tuple(data["static"]))


@dataclass(frozen=True)
class CovariateFrame:
    """Full-span feature matrices for one target series.

    past_known columns may only be read up to the forecast origin;
    future_known columns are available over the horizon as well. The
    window builders in the model layer enforce that rule.
    """

    series_id: str
    index: HourlyIndex
    past_known: np.ndarray    # (hours, P); column 0 is the target itself
    future_known: np.ndarray  # (hours, F)
    static: np.ndarray        # () or (1,) embedding index
    schema: CovariateSchema

    def __post_init__(self):
        n = self.index.length
        if self.past_known.shape != (n, len(self.schema.past)):
            raise ValueError("past_known shape does not match schema")
        if self.future_known.shape != (n, len(self.schema.future)):
            raise ValueError("future_known shape does not match schema")
        if self.static.shape != (len(self.schema.static),):
            raise ValueError("static shape does not match schema")

    @property
    def target(self) -> np.ndarray:
        return self.past_known[:, 0]


def assemble_covariates(hset: HierarchicalSet,
                        temperature: Series,
                        incidence: Series | None,
                        holiday_calendar: HolidayCalendar,
                        level: Literal["grid", "substation"]) -> dict[str, CovariateFrame]:
    """Build one CovariateFrame per target series (Table-2 style layout).

    past-known: consumption (and incidence when present); future-known:
    calendar encodings plus temperature; static: the grid node index, only
    at substation level.
    """
    targets = [hset.grid] if level == "grid" else list(hset.substations)
    if not targets:
        raise IndexMismatch("no target series")
    index = targets[0].index
    for t in targets[1:]:
        if t.index != index:
            raise IndexMismatch(f"target {t.id!r} not aligned with {targets[0].id!r}")
    if temperature is None:
        raise IndexMismatch("temperature series is required (future-known input)")
    if temperature.index != index:
        raise IndexMismatch("temperature not aligned with targets")
    if incidence is not None and incidence.index != index:
        raise IndexMismatch("incidence not aligned with targets")

    calendar = encode_calendar(index, holiday_calendar)
    future = np.column_stack([calendar, temperature.values])
    future_names = CALENDAR_COLUMNS + ("temperature",)

    past_names: tuple[str, ...] = ("consumption",)
    if incidence is not None:
        past_names = past_names + ("incidence",)
    static_names: tuple[str, ...] = ("node_id",) if level == "substation" else ()
    schema = CovariateSchema(past_names, future_names, static_names)

    frames = {}
    for node_idx, target in enumerate(targets):
        cols = [target.values]
        if incidence is not None:
            cols.append(incidence.values)
        past = np.column_stack(cols)
        static = (np.array([float(node_idx)]) if level == "substation"
                  else np.empty(0))
        frames[target.id] = CovariateFrame(
            series_id=target.id, index=index, past_known=past,
            future_known=future, static=static, schema=schema)
    return frames
