"""Dataset readers and the synthetic hierarchical generator.

File formats
------------
* Load (wide):        header ``zone_id,year,month,day,h1,...,h24``
* Temperature (wide): header ``station_id,year,month,day,h1,...,h24``
* Household (long):   header ``household_id,timestamp,value_kwh,quality``
  with quality in {ok, provisional, defective, incorrect}
* Incidence (daily):  header ``date,incidence`` with ISO dates

All files are UTF-8, comma-separated, dot-decimal. Readers refuse files
whose hourly continuity cannot be established instead of gap-filling;
the one exception is the daily incidence file, where gap days are
forward-filled (epidemic counts persist) with a warning.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    GapFillWarning,
    MissingZone,
    NonMonotonicTimestamps,
    ParseError,
    StationCoverageWarning,
)
from .timeseries import (
    HOUR,
    QUALITY_CODES,
    HierarchicalSet,
    HourlyIndex,
    Series,
    aggregate_bottom_up,
)

EXCLUDED_ZONE = 9  # industrial customer; always dropped on ingest

_WIDE_HOURS = [f"h{i}" for i in range(1, 25)]


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic hierarchical dataset."""

    n_substations: int = 8
    n_days: int = 90
    daily_amplitude: float = 10.0
    weekly_amplitude: float = 4.0
    temp_sensitivity: float = 0.8
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_substations < 1 or self.n_days < 1:
            raise ValueError("n_substations and n_days must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def _open_rows(path) -> list[list[str]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", path=path) from exc


def _check_header(rows, expected, path):
    if not rows:
        raise ParseError("empty file", path=path)
    header = [c.strip().lower() for c in rows[0]]
    if header != expected:
        raise ParseError(
            f"unexpected header {rows[0]!r}, want {','.join(expected)}",
            path=path, row=1)


def _parse_int(cell, path, row, col):
    try:
        return int(cell)
    except ValueError:
        raise ParseError(f"not an integer: {cell!r}", path=path, row=row, column=col)


def _parse_float(cell, path, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"not a number: {cell!r}", path=path, row=row, column=col)
    if math.isnan(value) or math.isinf(value):
        raise ParseError(f"non-finite value: {cell!r}", path=path, row=row, column=col)
    return value


def _parse_date(cells, path, row):
    y = _parse_int(cells[0], path, row, "year")
    m = _parse_int(cells[1], path, row, "month")
    d = _parse_int(cells[2], path, row, "day")
    try:
        return date(y, m, d)
    except ValueError:
        raise ParseError(f"invalid date {y}-{m}-{d}", path=path, row=row, column="day")


def _wide_days_to_series(sid, days, unit, path):
    """Turn {date: 24 floats} into a Series, requiring consecutive days."""
    ordered = sorted(days)
    prev = None
    for d in ordered:
        if prev is not None and d != prev + timedelta(days=1):
            raise ParseError(
                f"{sid}: days not consecutive ({prev} then {d})", path=path)
        prev = d
    values = np.concatenate([days[d] for d in ordered])
    start = datetime(ordered[0].year, ordered[0].month, ordered[0].day)
    return Series(sid, HourlyIndex(start, len(values)), values, unit=unit)


def read_gefc_load(path) -> HierarchicalSet:
    """Read a wide-format zonal load file into a hierarchical set.

    Zone 9 is always excluded (covered by an industrial customer); zone 4
    is retained. The grid series is the hourly sum of the kept zones.
    """
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, ["zone_id", "year", "month", "day"] + _WIDE_HOURS, path)

    zones: dict[int, dict[date, np.ndarray]] = {}
    for rix, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 28:
            raise ParseError(f"expected 28 cells, got {len(row)}", path=path, row=rix)
        zone = _parse_int(row[0], path, rix, "zone_id")
        if zone < 1:
            raise ParseError(f"zone_id must be >= 1, got {zone}",
                             path=path, row=rix, column="zone_id")
        day = _parse_date(row[1:4], path, rix)
        hours = np.array([
            _parse_float(row[4 + i], path, rix, _WIDE_HOURS[i]) for i in range(24)
        ])
        per_zone = zones.setdefault(zone, {})
        if day in per_zone:
            raise ParseError(f"duplicate day {day} for zone {zone}", path=path, row=rix)
        per_zone[day] = hours

    zones.pop(EXCLUDED_ZONE, None)
    if not zones:
        raise MissingZone(f"no usable zones in {path}")

    substations = []
    for zone in sorted(zones):
        substations.append(_wide_days_to_series(f"zone{zone}", zones[zone], "kW", path))

    ref = substations[0].index
    for s in substations[1:]:
        if s.index != ref:
            raise MissingZone(
                f"{s.id} covers [{s.index.start}..{s.index.end}) but "
                f"{substations[0].id} covers [{ref.start}..{ref.end})")

    grid = aggregate_bottom_up(substations, grid_id="grid")
    return HierarchicalSet(grid=grid, substations=tuple(substations))


def read_gefc_temperature(path) -> Series:
    """Average all weather stations into one hourly temperature series.

    Blank cells are treated as missing station-hours: the mean is taken
    over the stations that do report, with a warning.
    """
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, ["station_id", "year", "month", "day"] + _WIDE_HOURS, path)

    stations: dict[int, dict[datetime, float]] = {}
    for rix, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 28:
            raise ParseError(f"expected 28 cells, got {len(row)}", path=path, row=rix)
        station = _parse_int(row[0], path, rix, "station_id")
        day = _parse_date(row[1:4], path, rix)
        base = datetime(day.year, day.month, day.day)
        per_station = stations.setdefault(station, {})
        for i in range(24):
            cell = row[4 + i].strip()
            ts = base + HOUR * i
            if ts in per_station:
                raise ParseError(f"duplicate hour {ts} for station {station}",
                                 path=path, row=rix)
            if cell == "":
                continue
            per_station[ts] = _parse_float(cell, path, rix, _WIDE_HOURS[i])

    if not stations:
        raise ParseError("no station rows", path=path)

    all_hours = sorted({ts for per in stations.values() for ts in per})
    if not all_hours:
        raise ParseError("no temperature values", path=path)
    start, end = all_hours[0], all_hours[-1]
    length = (end - start) // HOUR + 1
    if len(all_hours) != length:
        raise ParseError("temperature hours are not contiguous", path=path)

    n_stations = len(stations)
    values = np.empty(length)
    short_hours = 0
    for i in range(length):
        ts = start + HOUR * i
        present = [per[ts] for per in stations.values() if ts in per]
        if not present:
            raise ParseError(f"no station reports hour {ts}", path=path)
        if len(present) < n_stations:
            short_hours += 1
        values[i] = float(np.mean(present))
    if short_hours:
        warnings.warn(
            f"{short_hours} hour(s) covered by fewer than {n_stations} stations; "
            "averaged over available stations",
            StationCoverageWarning, stacklevel=2)

    return Series("temperature", HourlyIndex(start, length), values, unit="degC")


def read_household_long(path) -> list[Series]:
    """Read long-format household readings, preserving quality flags."""
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, ["household_id", "timestamp", "value_kwh", "quality"], path)

    order: list[str] = []
    per_household: dict[str, list[tuple[datetime, float, int]]] = {}
    for rix, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 cells, got {len(row)}", path=path, row=rix)
        hid = row[0].strip()
        if not hid:
            raise ParseError("empty household_id", path=path, row=rix, column="household_id")
        try:
            ts = datetime.fromisoformat(row[1].strip())
        except ValueError:
            raise ParseError(f"bad timestamp {row[1]!r}", path=path, row=rix,
                             column="timestamp")
        if ts.minute or ts.second or ts.microsecond:
            raise ParseError(f"timestamp not hour-aligned: {row[1]!r}",
                             path=path, row=rix, column="timestamp")
        value = _parse_float(row[2], path, rix, "value_kwh")
        qname = row[3].strip().lower()
        if qname not in QUALITY_CODES:
            raise ParseError(f"unknown quality {row[3]!r}", path=path, row=rix,
                             column="quality")
        if hid not in per_household:
            order.append(hid)
        per_household.setdefault(hid, []).append((ts, value, QUALITY_CODES[qname]))

    out = []
    for hid in order:
        recs = per_household[hid]
        for (a, _, _), (b, _, _) in zip(recs, recs[1:]):
            if b <= a:
                raise NonMonotonicTimestamps(
                    f"household {hid}: {b} does not follow {a}")
            if b != a + HOUR:
                raise ParseError(
                    f"household {hid}: gap between {a} and {b}", path=path)
        start = recs[0][0]
        values = np.array([v for _, v, _ in recs])
        quality = np.array([q for _, _, q in recs], dtype=np.uint8)
        out.append(Series(hid, HourlyIndex(start, len(recs)), values, quality,
                          unit="kWh"))
    return out


def read_incidence(path) -> Series:
    """Expand a daily incidence file to hourly, forward-filling gap days."""
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, ["date", "incidence"], path)

    daily: list[tuple[date, float]] = []
    for rix, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 cells, got {len(row)}", path=path, row=rix)
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"bad date {row[0]!r}", path=path, row=rix, column="date")
        value = _parse_float(row[1], path, rix, "incidence")
        if daily and day <= daily[-1][0]:
            raise ParseError(f"dates not increasing at {day}", path=path, row=rix,
                             column="date")
        daily.append((day, value))
    if not daily:
        raise ParseError("no incidence rows", path=path)

    first, last = daily[0][0], daily[-1][0]
    n_days = (last - first).days + 1
    values = np.empty(n_days * 24)
    known = dict(daily)
    filled = 0
    current = daily[0][1]
    for i in range(n_days):
        day = first + timedelta(days=i)
        if day in known:
            current = known[day]
        else:
            filled += 1
        values[i * 24:(i + 1) * 24] = current
    if filled:
        warnings.warn(f"{filled} gap day(s) forward-filled in {path}",
                      GapFillWarning, stacklevel=2)

    start = datetime(first.year, first.month, first.day)
    return Series("incidence", HourlyIndex(start, len(values)), values, unit="count")


# --- synthetic data ---

SYNTH_START = datetime(2021, 1, 4)  # a Monday, so week windows line up
TEMP_REFERENCE = 12.0  # degC; load rises below this (heating-dominated)


def zone_numbers(n: int) -> list[int]:
    """Zone ids 1..n skipping the always-excluded industrial zone."""
    out, z = [], 1
    while len(out) < n:
        if z != EXCLUDED_ZONE:
            out.append(z)
        z += 1
    return out


def synthetic_temperature(n_days: int) -> Series:
    """Slow annual sinusoid plus a daily cycle, starting in winter."""
    t = np.arange(n_days * 24, dtype=np.float64)
    hour_of_day = t % 24
    annual = -10.0 * np.cos(2 * np.pi * t / 8760.0)
    daily = -4.0 * np.cos(2 * np.pi * (hour_of_day - 14.0) / 24.0)
    values = 10.0 + annual + daily
    return Series("temperature", HourlyIndex(SYNTH_START, len(t)), values,
                  unit="degC")


def generate_synthetic(config: SyntheticConfig) -> tuple[HierarchicalSet, Series]:
    """Deterministic synthetic substations plus a matching temperature series.

    Each substation is a base level plus daily (period 24) and weekly
    (period 168) sinusoids with per-substation random amplitude jitter and
    phase, a linear heating response to temperature, and Gaussian noise.
    """
    rng = np.random.default_rng(config.seed)
    temperature = synthetic_temperature(config.n_days)
    n = config.n_days * 24
    t = np.arange(n, dtype=np.float64)
    temp_term = config.temp_sensitivity * (TEMP_REFERENCE - temperature.values)

    substations = []
    for zone in zone_numbers(config.n_substations):
        base = rng.uniform(40.0, 80.0)
        daily_amp = config.daily_amplitude * rng.uniform(0.6, 1.4)
        weekly_amp = config.weekly_amplitude * rng.uniform(0.6, 1.4)
        daily_phase = rng.uniform(0.0, 2 * np.pi)
        weekly_phase = rng.uniform(0.0, 2 * np.pi)
        noise = rng.normal(0.0, config.noise_std, n) if config.noise_std > 0 else 0.0
        values = (
            base
            + daily_amp * np.sin(2 * np.pi * t / 24.0 + daily_phase)
            + weekly_amp * np.sin(2 * np.pi * t / 168.0 + weekly_phase)
            + temp_term
            + noise
        )
        substations.append(Series(f"zone{zone}", temperature.index, values, unit="kW"))

    grid = aggregate_bottom_up(substations, grid_id="grid")
    return HierarchicalSet(grid=grid, substations=tuple(substations)), temperature


# --- writers (used by the CLI and round-trip tests) ---

def _fmt(value: float) -> str:
    return repr(float(value))


def write_gefc_load(hset: HierarchicalSet, path) -> None:
    """Write substations in the wide zonal format (ids must be 'zone<N>')."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["zone_id", "year", "month", "day"] + _WIDE_HOURS)
        for s in hset.substations:
            zone = int(s.id.removeprefix("zone"))
            _write_wide_rows(w, zone, s)


def write_gefc_temperature(series: Series, path, station_id: int = 1) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["station_id", "year", "month", "day"] + _WIDE_HOURS)
        _write_wide_rows(w, station_id, series)


def _write_wide_rows(writer, row_id: int, series: Series) -> None:
    if series.index.start.hour != 0 or len(series) % 24:
        raise ValueError(f"{series.id}: wide format needs whole days from 0h")
    for d in range(len(series) // 24):
        day = (series.index.start + timedelta(days=d)).date()
        vals = series.values[d * 24:(d + 1) * 24]
        writer.writerow([row_id, day.year, day.month, day.day]
                        + [_fmt(v) for v in vals])


def write_household_long(households: list[Series], path) -> None:
    from .timeseries import QUALITY_NAMES
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["household_id", "timestamp", "value_kwh", "quality"])
        for s in households:
            for i, ts in enumerate(s.index.timestamps()):
                w.writerow([s.id, ts.isoformat(sep=" "),
                            _fmt(s.values[i]), QUALITY_NAMES[int(s.quality[i])]])


def write_incidence(series: Series, path) -> None:
    """Write the daily values of an hourly-expanded incidence series."""
    if series.index.start.hour != 0 or len(series) % 24:
        raise ValueError("incidence series must cover whole days from 0h")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "incidence"])
        for d in range(len(series) // 24):
            day = (series.index.start + timedelta(days=d)).date()
            w.writerow([day.isoformat(), _fmt(series.values[d * 24])])
