from datetime import date, datetime, timedelta

import numpy as np
import pytest

from gridcast.errors import AllBad, CalendarGap, IndexMismatch, MalformedDay
from gridcast.ingest import SyntheticConfig, generate_synthetic
from gridcast.preprocess import (
    CALENDAR_COLUMNS,
    CovariateSchema,
    HolidayCalendar,
    apply_normalizer,
    assemble_covariates,
    encode_calendar,
    filter_low_consumption,
    fit_normalizer,
    harmonize_dst,
    interpolate_flagged,
    invert_normalizer,
    iqr_clean,
    iqr_clean_hierarchy,
)
from gridcast.timeseries import (
    QUALITY_DEFECTIVE,
    QUALITY_OK,
    HourlyIndex,
    Series,
)


def make_series(values, quality=None, sid="s", start=datetime(2021, 1, 4)):
    values = np.asarray(values, dtype=float)
    return Series(sid, HourlyIndex(start, len(values)), values, quality)


class TestFilterLowConsumption:
    def test_low_mean_dropped(self):
        s = make_series(np.full(20000, 0.005))
        kept, report = filter_low_consumption([s])
        assert kept == []
        assert report.households_dropped == ("s",)

    def test_low_total_dropped(self):
        s = make_series(np.full(24, 99.0 / 24))  # mean fine, total 99 kWh
        kept, report = filter_low_consumption([s])
        assert kept == []

    def test_normal_household_kept(self):
        s = make_series(np.full(20000, 0.5))
        kept, report = filter_low_consumption([s])
        assert len(kept) == 1
        assert report.households_dropped == ()

    def test_idempotent(self):
        series = [make_series(np.full(300, v), sid=f"h{v}") for v in (0.005, 0.5, 2.0)]
        kept1, _ = filter_low_consumption(series)
        kept2, report2 = filter_low_consumption(kept1)
        assert [s.id for s in kept1] == [s.id for s in kept2]
        assert report2.households_dropped == ()


def day_records(day, hours, values):
    return [(datetime(day.year, day.month, day.day, h), v)
            for h, v in zip(hours, values)]


class TestHarmonizeDst:
    def test_25_hour_day_keeps_first_occurrence(self):
        # fall transition: hour 2 occurs twice in sequence
        hours = list(range(3)) + [2] + list(range(3, 24))
        values = list(range(25))
        recs = day_records(date(2021, 10, 31), hours, values)
        out = harmonize_dst(recs)
        assert len(out) == 24
        assert out.values[2] == 2.0  # first pass kept, value 3.0 dropped
        assert out.values[3] == 4.0

    def test_23_hour_day_interpolates_midpoint(self):
        hours = [h for h in range(24) if h != 2]
        values = [10.0 if h < 2 else 20.0 for h in hours]
        recs = day_records(date(2021, 3, 28), hours, values)
        out = harmonize_dst(recs)
        assert len(out) == 24
        assert out.values[2] == pytest.approx(15.0)

    def test_22_hour_day_rejected(self):
        hours = list(range(22))
        recs = day_records(date(2021, 3, 28), hours, [1.0] * 22)
        with pytest.raises(MalformedDay):
            harmonize_dst(recs)

    def test_output_is_24_per_day_for_any_pattern(self):
        recs = []
        d0 = date(2021, 3, 27)
        recs += day_records(d0, range(24), np.arange(24.0))
        spring = [h for h in range(24) if h != 2]
        recs += day_records(d0 + timedelta(days=1), spring, np.arange(23.0))
        recs += day_records(d0 + timedelta(days=2), range(24), np.arange(24.0))
        fall = list(range(3)) + [2] + list(range(3, 24))
        recs += day_records(d0 + timedelta(days=3), fall, np.arange(25.0))
        out = harmonize_dst(recs)
        assert len(out) == 24 * 4

    def test_absent_day_rejected(self):
        recs = (day_records(date(2021, 1, 1), range(24), np.arange(24.0))
                + day_records(date(2021, 1, 3), range(24), np.arange(24.0)))
        with pytest.raises(MalformedDay):
            harmonize_dst(recs)


class TestInterpolateFlagged:
    def test_linear_midpoint(self):
        s = make_series([1.0, 99.0, 3.0],
                        quality=[QUALITY_OK, QUALITY_DEFECTIVE, QUALITY_OK])
        out, report = interpolate_flagged(s)
        np.testing.assert_allclose(out.values, [1.0, 2.0, 3.0])
        assert report.interpolated_count == 1
        assert (out.quality == QUALITY_OK).all()

    def test_no_flags_identity(self):
        s = make_series([1.0, 2.0, 3.0])
        out, report = interpolate_flagged(s)
        np.testing.assert_array_equal(out.values, s.values)
        assert report.interpolated_count == 0

    def test_leading_run_takes_nearest_ok(self):
        s = make_series([7.0, 8.0, 5.0],
                        quality=[QUALITY_DEFECTIVE, QUALITY_DEFECTIVE, QUALITY_OK])
        out, _ = interpolate_flagged(s)
        np.testing.assert_allclose(out.values, [5.0, 5.0, 5.0])

    def test_all_bad_raises(self):
        s = make_series([1.0, 2.0], quality=[QUALITY_DEFECTIVE, QUALITY_DEFECTIVE])
        with pytest.raises(AllBad):
            interpolate_flagged(s)


class TestIqrClean:
    def test_outage_removed_below_fence(self):
        # values spread so that q25=90, q75=110 -> fence 60; one planted 0
        base = np.concatenate([np.linspace(80, 120, 99), [0.0]])
        rng = np.random.default_rng(0)
        rng.shuffle(base)
        s = make_series(base)
        q25, q75 = np.quantile(base, [0.25, 0.75])
        assert q25 - 1.5 * (q75 - q25) > 0  # the 0 sits below the fence
        out, report = iqr_clean(s)
        assert report.removed_count == 1
        pos = report.removed_positions[0]
        assert base[pos] == 0.0
        assert out.values.min() >= 60.0

    def test_constant_series_no_removals(self):
        s = make_series(np.full(10, 5.0))
        out, report = iqr_clean(s)
        assert report.removed_count == 0
        np.testing.assert_array_equal(out.values, s.values)

    def test_never_removes_above_median(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            values = rng.exponential(50, size=200)
            s = make_series(values)
            _, report = iqr_clean(s)
            median = np.median(values)
            for pos in report.removed_positions:
                assert values[pos] <= median

    def test_hierarchy_clean_rebuilds_grid(self):
        hset, _ = generate_synthetic(SyntheticConfig(n_substations=3, n_days=20, seed=2))
        # plant an outage in one substation
        sub = hset.substations[0]
        dirty = sub.values.copy()
        dirty[100] = 0.0
        hset = type(hset)(hset.grid, (sub.with_values(dirty),) + hset.substations[1:])
        cleaned, reports = iqr_clean_hierarchy(hset)
        assert reports[sub.id].removed_count >= 1
        total = np.sum([s.values for s in cleaned.substations], axis=0)
        np.testing.assert_allclose(cleaned.grid.values, total, rtol=1e-12)


class TestEncodeCalendar:
    def calendar(self):
        return HolidayCalendar.empty(date(2020, 1, 1), date(2022, 12, 31))

    def test_hour_zero_and_six(self):
        idx = HourlyIndex(datetime(2021, 1, 4), 7)
        cols = encode_calendar(idx, self.calendar())
        assert cols[0, 0] == pytest.approx(0.0)  # sin at hour 0
        assert cols[0, 1] == pytest.approx(1.0)  # cos at hour 0
        assert cols[6, 0] == pytest.approx(1.0)  # sin at hour 6
        assert cols[6, 1] == pytest.approx(0.0, abs=1e-12)

    def test_saturday_flag(self):
        idx = HourlyIndex(datetime(2021, 1, 9), 24)  # a Saturday
        cols = encode_calendar(idx, self.calendar())
        flag = cols[:, CALENDAR_COLUMNS.index("holiday_weekend")]
        np.testing.assert_array_equal(flag, 1.0)

    def test_holiday_flag(self):
        cal = HolidayCalendar(frozenset({date(2021, 5, 13)}),
                              date(2021, 1, 1), date(2021, 12, 31))
        idx = HourlyIndex(datetime(2021, 5, 13), 24)  # a Thursday
        cols = encode_calendar(idx, cal)
        assert cols[:, CALENDAR_COLUMNS.index("holiday_weekend")].min() == 1.0

    def test_cyclic_identity_over_full_year(self):
        idx = HourlyIndex(datetime(2021, 1, 1), 24 * 365)
        cols = encode_calendar(idx, self.calendar())
        for pair in ((0, 1), (2, 3), (4, 5)):
            norm = cols[:, pair[0]] ** 2 + cols[:, pair[1]] ** 2
            assert np.abs(norm - 1.0).max() <= 1e-9

    def test_hour_encoding_periodic(self):
        idx = HourlyIndex(datetime(2021, 6, 1), 48)
        cols = encode_calendar(idx, self.calendar())
        np.testing.assert_allclose(cols[:24, :2], cols[24:, :2], atol=1e-12)

    def test_coverage_gap_raises(self):
        cal = HolidayCalendar.empty(date(2021, 1, 1), date(2021, 12, 31))
        idx = HourlyIndex(datetime(2021, 12, 31), 48)
        with pytest.raises(CalendarGap):
            encode_calendar(idx, cal)


class TestNormalizer:
    def test_minmax_endpoints(self):
        norm = fit_normalizer(np.array([[0.0], [5.0], [10.0]]), ["x"])
        out = apply_normalizer(norm, np.array([[0.0], [5.0], [10.0]]))
        np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0])

    def test_test_values_extend_linearly(self):
        norm = fit_normalizer(np.array([[0.0], [10.0]]), ["x"])
        assert apply_normalizer(norm, np.array([[20.0]]))[0, 0] == pytest.approx(2.0)

    def test_constant_column_passthrough(self):
        norm = fit_normalizer(np.array([[3.0, 1.0], [3.0, 2.0]]), ["c", "x"])
        assert norm.constant[0]
        assert not norm.constant[1]
        out = apply_normalizer(norm, np.array([[3.0, 1.5]]))
        assert out[0, 0] == 3.0

    def test_invert_round_trip(self):
        rng = np.random.default_rng(1)
        train = rng.normal(size=(50, 4)) * [1, 10, 100, 1000]
        norm = fit_normalizer(train, list("abcd"))
        x = rng.normal(size=(20, 4)) * [1, 10, 100, 1000]
        back = invert_normalizer(norm, apply_normalizer(norm, x))
        np.testing.assert_allclose(back, x, atol=1e-12 * 1000)

    def test_train_maps_into_unit_interval(self):
        rng = np.random.default_rng(2)
        train = rng.normal(size=(100, 3))
        norm = fit_normalizer(train, list("abc"))
        out = apply_normalizer(norm, train)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestAssembleCovariates:
    def setup_method(self):
        self.hset, self.temperature = generate_synthetic(
            SyntheticConfig(n_substations=3, n_days=10, seed=4))
        self.calendar = HolidayCalendar.empty(date(2020, 1, 1), date(2022, 12, 31))

    def test_grid_level_no_incidence(self):
        frames = assemble_covariates(self.hset, self.temperature, None,
                                     self.calendar, level="grid")
        frame = frames["grid"]
        assert frame.past_known.shape[1] == 1
        assert frame.future_known.shape[1] == 8
        assert frame.static.shape == (0,)
        assert frame.schema.past == ("consumption",)

    def test_substation_level_with_incidence(self):
        incidence = Series("incidence", self.hset.grid.index,
                           np.full(len(self.hset.grid), 6.0))
        frames = assemble_covariates(self.hset, self.temperature, incidence,
                                     self.calendar, level="substation")
        assert len(frames) == 3
        for node_idx, s in enumerate(self.hset.substations):
            frame = frames[s.id]
            assert frame.past_known.shape[1] == 2
            assert frame.schema.static == ("node_id",)
            assert frame.static[0] == node_idx

    def test_missing_temperature_raises(self):
        with pytest.raises(IndexMismatch):
            assemble_covariates(self.hset, None, None, self.calendar, level="grid")

    def test_schema_rejects_duplicate_columns(self):
        with pytest.raises(ValueError):
            CovariateSchema(("consumption",), ("consumption",), ())
