"""Command-line pipeline: synth, train, evaluate, compare, search.

Every command writes its outputs plus a manifest (inputs digests, seeds,
config hash, timestamps) into one run directory; rerunning with the same
flags, seed and --threads 1 reproduces the data outputs byte for byte
(the manifest carries wall-clock timestamps and is exempt).

Exit codes: 0 success, 1 validation/contract failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GridcastError
from .evaluation import (
    EvalReport,
    SearchSpace,
    compare_reports,
    evaluate_windows,
    mape,
    random_search,
    trial_seed,
)
from .ingest import (
    SyntheticConfig,
    generate_synthetic,
    read_gefc_load,
    read_gefc_temperature,
    read_household_long,
    read_incidence,
    write_gefc_load,
    write_gefc_temperature,
    write_household_long,
    write_incidence,
)
from .models import (
    ArimaConfig,
    TrainedModel,
    build_forecast_window,
    config_from_dict,
    config_hash,
    load_model,
    lstm_forecast,
    lstm_train,
    save_model,
    seasonal_naive_values,
    tft_forecast,
    tft_train,
)
from .models.arima import ArimaParameters, fit_arima_values, forecast_values
from .models.common import NaiveConfig, write_json
from .models.io import read_extra
from .models.reference import (
    DAY_INPUT_WINDOWS,
    LSTM_SEARCH_SPACE,
    TFT_SEARCH_SPACE,
    WEEK_INPUT_WINDOWS,
)
from .preprocess import (
    HolidayCalendar,
    assemble_covariates,
    interpolate_flagged,
    iqr_clean_hierarchy,
)
from .timeseries import (
    HierarchicalSet,
    Series,
    SplitSpec,
    align,
    enumerate_eval_windows,
    rebuild_grid,
    time_split,
)

SCHEMA_VERSION = 1

LOAD_FILE = "load.csv"
HOUSEHOLD_FILE = "households.csv"
TEMPERATURE_FILE = "temperature.csv"
INCIDENCE_FILE = "incidence.csv"
HOLIDAYS_FILE = "holidays.csv"


# --- manifest ---

@dataclass
class RunManifest:
    command: str
    argv: list[str]
    tool_version: str = __version__
    config_hash: str = ""
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""

    def write(self, run_dir: Path) -> None:
        self.finished_at = datetime.now().isoformat()
        write_json(run_dir / "manifest.json", self.__dict__)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _digest_inputs(paths) -> dict:
    return {str(p): _sha256(Path(p)) for p in paths if Path(p).is_file()}


def _run_dir(args, command: str) -> Path:
    if args.out:
        run_dir = Path(args.out)
    else:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = Path("runs") / f"{command}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _data_dir(args) -> Path:
    if args.data:
        return Path(args.data)
    env = os.environ.get("GRIDCAST_DATA_DIR")
    if env:
        return Path(env)
    raise ConfigError("no dataset directory: pass --data or set GRIDCAST_DATA_DIR")


# --- dataset loading pipeline ---

@dataclass
class Dataset:
    hset: HierarchicalSet
    temperature: Series
    incidence: Series | None
    calendar: HolidayCalendar
    files: list[Path]


def load_dataset(data_dir: Path, want_incidence: bool) -> Dataset:
    """Read, clean and align one dataset directory.

    Substations come from a wide zonal load file or, failing that, from a
    long household file (each household stream is then treated as one
    substation). Quality-flagged values are interpolated, outages removed
    by the lower IQR fence, and the grid rebuilt as the exact substation sum.
    """
    files = []
    load_path = data_dir / LOAD_FILE
    household_path = data_dir / HOUSEHOLD_FILE
    if load_path.exists():
        hset = read_gefc_load(load_path)
        files.append(load_path)
    elif household_path.exists():
        households = read_household_long(household_path)
        from .preprocess import filter_low_consumption
        kept, _ = filter_low_consumption(households)
        if not kept:
            raise GridcastError("all household series were filtered out")
        cleaned = [interpolate_flagged(s)[0] for s in kept]
        hset = rebuild_grid(HierarchicalSet(
            Series("grid", cleaned[0].index, np.zeros(len(cleaned[0]))),
            tuple(cleaned)))
        files.append(household_path)
    else:
        raise FileNotFoundError(
            f"no {LOAD_FILE} or {HOUSEHOLD_FILE} in {data_dir}")

    temp_path = data_dir / TEMPERATURE_FILE
    if not temp_path.exists():
        raise FileNotFoundError(f"missing {temp_path}")
    temperature = read_gefc_temperature(temp_path)
    files.append(temp_path)

    incidence = None
    incidence_path = data_dir / INCIDENCE_FILE
    if want_incidence:
        if not incidence_path.exists():
            raise FileNotFoundError(
                f"--with-incidence set but {incidence_path} is missing")
        incidence = read_incidence(incidence_path)
        files.append(incidence_path)

    series = [interpolate_flagged(s)[0] for s in hset.substations]
    to_align = series + [temperature] + ([incidence] if incidence is not None else [])
    aligned = align(to_align)
    series = aligned[:len(series)]
    temperature = aligned[len(series)]
    incidence = aligned[len(series) + 1] if incidence is not None else None
    hset = rebuild_grid(HierarchicalSet(
        Series(hset.grid.id, series[0].index, np.zeros(len(series[0]))),
        tuple(series)))
    hset, _ = iqr_clean_hierarchy(hset)

    holidays_path = data_dir / HOLIDAYS_FILE
    if holidays_path.exists():
        calendar = HolidayCalendar.from_csv(holidays_path)
        files.append(holidays_path)
    else:
        idx = hset.grid.index
        calendar = HolidayCalendar.empty(idx.start.date(), idx.last.date())
    return Dataset(hset, temperature, incidence, calendar, files)


def make_split(args) -> SplitSpec:
    if getattr(args, "split_at", None):
        return SplitSpec.at(datetime.fromisoformat(args.split_at))
    return SplitSpec.by_fraction(args.train_fraction)


def split_to_jsonable(split: SplitSpec) -> dict:
    if split.mode == "fraction":
        return {"mode": "fraction", "fraction": split.fraction}
    return {"mode": "date", "boundary": split.boundary.isoformat()}


def split_from_jsonable(data: dict) -> SplitSpec:
    if data["mode"] == "fraction":
        return SplitSpec.by_fraction(data["fraction"])
    return SplitSpec.at(datetime.fromisoformat(data["boundary"]))


# --- synth ---

def synthetic_incidence(n_days: int, start: datetime) -> Series:
    from .timeseries import HourlyIndex
    days = np.arange(n_days)
    wave = 80.0 * np.exp(-(((days - n_days / 2.0) / max(n_days / 6.0, 1.0)) ** 2))
    values = np.repeat(np.round(wave, 2), 24)
    return Series("incidence", HourlyIndex(start, n_days * 24), values,
                  unit="count")


def synthetic_holidays(years) -> list[tuple[date, str]]:
    fixed = [(1, 1, "new year"), (5, 1, "labour day"), (10, 3, "unity day"),
             (12, 25, "christmas"), (12, 26, "boxing day")]
    return [(date(y, m, d), name) for y in years for m, d, name in fixed]


def cmd_synth(args) -> int:
    run_dir = _run_dir(args, "synth")
    manifest = RunManifest("synth", sys.argv[1:],
                           started_at=datetime.now().isoformat(),
                           seeds={"synthetic": args.seed})
    config = SyntheticConfig(
        n_substations=args.substations, n_days=args.days,
        daily_amplitude=args.daily_amplitude,
        weekly_amplitude=args.weekly_amplitude,
        temp_sensitivity=args.temp_sensitivity,
        noise_std=args.noise_std, seed=args.seed)
    hset, temperature = generate_synthetic(config)

    if args.format == "gefc":
        write_gefc_load(hset, run_dir / LOAD_FILE)
        manifest.outputs.append(LOAD_FILE)
    else:
        write_household_long(list(hset.substations), run_dir / HOUSEHOLD_FILE)
        manifest.outputs.append(HOUSEHOLD_FILE)
    write_gefc_temperature(temperature, run_dir / TEMPERATURE_FILE)
    manifest.outputs.append(TEMPERATURE_FILE)

    if args.with_incidence:
        incidence = synthetic_incidence(config.n_days, temperature.index.start)
        write_incidence(incidence, run_dir / INCIDENCE_FILE)
        manifest.outputs.append(INCIDENCE_FILE)

    if args.with_holidays:
        years = sorted({ts.year for ts in (temperature.index.start,
                                           temperature.index.last)})
        with (run_dir / HOLIDAYS_FILE).open("w", encoding="utf-8") as fh:
            fh.write("date,name\n")
            for day, name in synthetic_holidays(years):
                fh.write(f"{day.isoformat()},{name}\n")
        manifest.outputs.append(HOLIDAYS_FILE)

    manifest.write(run_dir)
    print(f"wrote {', '.join(manifest.outputs)} to {run_dir}")
    return 0


# --- train ---

def read_config_file(path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config file {path}: schema_version must be {SCHEMA_VERSION}, "
            f"got {version!r}")
    return payload


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def build_model_config(args):
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(read_config_file(args.config))
    overrides.update(parse_overrides(getattr(args, "set", None)))
    horizon = 24 if args.horizon == "day" else 168
    if args.model in ("tft", "lstm", "naive"):
        if overrides.get("horizon", horizon) != horizon:
            raise ConfigError(
                f"config file horizon {overrides['horizon']} conflicts with "
                f"--horizon {args.horizon}")
        overrides["horizon"] = horizon
    return config_from_dict(args.model, overrides)


def train_model(args, dataset: Dataset, split: SplitSpec) -> TrainedModel:
    config = build_model_config(args)
    level = args.level
    frames = assemble_covariates(dataset.hset, dataset.temperature,
                                 dataset.incidence, dataset.calendar,
                                 level=level)
    if args.model == "tft":
        return tft_train(config, frames, split, seed=args.seed, level=level)
    if args.model == "lstm":
        return lstm_train(config, frames, split, seed=args.seed, level=level)

    targets = ([dataset.hset.grid] if level == "grid"
               else list(dataset.hset.substations))
    if args.model == "arima":
        coefficients = {}
        for target in targets:
            train, _ = time_split(target, split)
            mu, phi, theta = fit_arima_values(train.values, config)
            coefficients[target.id] = ArimaParameters(
                mu=mu, phi=tuple(map(float, phi)), theta=tuple(map(float, theta)),
                d=config.d, history=tuple(map(float, train.values)),
                history_start=train.index.start, unit=target.unit).to_jsonable()
        return TrainedModel(kind="arima", config=config, level=level,
                            series_ids=tuple(t.id for t in targets),
                            seed=args.seed, arima_coefficients=coefficients)
    if args.model == "naive":
        return TrainedModel(kind="naive", config=config, level=level,
                            series_ids=tuple(t.id for t in targets),
                            seed=args.seed)
    raise ConfigError(f"unknown model {args.model!r}")


def cmd_train(args) -> int:
    run_dir = _run_dir(args, "train")
    data_dir = _data_dir(args)
    dataset = load_dataset(data_dir, want_incidence=args.with_incidence)
    split = make_split(args)
    manifest = RunManifest("train", sys.argv[1:],
                           started_at=datetime.now().isoformat(),
                           seeds={"training": args.seed},
                           inputs=_digest_inputs(dataset.files))
    model = train_model(args, dataset, split)
    manifest.config_hash = config_hash(model.config)

    checkpoint = run_dir / "checkpoint"
    save_model(model, checkpoint, extra={
        "split": split_to_jsonable(split),
        "with_incidence": args.with_incidence,
        "dataset": str(data_dir),
    })
    manifest.outputs.append("checkpoint")

    if model.history:
        with (run_dir / "history.csv").open("w", encoding="utf-8") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for row in model.history:
                fh.write(f"{row['epoch']},{row['train_loss']!r},{row['val_loss']!r}\n")
        manifest.outputs.append("history.csv")

    manifest.write(run_dir)
    print(f"trained {args.model} ({args.level}, {args.horizon}-ahead) "
          f"-> {checkpoint}")
    return 0


# --- evaluate ---

def _history_until(series: Series, when: datetime) -> np.ndarray:
    return series.values[:series.index.position(when)]


def forecast_function(model: TrainedModel, frames, truths: dict[str, Series]):
    """Per-(window, series) forecast values in raw units."""
    if model.kind == "tft":
        return lambda window, sid: tft_forecast(
            model, build_forecast_window(frames[sid], window)).values
    if model.kind == "lstm":
        return lambda window, sid: lstm_forecast(
            model, build_forecast_window(frames[sid], window)).values
    if model.kind == "arima":
        params = {sid: ArimaParameters.from_jsonable(data)
                  for sid, data in model.arima_coefficients.items()}
        return lambda window, sid: forecast_values(
            params[sid], _history_until(truths[sid], window.target_start),
            window.target_length)
    if model.kind == "naive":
        season = model.config.season
        return lambda window, sid: seasonal_naive_values(
            _history_until(truths[sid], window.target_start), season,
            window.target_length)
    raise ConfigError(f"cannot forecast with model kind {model.kind!r}")


def run_evaluation(model: TrainedModel, dataset: Dataset, split: SplitSpec,
                   aggregate: bool, threads: int = 1,
                   model_id: str = "", dataset_id: str = "") -> tuple[EvalReport, list]:
    """Backtest a checkpoint over every complete day/week in the test span.

    Returns the report plus per-window (starts, actual, forecast) rows for
    the forecast data file.
    """
    kind = "day" if model.horizon == 24 else "week"
    k = max(1, model.input_window)
    frames = assemble_covariates(dataset.hset, dataset.temperature,
                                 dataset.incidence, dataset.calendar,
                                 level=model.level)
    if model.level == "substation":
        expected = set(model.series_ids)
        actual = set(frames)
        if expected != actual:
            from .errors import SchemaMismatch
            raise SchemaMismatch(
                f"checkpoint substations {sorted(expected)} do not match "
                f"dataset substations {sorted(actual)}")

    truths = {s.id: s for s in dataset.hset.substations}
    truths[dataset.hset.grid.id] = dataset.hset.grid
    grid_id = dataset.hset.grid.id
    _, test_grid = time_split(dataset.hset.grid, split)
    windows = enumerate_eval_windows(test_grid, k=k, kind=kind)
    index_start = dataset.hset.grid.index.start
    usable = [w for w in windows if w.input_start >= index_start]
    if len(usable) < len(windows):
        warnings.warn(f"{len(windows) - len(usable)} window(s) dropped: input "
                      "reaches before the dataset start")
    if not usable:
        from .errors import NoWindows
        raise NoWindows("test span contains no evaluable windows")

    per_series_fn = forecast_function(model, frames, truths)

    if model.level == "grid":
        target_ids = [grid_id]
    else:
        target_ids = list(model.series_ids)

    def window_job(window):
        return {sid: np.asarray(per_series_fn(window, sid)) for sid in target_ids}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_forecasts = list(pool.map(window_job, usable))
    else:
        all_forecasts = [window_job(w) for w in usable]

    rows = []
    if model.level == "grid":
        cache = {w.target_start: f[grid_id] for w, f in zip(usable, all_forecasts)}
        report = evaluate_windows(lambda w: cache[w.target_start], usable,
                                  truths[grid_id], model_id=model_id,
                                  dataset_id=dataset_id, level="grid")
        for i, w in enumerate(usable):
            rows.append((i, grid_id, w.target_start,
                         truths[grid_id].window(w.target_start, w.target_length),
                         cache[w.target_start]))
    elif aggregate:
        cache = {w.target_start: np.sum(list(f.values()), axis=0)
                 for w, f in zip(usable, all_forecasts)}
        report = evaluate_windows(lambda w: cache[w.target_start], usable,
                                  truths[grid_id], model_id=model_id,
                                  dataset_id=dataset_id, level="hierarchical")
        for i, w in enumerate(usable):
            rows.append((i, grid_id, w.target_start,
                         truths[grid_id].window(w.target_start, w.target_length),
                         cache[w.target_start]))
    else:
        # pooled substation metrics: one row per (window, substation)
        from .evaluation import rmse as _rmse, smape as _smape
        starts, r, m, s = [], [], [], []
        for i, (w, forecasts) in enumerate(zip(usable, all_forecasts)):
            for sid in target_ids:
                actual = truths[sid].window(w.target_start, w.target_length)
                predicted = forecasts[sid]
                starts.append(w.target_start)
                r.append(_rmse(actual, predicted))
                m.append(mape(actual, predicted))
                s.append(_smape(actual, predicted))
                rows.append((i, sid, w.target_start, actual, predicted))
        report = EvalReport(model_id, dataset_id, "substation", kind,
                            tuple(starts), np.array(r), np.array(m),
                            np.array(s), single_window=len(starts) == 1)
    return report, rows


def write_forecast_rows(path, rows) -> None:
    import csv as _csv
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["window", "series_id", "timestamp", "actual", "forecast"])
        for index, sid, start, actual, predicted in rows:
            for h in range(len(actual)):
                ts = start + timedelta(hours=h)
                w.writerow([index, sid, ts.isoformat(),
                            repr(float(actual[h])), repr(float(predicted[h]))])


def cmd_evaluate(args) -> int:
    run_dir = _run_dir(args, "evaluate")
    model = load_model(args.checkpoint)
    extra = read_extra(args.checkpoint)
    data_dir = _data_dir(args)
    want_incidence = bool(extra.get("with_incidence", False))
    dataset = load_dataset(data_dir, want_incidence=want_incidence)
    split = (split_from_jsonable(extra["split"]) if "split" in extra
             else make_split(args))
    manifest = RunManifest("evaluate", sys.argv[1:],
                           started_at=datetime.now().isoformat(),
                           config_hash=config_hash(model.config),
                           inputs=_digest_inputs(
                               dataset.files + [Path(args.checkpoint) / "model.json"]))

    report, rows = run_evaluation(
        model, dataset, split, aggregate=args.aggregate, threads=args.threads,
        model_id=model.kind, dataset_id=str(data_dir))

    report.write_csv(run_dir / "report.csv")
    write_json(run_dir / "report.json", report.summary())
    write_forecast_rows(run_dir / "forecasts.csv", rows)
    manifest.outputs += ["report.csv", "report.json", "forecasts.csv"]
    manifest.write(run_dir)

    summary = report.summary()["metrics"]
    print(f"{model.kind} level={report.level} windows={report.n_windows} "
          + " ".join(f"{name}={summary[name]['mean']:.3f}±{summary[name]['std']:.3f}"
                     for name in ("rmse", "mape", "smape")))
    return 0


# --- compare ---

def cmd_compare(args) -> int:
    run_dir = _run_dir(args, "compare")
    report_a = EvalReport.read_csv(args.report_a)
    report_b = EvalReport.read_csv(args.report_b)
    result = compare_reports(report_a, report_b)
    direction = ("a_better" if result.mean_a < result.mean_b
                 else "b_better" if result.mean_b < result.mean_a else "tie")
    payload = result.to_jsonable() | {
        "report_a": str(args.report_a),
        "report_b": str(args.report_b),
        "metric": "mape",
        "lower_mean": direction,
    }
    write_json(run_dir / "comparison.json", payload)
    manifest = RunManifest("compare", sys.argv[1:],
                           started_at=datetime.now().isoformat(),
                           inputs=_digest_inputs([args.report_a, args.report_b]),
                           outputs=["comparison.json"])
    manifest.write(run_dir)
    p_text = "<.001" if result.p < 0.001 else f"{result.p:.3f}"
    print(f"t({result.df:.2f}) = {result.t:.2f}, p {p_text}, d = {result.d:.2f} "
          f"({direction})")
    return 0


# --- search ---

def default_search_space(model: str, horizon: str) -> dict:
    values = dict(TFT_SEARCH_SPACE if model == "tft" else LSTM_SEARCH_SPACE)
    values["input_window"] = (DAY_INPUT_WINDOWS if horizon == "day"
                              else WEEK_INPUT_WINDOWS)
    return values


def cmd_search(args) -> int:
    run_dir = _run_dir(args, "search")
    data_dir = _data_dir(args)
    dataset = load_dataset(data_dir, want_incidence=args.with_incidence)
    split = make_split(args)
    horizon_hours = 24 if args.horizon == "day" else 168

    if args.space:
        space_values = read_config_file(args.space)
    else:
        space_values = default_search_space(args.model, args.horizon)
    space = SearchSpace(space_values, budget=args.budget, seed=args.seed)

    frames = assemble_covariates(dataset.hset, dataset.temperature,
                                 dataset.incidence, dataset.calendar,
                                 level=args.level)
    manifest = RunManifest("search", sys.argv[1:],
                           started_at=datetime.now().isoformat(),
                           seeds={"search": args.seed},
                           inputs=_digest_inputs(dataset.files))

    targets = ([dataset.hset.grid] if args.level == "grid"
               else list(dataset.hset.substations))

    def train_fn(config_values: dict, seed: int):
        config_values = dict(config_values)
        config_values.update({
            "horizon": horizon_hours,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
        })
        config = config_from_dict(args.model, config_values)
        train = tft_train if args.model == "tft" else lstm_train
        return train(config, frames, split, seed=seed, level=args.level)

    def eval_fn(model: TrainedModel) -> float:
        # score on the last complete days of the training span (the same
        # tail the early stopping watches), never on the test span
        scores = []
        forecast = tft_forecast if model.kind == "tft" else lstm_forecast
        for target in targets:
            train, _ = time_split(target, split)
            tail_hours = max(model.horizon + 24,
                             int(0.1 * len(train)) // 24 * 24)
            tail_hours = min(tail_hours, len(train))
            tail = train.slice(len(train) - tail_hours, tail_hours)
            kind = "day" if model.horizon == 24 else "week"
            windows = enumerate_eval_windows(tail, k=model.input_window, kind=kind)
            windows = [w for w in windows
                       if w.input_start >= target.index.start]
            for window in windows:
                fw = build_forecast_window(frames[target.id], window)
                predicted = forecast(model, fw).values
                actual = target.window(window.target_start, window.target_length)
                scores.append(mape(actual, predicted))
        return float(np.mean(scores)) if scores else float("inf")

    if args.threads > 1:
        from .evaluation import sample_configurations
        configs = sample_configurations(space)

        def run_trial(item):
            index, config_values = item
            seed = trial_seed(space.seed, index)
            started = time.perf_counter()
            model = train_fn(config_values, seed)
            score = eval_fn(model)
            from .evaluation import TrialResult
            return TrialResult(index=index, config=config_values, seed=seed,
                               score=score,
                               runtime_s=time.perf_counter() - started)

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            trials = sorted(pool.map(run_trial, enumerate(configs)),
                            key=lambda t: (t.score, t.index))
    else:
        trials = random_search(space, train_fn, eval_fn)

    field_names = sorted(space_values)
    with (run_dir / "trials.csv").open("w", encoding="utf-8") as fh:
        fh.write("rank,trial,seed,val_mape,runtime_s," + ",".join(field_names) + "\n")
        for rank, trial in enumerate(trials):
            fh.write(f"{rank},{trial.index},{trial.seed},{trial.score!r},"
                     f"{trial.runtime_s:.2f},"
                     + ",".join(str(trial.config[n]) for n in field_names) + "\n")
    best = trials[0]
    write_json(run_dir / "best_config.json",
               {"schema_version": SCHEMA_VERSION} | best.config
               | {"val_mape": best.score})
    manifest.outputs += ["trials.csv", "best_config.json"]
    manifest.write(run_dir)
    print(f"best of {len(trials)}: val MAPE {best.score:.3f} with {best.config}")
    return 0


# --- argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridcast",
        description="Hierarchical short-term load forecasting pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--out", required=True)
    synth.add_argument("--substations", type=int, default=8)
    synth.add_argument("--days", type=int, default=90)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--daily-amplitude", type=float, default=10.0)
    synth.add_argument("--weekly-amplitude", type=float, default=4.0)
    synth.add_argument("--temp-sensitivity", type=float, default=0.8)
    synth.add_argument("--noise-std", type=float, default=1.0)
    synth.add_argument("--format", choices=("gefc", "household"), default="gefc")
    synth.add_argument("--with-incidence", action="store_true")
    synth.add_argument("--with-holidays", action="store_true")
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="train a forecaster")
    train.add_argument("--data", help="dataset dir (or GRIDCAST_DATA_DIR)")
    train.add_argument("--out")
    train.add_argument("--model", choices=("tft", "lstm", "arima", "naive"),
                       required=True)
    train.add_argument("--level", choices=("grid", "substation"), default="grid")
    train.add_argument("--horizon", choices=("day", "week"), default="day")
    train.add_argument("--config", help="JSON config file")
    train.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override single config fields")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--train-fraction", type=float, default=0.8)
    train.add_argument("--split-at", help="first test hour (ISO timestamp)")
    train.add_argument("--with-incidence", action="store_true")
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("evaluate", help="backtest a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--data")
    evaluate.add_argument("--out")
    evaluate.add_argument("--aggregate", action="store_true",
                          help="sum substation forecasts to grid level")
    evaluate.add_argument("--threads", type=int, default=1)
    evaluate.add_argument("--train-fraction", type=float, default=0.8)
    evaluate.add_argument("--split-at")
    evaluate.set_defaults(func=cmd_evaluate)

    compare = sub.add_parser("compare", help="Welch test between two reports")
    compare.add_argument("--report-a", required=True)
    compare.add_argument("--report-b", required=True)
    compare.add_argument("--out")
    compare.set_defaults(func=cmd_compare)

    search = sub.add_parser("search", help="random hyperparameter search")
    search.add_argument("--data")
    search.add_argument("--out")
    search.add_argument("--model", choices=("tft", "lstm"), required=True)
    search.add_argument("--level", choices=("grid", "substation"), default="grid")
    search.add_argument("--horizon", choices=("day", "week"), default="day")
    search.add_argument("--budget", type=int, required=True)
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--space", help="JSON file with value lists")
    search.add_argument("--max-epochs", type=int, default=8)
    search.add_argument("--patience", type=int, default=3)
    search.add_argument("--threads", type=int, default=1)
    search.add_argument("--train-fraction", type=float, default=0.8)
    search.add_argument("--split-at")
    search.add_argument("--with-incidence", action="store_true")
    search.set_defaults(func=cmd_search)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GridcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
