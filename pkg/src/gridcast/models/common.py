"""Shared model machinery: configs, trained-model container, window
extraction, normalized training data and the mini-batch loop with early
stopping on a time-tail validation split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from datetime import datetime
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigError, NonFiniteLoss, SchemaMismatch, WindowTooShort
from ..nn import Adam, ParameterStore, Tensor, mse_loss, no_grad
from ..preprocess import (
    CovariateFrame,
    CovariateSchema,
    Normalizer,
    apply_normalizer,
    fit_normalizer,
    invert_normalizer,
)
from ..timeseries import HOUR, EvalWindow, HourlyIndex, Series, SplitSpec

HORIZON_HOURS = {"day": 24, "week": 168}


def _require(condition: bool, field_name: str, message: str, bad: list):
    if not condition:
        bad.append(f"{field_name} ({message})")


@dataclass(frozen=True)
class TFTConfig:
    attention_heads: int = 1
    hidden_size: int = 16
    lstm_layers: int = 1
    input_window: int = 48
    dropout: float = 0.1
    batch_size: int = 32
    learning_rate: float = 1e-3  # not reported for this architecture; documented default
    horizon: int = 24
    max_epochs: int = 100
    patience: int = 10

    def validate(self) -> None:
        bad: list[str] = []
        _require(self.attention_heads >= 1, "attention_heads", ">= 1", bad)
        _require(self.hidden_size >= 1, "hidden_size", ">= 1", bad)
        _require(self.lstm_layers >= 1, "lstm_layers", ">= 1", bad)
        _require(self.input_window >= 1, "input_window", ">= 1", bad)
        _require(0.0 <= self.dropout < 1.0, "dropout", "in [0, 1)", bad)
        _require(self.batch_size >= 1, "batch_size", ">= 1", bad)
        _require(self.learning_rate > 0, "learning_rate", "> 0", bad)
        _require(self.horizon in (24, 168), "horizon", "24 or 168", bad)
        _require(self.max_epochs >= 1, "max_epochs", ">= 1", bad)
        _require(self.patience >= 1, "patience", ">= 1", bad)
        _require(self.hidden_size % self.attention_heads == 0,
                 "hidden_size", "divisible by attention_heads", bad)
        if bad:
            raise ConfigError("invalid TFT config", bad)


@dataclass(frozen=True)
class LSTMConfig:
    hidden_size: int = 32
    num_layers: int = 1
    input_window: int = 48
    dropout: float = 0.1
    batch_size: int = 32
    learning_rate: float = 1e-3
    horizon: int = 24
    max_epochs: int = 100
    patience: int = 10

    def validate(self) -> None:
        bad: list[str] = []
        _require(self.hidden_size >= 1, "hidden_size", ">= 1", bad)
        _require(self.num_layers >= 1, "num_layers", ">= 1", bad)
        _require(self.input_window >= 1, "input_window", ">= 1", bad)
        _require(0.0 <= self.dropout < 1.0, "dropout", "in [0, 1)", bad)
        _require(self.batch_size >= 1, "batch_size", ">= 1", bad)
        _require(self.learning_rate > 0, "learning_rate", "> 0", bad)
        _require(self.horizon in (24, 168), "horizon", "24 or 168", bad)
        _require(self.max_epochs >= 1, "max_epochs", ">= 1", bad)
        _require(self.patience >= 1, "patience", ">= 1", bad)
        if bad:
            raise ConfigError("invalid LSTM config", bad)


@dataclass(frozen=True)
class ArimaConfig:
    p: int = 2
    d: int = 1
    q: int = 2

    def validate(self) -> None:
        bad: list[str] = []
        _require(self.p >= 0, "p", ">= 0", bad)
        _require(self.d >= 0, "d", ">= 0", bad)
        _require(self.q >= 0, "q", ">= 0", bad)
        # a pure-differencing model (p = q = 0, d >= 1) is still usable
        _require(self.p + self.q + self.d >= 1, "p", "p+q+d >= 1", bad)
        if bad:
            raise ConfigError("invalid ARIMA config", bad)


@dataclass(frozen=True)
class NaiveConfig:
    season: int = 168
    horizon: int = 24

    def validate(self) -> None:
        bad: list[str] = []
        _require(self.season >= 1, "season", ">= 1", bad)
        _require(self.horizon in (24, 168), "horizon", "24 or 168", bad)
        if bad:
            raise ConfigError("invalid seasonal-naive config", bad)


@dataclass(frozen=True)
class TrainedModel:
    """A fitted forecaster plus everything needed to reproduce its outputs."""

    kind: str                      # tft | lstm | arima | seasonal_naive
    config: object
    level: str                     # grid | substation
    series_ids: tuple[str, ...]
    seed: int
    schema: CovariateSchema | None = None
    normalizers: dict[str, Normalizer] = field(default_factory=dict)
    store: ParameterStore | None = None
    arima_coefficients: dict[str, dict] = field(default_factory=dict)
    history: tuple[dict, ...] = ()

    @property
    def horizon(self) -> int:
        return getattr(self.config, "horizon", 24)

    @property
    def input_window(self) -> int:
        return getattr(self.config, "input_window", 0)

    def node_index(self, series_id: str) -> int:
        try:
            return self.series_ids.index(series_id)
        except ValueError:
            raise SchemaMismatch(f"series {series_id!r} unknown to this model")


@dataclass(frozen=True)
class ForecastWindow:
    """Raw feature matrices for one forecast: k past hours, H future hours."""

    series_id: str
    target_start: datetime
    past: np.ndarray      # (k, P) raw past-known features
    future: np.ndarray    # (k+H, F) raw future-known features
    static_index: int | None = None


def build_forecast_window(frame: CovariateFrame, window: EvalWindow) -> ForecastWindow:
    """Cut a model input window out of a full-span covariate frame."""
    k, horizon = window.input_length, window.target_length
    if not frame.index.contains_span(window.input_start, k + horizon):
        raise WindowTooShort(
            f"frame {frame.series_id!r} does not cover "
            f"[{window.input_start} .. {window.target_end})")
    start = frame.index.position(window.input_start)
    static_index = int(frame.static[0]) if frame.static.size else None
    return ForecastWindow(
        series_id=frame.series_id,
        target_start=window.target_start,
        past=frame.past_known[start:start + k],
        future=frame.future_known[start:start + k + horizon],
        static_index=static_index,
    )


# --- normalized training data ---

@dataclass
class SeriesData:
    series_id: str
    node_index: int
    past: np.ndarray    # (N, P) normalized
    future: np.ndarray  # (N, F) normalized
    n_train: int        # hours in the training span


def train_length(n: int, split: SplitSpec, index: HourlyIndex) -> int:
    if split.mode == "fraction":
        n_train = int(np.floor(split.fraction * n))
    else:
        n_train = (split.boundary - index.start) // HOUR
    if n_train <= 0 or n_train >= n:
        from ..errors import DegenerateSplit
        raise DegenerateSplit(f"split leaves an empty side (train={n_train}, total={n})")
    return n_train


def prepare_series_data(frames: dict[str, CovariateFrame], split: SplitSpec
                        ) -> tuple[list[SeriesData], dict[str, Normalizer],
                                   CovariateSchema]:
    """Fit per-series normalizers on the training span and normalize the
    full span; consumption is column 0 of the past block."""
    if not frames:
        raise ValueError("no covariate frames")
    schema = None
    data = []
    normalizers = {}
    for frame in frames.values():
        if schema is None:
            schema = frame.schema
        elif frame.schema != schema:
            raise SchemaMismatch(
                f"frame {frame.series_id!r} schema differs within one dataset")
        n = frame.index.length
        n_train = train_length(n, split, frame.index)
        names = schema.past + schema.future
        full = np.column_stack([frame.past_known, frame.future_known])
        norm = fit_normalizer(full[:n_train], names)
        scaled = apply_normalizer(norm, full)
        p = len(schema.past)
        node = int(frame.static[0]) if frame.static.size else 0
        normalizers[frame.series_id] = norm
        data.append(SeriesData(frame.series_id, node,
                               scaled[:, :p], scaled[:, p:], n_train))
    return data, normalizers, schema


def normalize_window(model: TrainedModel, window: ForecastWindow,
                     k: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Validate a raw window against the model and normalize it."""
    if model.schema is None:
        raise SchemaMismatch(f"{model.kind} model carries no feature schema")
    p, f = len(model.schema.past), len(model.schema.future)
    if window.past.ndim != 2 or window.past.shape[1] != p:
        raise SchemaMismatch(
            f"window has {window.past.shape[1] if window.past.ndim == 2 else '?'} "
            f"past columns, model expects {p}")
    if window.future.ndim != 2 or window.future.shape[1] != f:
        raise SchemaMismatch(
            f"window has {window.future.shape[1] if window.future.ndim == 2 else '?'} "
            f"future columns, model expects {f}")
    if window.past.shape[0] < k:
        raise WindowTooShort(
            f"{window.past.shape[0]} past hours supplied, model needs {k}")
    if window.future.shape[0] < k + horizon:
        raise WindowTooShort(
            f"{window.future.shape[0]} future-known hours supplied, "
            f"model needs {k + horizon}")
    norm = model.normalizers.get(window.series_id)
    if norm is None:
        raise SchemaMismatch(f"series {window.series_id!r} unknown to this model")
    past = window.past[-k:]
    future = window.future[-(k + horizon):]
    full = np.zeros((k + horizon, p + f))
    full[:k, :p] = past
    full[:, p:] = future
    scaled = apply_normalizer(norm, full)
    return scaled[:k, :p], scaled[:, p:]


def denormalize_target(model: TrainedModel, series_id: str,
                       values: np.ndarray) -> np.ndarray:
    norm = model.normalizers[series_id]
    p = len(model.schema.past)
    full = np.zeros((len(values), len(norm.names)))
    full[:, 0] = values
    return invert_normalizer(norm, full)[:, 0]


# --- training loop ---

@dataclass
class WindowBatch:
    past: np.ndarray          # (B, k, P)
    future: np.ndarray        # (B, k+H, F)
    static: np.ndarray | None  # (B,) int or None
    target: np.ndarray        # (B, H)


def _gather_batch(data: list[SeriesData], origins: np.ndarray, k: int,
                  horizon: int, use_static: bool) -> WindowBatch:
    past = np.stack([data[s].past[t - k:t] for s, t in origins])
    future = np.stack([data[s].future[t - k:t + horizon] for s, t in origins])
    target = np.stack([data[s].past[t:t + horizon, 0] for s, t in origins])
    static = (np.array([data[s].node_index for s, _ in origins])
              if use_static else None)
    return WindowBatch(past, future, static, target)


VALIDATION_TAIL = 0.10  # share of the training span reserved for early stopping


def _split_origins(data: list[SeriesData], k: int, horizon: int
                   ) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    train, val = [], []
    for s, sd in enumerate(data):
        last = sd.n_train - horizon  # last origin whose target stays in train
        if last < k:
            raise WindowTooShort(
                f"series {sd.series_id!r}: training span shorter than one "
                f"window (k={k}, H={horizon})")
        boundary = sd.n_train - int(np.ceil(VALIDATION_TAIL * sd.n_train))
        boundary = min(max(boundary, k + 1), last)
        for t in range(k, last + 1):
            (train if t < boundary else val).append((s, t))
    if not val:
        val = [train.pop()]
    if not train:
        raise WindowTooShort("no training windows left after validation split")
    return train, val


def run_training(forward: Callable[[WindowBatch, bool], Tensor],
                 store: ParameterStore,
                 data: list[SeriesData],
                 k: int, horizon: int, use_static: bool,
                 batch_size: int, learning_rate: float,
                 max_epochs: int, patience: int,
                 rng: np.random.Generator) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Mini-batch Adam with early stopping; returns (best parameter data,
    per-epoch history). `forward(batch, training)` returns (B, H) predictions."""
    train_origins, val_origins = _split_origins(data, k, horizon)
    train_origins = np.array(train_origins)
    val_origins = np.array(val_origins)
    optimizer = Adam(store, lr=learning_rate)
    history: list[dict] = []
    best_val = np.inf
    best_params: dict[str, np.ndarray] = {}
    stale = 0

    def validation_loss() -> float:
        total, count = 0.0, 0
        with no_grad():
            for i in range(0, len(val_origins), batch_size):
                batch = _gather_batch(data, val_origins[i:i + batch_size],
                                      k, horizon, use_static)
                pred = forward(batch, False)
                total += float(np.mean((pred.data - batch.target) ** 2)) * len(batch.target)
                count += len(batch.target)
        return total / count

    for epoch in range(max_epochs):
        order = rng.permutation(len(train_origins))
        epoch_loss, seen = 0.0, 0
        for i in range(0, len(order), batch_size):
            batch = _gather_batch(data, train_origins[order[i:i + batch_size]],
                                  k, horizon, use_static)
            store.zero_grad()
            pred = forward(batch, True)
            loss = mse_loss(pred, batch.target)
            value = loss.item()
            if not np.isfinite(value):
                raise NonFiniteLoss(
                    f"loss became {value} at epoch {epoch}, step {i // batch_size} "
                    f"(lr={learning_rate}, batch={batch_size})")
            loss.backward()
            optimizer.step()
            epoch_loss += value * len(batch.target)
            seen += len(batch.target)
        val_loss = validation_loss()
        history.append({"epoch": epoch, "train_loss": epoch_loss / seen,
                        "val_loss": val_loss})
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_params = {name: p.data.copy() for name, p in store.items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    if best_params:
        for name, p in store.items():
            if name in best_params:
                p.data[:] = best_params[name]
    return best_params, history


def forecast_series(model: TrainedModel, values: np.ndarray,
                    target_start: datetime, unit: str = "kW",
                    series_id: str | None = None) -> Series:
    sid = series_id if series_id is not None else f"{model.kind}-forecast"
    return Series(sid, HourlyIndex(target_start, len(values)), values, unit=unit)


# --- config (de)serialization helpers ---

def config_to_dict(config) -> dict:
    return asdict(config)


def config_from_dict(kind: str, data: dict):
    classes = {"tft": TFTConfig, "lstm": LSTMConfig, "arima": ArimaConfig,
               "naive": NaiveConfig}
    cls = classes[kind]
    valid = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(data) - valid
    if unknown:
        raise ConfigError("unknown config fields", sorted(unknown))
    config = cls(**data)
    config.validate()
    return config


def write_json(path, payload: dict) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    tmp.replace(path)
