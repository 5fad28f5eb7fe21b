"""Stacked-LSTM forecaster: the past window of target plus covariates runs
through the LSTM stack and a dense head emits all H horizon values at once.
The grid-node identity (substation mode) enters as a learned embedding used
to initialize the first layer's hidden state.
"""

from __future__ import annotations

import numpy as np

from ..errors import SchemaMismatch
from ..nn import (
    ParameterStore,
    Tensor,
    dense,
    dropout as nn_dropout,
    embedding,
    lstm_unroll,
    no_grad,
)
from ..preprocess import CovariateFrame
from ..timeseries import Series, SplitSpec
from .common import (
    ForecastWindow,
    LSTMConfig,
    TrainedModel,
    WindowBatch,
    denormalize_target,
    forecast_series,
    normalize_window,
    prepare_series_data,
    run_training,
)


def lstm_forward(store: ParameterStore, config: LSTMConfig, batch: WindowBatch,
                 rng: np.random.Generator | None = None, training: bool = False,
                 n_nodes: int = 1) -> Tensor:
    k = batch.past.shape[1]
    d = config.hidden_size
    # inputs per past hour: past-known plus the future-known values observed then
    x = Tensor(np.concatenate([batch.past, batch.future[:, :k, :]], axis=2))

    h0 = c0 = None
    if batch.static is not None:
        table = store.param("embed.node", (n_nodes, d))
        h0 = embedding(table, batch.static)

    seq = x
    for layer in range(config.num_layers):
        seq, h, _ = lstm_unroll(store, f"lstm{layer}", seq, d,
                                h0=h0 if layer == 0 else None,
                                c0=c0 if layer == 0 else None)
        if layer < config.num_layers - 1:
            seq = nn_dropout(seq, config.dropout, rng, training)
    h = nn_dropout(h, config.dropout, rng, training)
    return dense(store, "head", h, config.horizon)


def lstm_train(config: LSTMConfig, frames: dict[str, CovariateFrame],
               split: SplitSpec, seed: int, level: str = "grid") -> TrainedModel:
    config.validate()
    data, normalizers, schema = prepare_series_data(frames, split)
    use_static = bool(schema.static)
    n_nodes = max(1, len(data))
    store = ParameterStore(seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]).generate_state(1)[0])

    def forward(batch: WindowBatch, training: bool) -> Tensor:
        return lstm_forward(store, config, batch, rng=rng, training=training,
                            n_nodes=n_nodes)

    _, history = run_training(
        forward, store, data, config.input_window, config.horizon, use_static,
        config.batch_size, config.learning_rate, config.max_epochs,
        config.patience, rng)

    return TrainedModel(
        kind="lstm", config=config, level=level,
        series_ids=tuple(sd.series_id for sd in data), seed=seed,
        schema=schema, normalizers=normalizers, store=store,
        history=tuple(history))


def lstm_forecast(model: TrainedModel, window: ForecastWindow) -> Series:
    if model.kind != "lstm":
        raise SchemaMismatch(f"expected an lstm model, got {model.kind!r}")
    config: LSTMConfig = model.config
    past, future = normalize_window(model, window, config.input_window,
                                    config.horizon)
    static = None
    if model.schema.static:
        idx = (window.static_index if window.static_index is not None
               else model.node_index(window.series_id))
        static = np.array([idx])
    batch = WindowBatch(past[None], future[None], static, None)
    with no_grad():
        pred = lstm_forward(model.store, config, batch, training=False,
                            n_nodes=max(1, len(model.series_ids)))
    values = denormalize_target(model, window.series_id, pred.data[0])
    return forecast_series(model, values, window.target_start,
                           series_id=window.series_id)
