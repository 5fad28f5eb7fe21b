"""Temporal fusion transformer forecaster.

Architecture: per-input-type embeddings feed three variable selection
networks (past-known, future-known, static; weights shared within each type
across positions), an LSTM encoder over the k past hours and decoder over
the H future hours, static-context enrichment, interpretable multi-head
self-attention over the combined sequence under a causal mask, a
position-wise gated residual block and a linear projection to H values.
The component internals follow the published reference design of the
architecture.
"""

from __future__ import annotations

import numpy as np

from ..errors import SchemaMismatch
from ..nn import (
    ParameterStore,
    Tensor,
    causal_mask,
    dense,
    embedding,
    gate_add_norm,
    grn,
    interpretable_mha,
    lstm_unroll,
    no_grad,
    vsn,
)
from ..preprocess import CovariateFrame
from ..timeseries import Series, SplitSpec
from .common import (
    ForecastWindow,
    TFTConfig,
    TrainedModel,
    WindowBatch,
    denormalize_target,
    forecast_series,
    normalize_window,
    prepare_series_data,
    run_training,
)


def _embed_variables(store: ParameterStore, prefix: str, block: np.ndarray,
                     width: int) -> list[Tensor]:
    """Linear per-variable embedding of each scalar column to `width`."""
    x = Tensor(block)
    return [dense(store, f"{prefix}{i}", x[:, :, i:i + 1], width)
            for i in range(block.shape[2])]


def tft_forward(store: ParameterStore, config: TFTConfig, batch: WindowBatch,
                rng: np.random.Generator | None = None, training: bool = False,
                n_nodes: int = 1) -> tuple[Tensor, dict]:
    """One forward pass over a window batch; returns ((B, H) predictions,
    inspection dict with selection and attention weights)."""
    d = config.hidden_size
    k = batch.past.shape[1]
    horizon = batch.future.shape[1] - k
    drop = config.dropout

    past_vars = _embed_variables(store, "embed.past", batch.past, d)
    future_vars = _embed_variables(store, "embed.future", batch.future, d)

    static_context = {}
    static_weights = None
    if batch.static is not None:
        table = store.param("embed.static.node", (n_nodes, d))
        static_emb = embedding(table, batch.static)
        static_encoded, static_weights = vsn(
            store, "vsn.static", [static_emb], hidden=d,
            dropout=drop, rng=rng, training=training)
        for key in ("select", "enrich", "state_h", "state_c"):
            static_context[key] = grn(store, f"static.context.{key}",
                                      static_encoded, d,
                                      dropout=drop, rng=rng, training=training)

    c_select = static_context.get("select")
    selected_past, past_weights = vsn(store, "vsn.past", past_vars, hidden=d,
                                      context=c_select, dropout=drop, rng=rng,
                                      training=training)
    selected_future, future_weights = vsn(store, "vsn.future", future_vars,
                                          hidden=d, context=c_select,
                                          dropout=drop, rng=rng, training=training)

    encoder_in = selected_past + selected_future[:, :k, :]
    decoder_in = selected_future[:, k:, :]

    h0 = static_context.get("state_h")
    c0 = static_context.get("state_c")
    enc_x, dec_x = encoder_in, decoder_in
    for layer in range(config.lstm_layers):
        enc_out, h, c = lstm_unroll(store, f"lstm.enc{layer}", enc_x, d,
                                    h0=h0 if layer == 0 else None,
                                    c0=c0 if layer == 0 else None)
        dec_out, _, _ = lstm_unroll(store, f"lstm.dec{layer}", dec_x, d,
                                    h0=h, c0=c)
        enc_x, dec_x = enc_out, dec_out

    from ..nn import concat
    selected_seq = concat([encoder_in, decoder_in], axis=1)
    lstm_seq = concat([enc_x, dec_x], axis=1)
    temporal = gate_add_norm(store, "post_lstm", selected_seq, lstm_seq,
                             dropout=drop, rng=rng, training=training)

    enriched = grn(store, "enrichment", temporal, d,
                   context=static_context.get("enrich"),
                   dropout=drop, rng=rng, training=training)

    attn_out, attn_weights = interpretable_mha(
        store, "attention", enriched, enriched, enriched,
        n_heads=config.attention_heads, mask=causal_mask(k + horizon))
    attended = gate_add_norm(store, "post_attention", enriched, attn_out,
                             dropout=drop, rng=rng, training=training)

    decoder_repr = attended[:, k:, :]
    ff = grn(store, "decoder_grn", decoder_repr, d,
             dropout=drop, rng=rng, training=training)
    final = gate_add_norm(store, "final_skip", temporal[:, k:, :], ff)
    pred = dense(store, "output", final, 1)
    pred = pred.reshape(pred.shape[0], horizon)

    info = {
        "past_weights": past_weights,
        "future_weights": future_weights,
        "static_weights": static_weights,
        "attention": attn_weights,
    }
    return pred, info


def tft_train(config: TFTConfig, frames: dict[str, CovariateFrame],
              split: SplitSpec, seed: int, level: str = "grid") -> TrainedModel:
    """Train one (possibly multi-series) forecaster on the training span."""
    config.validate()
    data, normalizers, schema = prepare_series_data(frames, split)
    use_static = bool(schema.static)
    n_nodes = max(1, len(data))
    store = ParameterStore(seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]).generate_state(1)[0])

    def forward(batch: WindowBatch, training: bool) -> Tensor:
        pred, _ = tft_forward(store, config, batch, rng=rng, training=training,
                              n_nodes=n_nodes)
        return pred

    _, history = run_training(
        forward, store, data, config.input_window, config.horizon, use_static,
        config.batch_size, config.learning_rate, config.max_epochs,
        config.patience, rng)

    return TrainedModel(
        kind="tft", config=config, level=level,
        series_ids=tuple(sd.series_id for sd in data), seed=seed,
        schema=schema, normalizers=normalizers, store=store,
        history=tuple(history))


def _window_batch(model: TrainedModel, window: ForecastWindow) -> WindowBatch:
    config: TFTConfig = model.config
    past, future = normalize_window(model, window, config.input_window,
                                    config.horizon)
    static = None
    if model.schema.static:
        idx = (window.static_index if window.static_index is not None
               else model.node_index(window.series_id))
        static = np.array([idx])
    return WindowBatch(past[None], future[None], static, None)


def tft_forecast(model: TrainedModel, window: ForecastWindow) -> Series:
    """Forecast H hourly values for one window, denormalized to raw units."""
    if model.kind != "tft":
        raise SchemaMismatch(f"expected a tft model, got {model.kind!r}")
    config: TFTConfig = model.config
    batch = _window_batch(model, window)
    with no_grad():
        pred, _ = tft_forward(model.store, config, batch, training=False,
                              n_nodes=max(1, len(model.series_ids)))
    values = denormalize_target(model, window.series_id, pred.data[0])
    return forecast_series(model, values, window.target_start,
                           series_id=window.series_id)


def tft_variable_importance(model: TrainedModel, window: ForecastWindow) -> dict:
    """Named selection weights per input type plus mean attention over the
    past positions, for one window."""
    if model.kind != "tft":
        raise SchemaMismatch(f"expected a tft model, got {model.kind!r}")
    config: TFTConfig = model.config
    batch = _window_batch(model, window)
    with no_grad():
        _, info = tft_forward(model.store, config, batch, training=False,
                              n_nodes=max(1, len(model.series_ids)))
    k = config.input_window

    def named_means(weights, names):
        if weights is None:
            return {}
        mean = weights.data.mean(axis=tuple(range(weights.ndim - 1)))
        return dict(zip(names, (float(v) for v in mean)))

    attention = info["attention"].data  # (1, heads, T, T)
    past_attention = attention[0].mean(axis=(0, 1))[:k]
    return {
        "past": named_means(info["past_weights"], model.schema.past),
        "future": named_means(info["future_weights"], model.schema.future),
        "static": named_means(info["static_weights"], model.schema.static),
        "past_attention": past_attention,
    }
