"""Layer set for the forecasters: dense, GLU, gated residual network,
variable selection network, LSTM cell/unroll and interpretable multi-head
attention.

Layers are functions over (store, name, inputs): parameters live in the
ParameterStore under `name.*` and are created on first use, shared on every
later call with the same name (this is what ties LSTM steps together and
shares variable-selection weights across time positions).
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyVariableList, ShapeMismatch
from . import autodiff as ad
from .autodiff import Tensor
from .params import ParameterStore


def dense(store: ParameterStore, name: str, x: Tensor, out_dim: int,
          bias: bool = True) -> Tensor:
    in_dim = x.shape[-1]
    w = store.param(f"{name}.W", (in_dim, out_dim))
    y = x @ w
    if bias:
        y = y + store.param(f"{name}.b", (out_dim,), init="zeros")
    return y


def glu(store: ParameterStore, name: str, x: Tensor, out_dim: int) -> Tensor:
    """Gated linear unit: sigmoid gate times linear value path."""
    gate = ad.sigmoid(dense(store, f"{name}.gate", x, out_dim))
    return gate * dense(store, f"{name}.value", x, out_dim)


def add_and_norm(store: ParameterStore, name: str, residual: Tensor,
                 x: Tensor) -> Tensor:
    dim = residual.shape[-1]
    gain = store.param(f"{name}.gain", (dim,), init="ones")
    bias = store.param(f"{name}.bias", (dim,), init="zeros")
    return ad.layer_norm(residual + x, gain, bias)


def gate_add_norm(store: ParameterStore, name: str, residual: Tensor, x: Tensor,
                  dropout: float = 0.0, rng: np.random.Generator | None = None,
                  training: bool = False) -> Tensor:
    """LayerNorm(residual + GLU(dropout(x))) — the gated skip used throughout."""
    x = ad.dropout(x, dropout, rng, training)
    gated = glu(store, f"{name}.glu", x, residual.shape[-1])
    return add_and_norm(store, f"{name}.norm", residual, gated)


def grn(store: ParameterStore, name: str, a: Tensor, hidden: int,
        out_dim: int | None = None, context: Tensor | None = None,
        dropout: float = 0.0, rng: np.random.Generator | None = None,
        training: bool = False) -> Tensor:
    """Gated residual network.

    output = LayerNorm(skip(a) + GLU(dense2(ELU(dense1(a) + dense_c(context)))))
    with dropout applied inside the gate path during training only. The
    residual goes through a bias-free projection when dimensions change.
    """
    out_dim = out_dim if out_dim is not None else a.shape[-1]
    residual = a
    if a.shape[-1] != out_dim:
        residual = dense(store, f"{name}.skip", a, out_dim, bias=False)

    h = dense(store, f"{name}.fc1", a, hidden)
    if context is not None:
        if context.ndim == a.ndim - 1:
            context = ad.reshape(context, context.shape[:-1] + (1,) + context.shape[-1:])
        h = h + dense(store, f"{name}.ctx", context, hidden, bias=False)
    h = ad.elu(h)
    h = dense(store, f"{name}.fc2", h, out_dim)
    return gate_add_norm(store, f"{name}", residual, h,
                         dropout=dropout, rng=rng, training=training)


def vsn(store: ParameterStore, name: str, variables: list[Tensor],
        hidden: int, context: Tensor | None = None, dropout: float = 0.0,
        rng: np.random.Generator | None = None,
        training: bool = False) -> tuple[Tensor, Tensor]:
    """Variable selection network.

    Each variable arrives embedded to `hidden`; selection weights come from
    a GRN over the flattened embeddings (softmax over variables, per
    position) and the combined output is the weight-blended sum of the
    per-variable GRN transforms. Returns (combined, weights); weights rows
    are probability simplices, exposed for importance inspection.
    """
    if not variables:
        raise EmptyVariableList("variable selection needs at least one input")
    for v in variables:
        if v.shape[-1] != hidden:
            raise ShapeMismatch(
                f"variable embedded to {v.shape[-1]}, expected {hidden}")
    n_vars = len(variables)
    flat = ad.concat(variables, axis=-1)
    logits = grn(store, f"{name}.select", flat, hidden, out_dim=n_vars,
                 context=context, dropout=dropout, rng=rng, training=training)
    weights = ad.masked_softmax(logits)

    combined = None
    for i, v in enumerate(variables):
        transformed = grn(store, f"{name}.var{i}", v, hidden,
                          dropout=dropout, rng=rng, training=training)
        term = weights[..., i:i + 1] * transformed
        combined = term if combined is None else combined + term
    return combined, weights


def lstm_cell(store: ParameterStore, name: str, x: Tensor, h_prev: Tensor,
              c_prev: Tensor) -> tuple[Tensor, Tensor]:
    """Standard LSTM cell; gate order i, f, o, g in one fused projection
    (the three sigmoid gates share a single activation call)."""
    in_dim = x.shape[-1]
    d = h_prev.shape[-1]
    wx = store.param(f"{name}.Wx", (in_dim, 4 * d))
    wh = store.param(f"{name}.Wh", (d, 4 * d))
    b = store.param(f"{name}.b", (4 * d,), init="zeros")
    z = x @ wx + h_prev @ wh + b
    gates = ad.sigmoid(z[..., :3 * d])
    i = gates[..., 0 * d:1 * d]
    f = gates[..., 1 * d:2 * d]
    o = gates[..., 2 * d:3 * d]
    g = ad.tanh(z[..., 3 * d:])
    c = f * c_prev + i * g
    h = o * ad.tanh(c)
    return h, c


def lstm_unroll(store: ParameterStore, name: str, xs: Tensor, hidden: int,
                h0: Tensor | None = None, c0: Tensor | None = None
                ) -> tuple[Tensor, Tensor, Tensor]:
    """Run one LSTM layer over (batch, time, features); parameters are
    shared across time. Returns (outputs (B,T,d), h_T, c_T)."""
    batch, steps = xs.shape[0], xs.shape[1]
    if h0 is None:
        h0 = Tensor(np.zeros((batch, hidden)))
    if c0 is None:
        c0 = Tensor(np.zeros((batch, hidden)))
    h, c = h0, c0
    outputs = []
    for t in range(steps):
        h, c = lstm_cell(store, name, xs[:, t, :], h, c)
        outputs.append(ad.reshape(h, (batch, 1, hidden)))
    return ad.concat(outputs, axis=1), h, c


def causal_mask(length: int) -> np.ndarray:
    """Boolean (length, length) mask, True where key position <= query position."""
    return np.tril(np.ones((length, length), dtype=bool))


def interpretable_mha(store: ParameterStore, name: str, q: Tensor, k: Tensor,
                      v: Tensor, n_heads: int,
                      mask: np.ndarray | None = None
                      ) -> tuple[Tensor, Tensor]:
    """Multi-head attention with a single value projection shared across
    heads; head outputs are averaged before the output projection, so the
    mean attention pattern is a single importance distribution.

    Returns (output (B,Tq,d), weights (B,heads,Tq,Tk)).
    """
    d = q.shape[-1]
    if d % n_heads:
        raise ShapeMismatch(f"width {d} not divisible by {n_heads} heads")
    d_head = d // n_heads
    scale = 1.0 / np.sqrt(d_head)

    shared_v = dense(store, f"{name}.v", v, d_head, bias=False)
    head_weights = []
    head_outputs = []
    for h in range(n_heads):
        qh = dense(store, f"{name}.q{h}", q, d_head, bias=False)
        kh = dense(store, f"{name}.k{h}", k, d_head, bias=False)
        scores = (qh @ kh.swapaxes(-1, -2)) * scale
        weights = ad.masked_softmax(scores, mask)
        head_weights.append(weights)
        head_outputs.append(weights @ shared_v)

    mean_heads = head_outputs[0]
    for extra in head_outputs[1:]:
        mean_heads = mean_heads + extra
    mean_heads = mean_heads * (1.0 / n_heads)
    output = dense(store, f"{name}.out", mean_heads, d, bias=False)
    return output, ad.stack(head_weights, axis=1)
