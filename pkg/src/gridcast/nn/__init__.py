"""Minimal reverse-mode differentiable compute for the forecasters."""

from .autodiff import (
    Tensor,
    as_tensor,
    concat,
    dropout,
    elu,
    embedding,
    exp,
    layer_norm,
    masked_softmax,
    no_grad,
    sigmoid,
    stack,
    tanh,
)
from .gradcheck import grad_check
from .layers import (
    add_and_norm,
    causal_mask,
    dense,
    gate_add_norm,
    glu,
    grn,
    interpretable_mha,
    lstm_cell,
    lstm_unroll,
    vsn,
)
from .optim import Adam, mse_loss
from .params import ParameterStore

__all__ = [
    "Adam",
    "ParameterStore",
    "Tensor",
    "add_and_norm",
    "as_tensor",
    "causal_mask",
    "concat",
    "dense",
    "dropout",
    "elu",
    "embedding",
    "exp",
    "gate_add_norm",
    "glu",
    "grad_check",
    "grn",
    "interpretable_mha",
    "layer_norm",
    "lstm_cell",
    "lstm_unroll",
    "masked_softmax",
    "mse_loss",
    "no_grad",
    "sigmoid",
    "stack",
    "tanh",
    "vsn",
]
