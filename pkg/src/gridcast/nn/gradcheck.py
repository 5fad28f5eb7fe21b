"""Central finite-difference verification of recorded gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor
from .params import ParameterStore


def grad_check(fn: Callable[[], Tensor], store: ParameterStore,
               eps: float = 1e-5, max_coords_per_param: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Max relative error between recorded gradients and central differences.

    `fn` must be a deterministic scalar-valued closure over the store's
    parameters (dropout disabled). When `max_coords_per_param` is set, a
    deterministic random subset of coordinates is perturbed per tensor;
    otherwise every coordinate is checked. Relative error uses the
    max(1e-8, |analytic| + |numeric|) denominator.
    """
    if eps <= 0:
        raise ValueError("finite-difference step eps must be positive")
    if rng is None:
        rng = np.random.default_rng(0)

    store.zero_grad()
    loss = fn()
    loss.backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in store.items()}

    worst = 0.0
    for name, p in store.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        grad_flat = analytic[name].reshape(-1)
        for i in coords:
            original = flat[i]
            flat[i] = original + eps
            f_plus = fn().item()
            flat[i] = original - eps
            f_minus = fn().item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(1e-8, abs(grad_flat[i]) + abs(numeric))
            worst = max(worst, abs(grad_flat[i] - numeric) / denom)
    return worst
