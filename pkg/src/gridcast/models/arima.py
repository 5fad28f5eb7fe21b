"""ARIMA(p, d, q) fitted by conditional least squares.

The series is differenced d times; AR/MA coefficients and the mean are then
estimated by minimizing the summed squared one-step innovations, computed
recursively with pre-sample residuals fixed at zero (the conditional
convention). Minimization runs through scipy's Levenberg-Marquardt
least-squares driver; forecasting extends the recursion with future
innovations set to zero and inverts the differencing.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy.optimize import least_squares

from ..errors import NonConvergence, SchemaMismatch, SeriesTooShort
from ..timeseries import HourlyIndex, Series
from .common import ArimaConfig, TrainedModel, forecast_series

MAX_ITERATIONS = 200


@dataclass(frozen=True)
class ArimaParameters:
    mu: float
    phi: tuple[float, ...]
    theta: tuple[float, ...]
    d: int
    history: tuple[float, ...]   # the series the model was fitted on
    history_start: datetime
    unit: str

    def to_jsonable(self) -> dict:
        return {
            "mu": self.mu,
            "phi": list(self.phi),
            "theta": list(self.theta),
            "d": self.d,
            "history": list(self.history),
            "history_start": self.history_start.isoformat(),
            "unit": self.unit,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "ArimaParameters":
        return cls(
            mu=float(data["mu"]),
            phi=tuple(data["phi"]),
            theta=tuple(data["theta"]),
            d=int(data["d"]),
            history=tuple(data["history"]),
            history_start=datetime.fromisoformat(data["history_start"]),
            unit=data["unit"],
        )


def _innovations(w: np.ndarray, mu: float, phi: np.ndarray,
                 theta: np.ndarray) -> np.ndarray:
    """One-step innovations with zero pre-sample residuals; e[t] for t < p is 0."""
    p, q = len(phi), len(theta)
    wc = w - mu
    n = len(wc)
    base = wc.copy()
    for i in range(p):
        base[p:] -= phi[i] * wc[p - 1 - i:n - 1 - i]
    e = np.zeros(n)
    if q == 0:
        e[p:] = base[p:]
        return e
    for t in range(p, n):
        acc = base[t]
        for j in range(q):
            idx = t - 1 - j
            if idx >= 0:
                acc -= theta[j] * e[idx]
        e[t] = acc
    return e


def _difference(values: np.ndarray, d: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Apply d-fold differencing, keeping the tail values needed to invert."""
    tails = []
    w = np.asarray(values, dtype=np.float64)
    for _ in range(d):
        tails.append(w[-1:].copy())
        w = np.diff(w)
    return w, tails


def fit_arima_values(values: np.ndarray, config: ArimaConfig) -> tuple[float, np.ndarray, np.ndarray]:
    """Estimate (mu, phi, theta) on a value array by conditional least squares."""
    config.validate()
    p, d, q = config.p, config.d, config.q
    w, _ = _difference(values, d)
    min_len = 2 * p + q + 2
    if len(w) < min_len:
        raise SeriesTooShort(
            f"{len(values)} values after d={d} differencing leave {len(w)} "
            f"points; order (p={p}, q={q}) needs at least {min_len}")

    mu0 = float(np.mean(w))
    phi0 = np.zeros(p)
    if p > 0:
        wc = w - mu0
        rows = np.column_stack([wc[p - 1 - i:len(wc) - 1 - i] for i in range(p)])
        phi0, *_ = np.linalg.lstsq(rows, wc[p:], rcond=None)
    x0 = np.concatenate([[mu0], phi0, np.zeros(q)])

    if p + q == 0:
        # pure differencing with drift: least squares gives the plain mean
        return mu0, np.empty(0), np.empty(0)

    def residuals(params):
        mu = params[0]
        phi = params[1:1 + p]
        theta = params[1 + p:]
        return _innovations(w, mu, phi, theta)[p:]

    result = least_squares(residuals, x0, method="lm", max_nfev=MAX_ITERATIONS * len(x0))
    if result.status <= 0:
        raise NonConvergence(
            f"conditional least squares did not converge (status {result.status})")
    mu = float(result.x[0])
    return mu, result.x[1:1 + p].copy(), result.x[1 + p:].copy()


def arima_fit(series: Series, config: ArimaConfig) -> TrainedModel:
    """Fit one ARIMA model to one series (its training span)."""
    mu, phi, theta = fit_arima_values(series.values, config)
    params = ArimaParameters(
        mu=mu, phi=tuple(float(v) for v in phi),
        theta=tuple(float(v) for v in theta), d=config.d,
        history=tuple(float(v) for v in series.values),
        history_start=series.index.start, unit=series.unit)
    return TrainedModel(
        kind="arima", config=config, level="grid", series_ids=(series.id,),
        seed=0, arima_coefficients={series.id: params.to_jsonable()})


def forecast_values(params: ArimaParameters, history: np.ndarray,
                    steps: int) -> np.ndarray:
    """Recursive forecast continuing an arbitrary history under the fitted
    coefficients; future innovations are zero, differencing is inverted."""
    phi = np.asarray(params.phi)
    theta = np.asarray(params.theta)
    p, q = len(phi), len(theta)
    w, tails = _difference(np.asarray(history, dtype=np.float64), params.d)
    if len(w) < max(p, q, 1):
        raise SeriesTooShort(
            f"history of {len(history)} values cannot seed order "
            f"(p={p}, q={q}, d={params.d})")
    e = _innovations(w, params.mu, phi, theta)

    wc_ext = list(w - params.mu)
    e_ext = list(e)
    out = np.empty(steps)
    for h in range(steps):
        acc = params.mu
        for i in range(p):
            acc += phi[i] * wc_ext[-1 - i]
        for j in range(q):
            idx = len(e_ext) - 1 - j
            if idx < len(e):  # only observed innovations contribute
                acc += theta[j] * e_ext[idx]
        out[h] = acc
        wc_ext.append(acc - params.mu)
        e_ext.append(0.0)

    # invert differencing, innermost level first
    for tail in reversed(tails):
        out = tail[0] + np.cumsum(out)
    return out


def arima_forecast(model: TrainedModel, steps: int) -> Series:
    """Extend the fitted series by `steps` hours."""
    if model.kind != "arima":
        raise SchemaMismatch(f"expected an arima model, got {model.kind!r}")
    (sid,) = model.series_ids
    params = ArimaParameters.from_jsonable(model.arima_coefficients[sid])
    history = np.asarray(params.history)
    values = forecast_values(params, history, steps)
    start = HourlyIndex(params.history_start, len(history)).end
    return Series(sid, HourlyIndex(start, steps), values, unit=params.unit)
