"""Error metrics, per-window evaluation reports, Welch-test comparison and
random hyperparameter search.

SMAPE uses the half-sum denominator (0-200% range): with near-opposite
actuals and forecasts the statistic exceeds 100, which is the variant the
reported baseline errors require. Cohen's d is the unsigned standardized
mean difference with the pooled standard deviation; direction comes from
the t statistic's sign (computed as mean(a) - mean(b)).
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import betainc

from .errors import (
    BudgetExceedsSpace,
    DegenerateVariance,
    NoWindows,
    WindowSetMismatch,
    ZeroActual,
)
from .timeseries import EvalWindow, Series

METRIC_NAMES = ("rmse", "mape", "smape")


def _check_pair(y, p) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1 or y.size < 1:
        raise ValueError(f"metric inputs must be equal-length vectors, "
                         f"got {y.shape} and {p.shape}")
    return y, p


def rmse(y, p) -> float:
    y, p = _check_pair(y, p)
    return float(np.sqrt(np.mean((p - y) ** 2)))


def mape(y, p) -> float:
    """Mean absolute percentage error (percent); undefined at zero actuals."""
    y, p = _check_pair(y, p)
    if (y == 0).any():
        raise ZeroActual("MAPE undefined: actual vector contains zero")
    return float(100.0 * np.mean(np.abs(p - y) / np.abs(y)))


def smape(y, p) -> float:
    """Symmetric MAPE with half-sum denominator, range 0-200 percent."""
    y, p = _check_pair(y, p)
    denom = (np.abs(y) + np.abs(p)) / 2.0
    ratio = np.zeros_like(denom)
    nonzero = denom > 0
    ratio[nonzero] = np.abs(p - y)[nonzero] / denom[nonzero]
    return float(100.0 * np.mean(ratio))


# --- per-window evaluation ---

@dataclass(frozen=True)
class EvalReport:
    """Per-window metric vectors plus their mean and sample std."""

    model_id: str
    dataset_id: str
    level: str              # grid | hierarchical | substation
    horizon_kind: str       # day | week
    window_starts: tuple[datetime, ...]
    rmse_values: np.ndarray
    mape_values: np.ndarray
    smape_values: np.ndarray
    single_window: bool = False

    @property
    def n_windows(self) -> int:
        return len(self.window_starts)

    def metric(self, name: str) -> np.ndarray:
        return getattr(self, f"{name}_values")

    def mean(self, name: str) -> float:
        return float(np.mean(self.metric(name)))

    def std(self, name: str) -> float:
        values = self.metric(name)
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def summary(self) -> dict:
        return {
            "model": self.model_id,
            "dataset": self.dataset_id,
            "level": self.level,
            "horizon": self.horizon_kind,
            "n_windows": self.n_windows,
            "single_window": self.single_window,
            "metrics": {name: {"mean": self.mean(name), "std": self.std(name)}
                        for name in METRIC_NAMES},
        }

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["window", "target_start", "rmse", "mape", "smape"])
            for i, start in enumerate(self.window_starts):
                w.writerow([i, start.isoformat(),
                            repr(float(self.rmse_values[i])),
                            repr(float(self.mape_values[i])),
                            repr(float(self.smape_values[i]))])

    @classmethod
    def read_csv(cls, path, model_id="", dataset_id="", level="",
                 horizon_kind="") -> "EvalReport":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        starts, r, m, s = [], [], [], []
        for row in rows[1:]:
            if not row:
                continue
            starts.append(datetime.fromisoformat(row[1]))
            r.append(float(row[2]))
            m.append(float(row[3]))
            s.append(float(row[4]))
        return cls(model_id, dataset_id, level, horizon_kind, tuple(starts),
                   np.array(r), np.array(m), np.array(s),
                   single_window=len(starts) == 1)


def evaluate_windows(forecast_fn: Callable[[EvalWindow], np.ndarray],
                     windows: Sequence[EvalWindow], truth: Series,
                     model_id: str = "", dataset_id: str = "",
                     level: str = "grid") -> EvalReport:
    """Compute RMSE/MAPE/SMAPE per window, then mean and sample std across
    windows. `forecast_fn` returns the H predicted values for a window."""
    if not windows:
        raise NoWindows("evaluation over an empty window set")
    kinds = {w.kind for w in windows}
    if len(kinds) != 1:
        raise ValueError("windows mix day and week horizons")
    r, m, s, starts = [], [], [], []
    for window in windows:
        actual = truth.window(window.target_start, window.target_length)
        predicted = np.asarray(forecast_fn(window), dtype=np.float64)
        r.append(rmse(actual, predicted))
        m.append(mape(actual, predicted))
        s.append(smape(actual, predicted))
        starts.append(window.target_start)
    return EvalReport(model_id, dataset_id, level, kinds.pop(), tuple(starts),
                      np.array(r), np.array(m), np.array(s),
                      single_window=len(windows) == 1)


# --- statistical comparison ---

@dataclass(frozen=True)
class SignificanceResult:
    t: float
    df: float
    p: float
    d: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int

    def to_jsonable(self) -> dict:
        return {"t": self.t, "df": self.df, "p": self.p, "cohens_d": self.d,
                "mean_a": self.mean_a, "mean_b": self.mean_b,
                "n_a": self.n_a, "n_b": self.n_b}


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided Student-t tail probability via the regularized incomplete
    beta function: P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)."""
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def welch_ttest(a, b) -> SignificanceResult:
    """Welch's unequal-variance t-test plus Cohen's d (pooled SD, unsigned)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    na, nb = a.size, b.size
    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    if va == 0.0 and vb == 0.0:
        raise DegenerateVariance("both samples have zero variance")
    sa, sb = va / na, vb / nb
    t = float((a.mean() - b.mean()) / np.sqrt(sa + sb))
    df = float((sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1)))
    p = student_t_sf2(t, df)
    pooled = np.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    d = float(abs(a.mean() - b.mean()) / pooled) if pooled > 0 else 0.0
    return SignificanceResult(t=t, df=df, p=p, d=d,
                              mean_a=float(a.mean()), mean_b=float(b.mean()),
                              n_a=na, n_b=nb)


def compare_reports(a: EvalReport, b: EvalReport) -> SignificanceResult:
    """Welch test on the per-window MAPE vectors of two reports covering the
    same window set."""
    if a.window_starts != b.window_starts:
        raise WindowSetMismatch(
            f"reports cover different windows ({a.n_windows} vs {b.n_windows})")
    if np.array_equal(a.mape_values, b.mape_values):
        # identical vectors: no effect by definition
        return SignificanceResult(t=0.0, df=float(2 * (a.n_windows - 1)), p=1.0,
                                  d=0.0, mean_a=a.mean("mape"),
                                  mean_b=b.mean("mape"), n_a=a.n_windows,
                                  n_b=b.n_windows)
    return welch_ttest(a.mape_values, b.mape_values)


# --- random hyperparameter search ---

@dataclass(frozen=True)
class SearchSpace:
    """Named discrete value lists to sample configurations from."""

    values: dict[str, list]
    budget: int
    seed: int

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        for name, options in self.values.items():
            if not options:
                raise ValueError(f"empty value list for {name!r}")

    def size(self) -> int:
        size = 1
        for options in self.values.values():
            size *= len(options)
        return size


@dataclass(frozen=True)
class TrialResult:
    index: int
    config: dict
    seed: int
    score: float   # validation MAPE (percent)
    runtime_s: float


def trial_seed(seed: int, index: int) -> int:
    """Stable per-trial RNG seed derived from (search seed, trial index)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def sample_configurations(space: SearchSpace) -> list[dict]:
    """Uniform draws from the value lists; duplicate configurations are
    rejected while distinct ones remain, then allowed with a warning."""
    rng = np.random.default_rng(space.seed)
    names = sorted(space.values)
    allow_repeats = space.budget > space.size()
    if allow_repeats:
        warnings.warn(
            f"budget {space.budget} exceeds the {space.size()} distinct "
            "configurations; repeats allowed", BudgetExceedsSpace, stacklevel=2)
    configs: list[dict] = []
    seen: set[tuple] = set()
    while len(configs) < space.budget:
        config = {name: space.values[name][rng.integers(len(space.values[name]))]
                  for name in names}
        key = tuple(config[name] for name in names)
        if key in seen and not allow_repeats:
            continue
        seen.add(key)
        configs.append(config)
    return configs


def random_search(space: SearchSpace,
                  train_fn: Callable[[dict, int], object],
                  eval_fn: Callable[[object], float]) -> list[TrialResult]:
    """Train one model per sampled configuration and rank by validation MAPE
    (ascending). Deterministic for a fixed space seed."""
    trials = []
    for index, config in enumerate(sample_configurations(space)):
        seed = trial_seed(space.seed, index)
        started = time.perf_counter()
        model = train_fn(config, seed)
        score = float(eval_fn(model))
        trials.append(TrialResult(index=index, config=config, seed=seed,
                                  score=score,
                                  runtime_s=time.perf_counter() - started))
    return sorted(trials, key=lambda t: (t.score, t.index))
