"""Additive Holt-Winters smoothing, parameter search and backtest scoring.

Annual series have no seasonal period, so by default the model is Holt's
linear (level + trend) method.  Seasonal offsets are available through
``SmoothingParams.seasonal_period``.

Non-seasonal recursions, for t = 2..n::

    prediction_t = level_{t-1} + trend_{t-1}
    level_t      = alpha * y_t + (1 - alpha) * (level_{t-1} + trend_{t-1})
    trend_t      = beta * (level_t - level_{t-1}) + (1 - beta) * trend_{t-1}

with level_1 = y_1 and trend_1 = mean of the first min(3, n-1) first
differences.  The seasonal variant initialises from the first full season
and starts predicting at t = m + 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .emissions import SectorSeries, split_train_test
from .errors import ArgumentError, NumericError, UndefinedMetricError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoothingParams:
    alpha: float
    beta: float
    gamma: float | None = None
    seasonal_period: int | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1], got {value!r}")
        if (self.gamma is None) != (self.seasonal_period is None):
            raise ArgumentError("gamma and seasonal_period must be given together")
        if self.seasonal_period is not None and self.seasonal_period < 2:
            raise ArgumentError("seasonal_period must be at least 2")

    @property
    def seasonal(self) -> bool:
        return self.seasonal_period is not None

    def as_dict(self) -> dict:
        out = {"alpha": self.alpha, "beta": self.beta}
        if self.seasonal:
            out.update(gamma=self.gamma, seasonal_period=self.seasonal_period)
        return out


@dataclass(frozen=True)
class SmoothingState:
    """Filter state after the last observation.

    ``seasonal[j]`` is the offset for ``last_year - m + 1 + j``, so the
    forecast ``h`` steps ahead uses ``seasonal[(h - 1) % m]``.
    """

    level: float
    trend: float
    last_year: int
    seasonal: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.level) and math.isfinite(self.trend)):
            raise NumericError(f"non-finite state: level={self.level}, trend={self.trend}")
        if self.seasonal is not None and not math.isfinite(math.fsum(self.seasonal)):
            raise NumericError("non-finite seasonal offsets")


@dataclass(frozen=True)
class FitResult:
    fitted: list[tuple[int, float]]
    state: SmoothingState
    sse: float
    levels: list[float] = field(default_factory=list)
    trends: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class OptimizerConfig:
    grid_steps: int = 21
    refine: bool = True
    seasonal_period: int | None = None
    max_iter: int = 400

    def __post_init__(self):
        if self.grid_steps < 2:
            raise ArgumentError("grid_steps must be at least 2")


def _check(value: float, what: str, year: int) -> float:
    if not math.isfinite(value):
        raise NumericError(f"non-finite {what} at {year}")
    return value


def hw_fit_filter(
    train: SectorSeries,
    params: SmoothingParams,
    initial: tuple[float, float] | None = None,
) -> FitResult:
    """Run the smoothing recursions over ``train``.

    ``initial`` overrides the (level, trend) initialisation of the
    non-seasonal model; it is mainly useful for checking the degenerate
    level-only case.
    """
    if params.seasonal:
        return _fit_seasonal(train, params)
    y, years = train.values, train.years
    n = len(y)
    if n < 2:
        raise ArgumentError(f"series too short for smoothing ({n} < 2 observations)")
    alpha, beta = params.alpha, params.beta
    if initial is None:
        k = min(3, n - 1)
        level, trend = y[0], (y[k] - y[0]) / k
    else:
        level, trend = map(float, initial)

    fitted, levels, trends = [], [level], [trend]
    sse = 0.0
    for t in range(1, n):
        pred = level + trend
        err = y[t] - pred
        sse += err * err
        new_level = alpha * y[t] + (1.0 - alpha) * pred
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
        _check(level, "level", years[t])
        _check(trend, "trend", years[t])
        fitted.append((years[t], pred))
        levels.append(level)
        trends.append(trend)
    _check(sse, "sse", years[-1])
    state = SmoothingState(level, trend, years[-1])
    return FitResult(fitted, state, sse, levels, trends)


def _fit_seasonal(train: SectorSeries, params: SmoothingParams) -> FitResult:
    y, years = train.values, train.years
    m = params.seasonal_period
    n = len(y)
    if n < 2 * m:
        raise ArgumentError(
            f"series too short for seasonal period {m} ({n} < {2 * m} observations)"
        )
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    first = math.fsum(y[:m]) / m
    second = math.fsum(y[m:2 * m]) / m
    level, trend = first, (second - first) / m
    season = [y[i] - first for i in range(m)]

    fitted, levels, trends = [], [level], [trend]
    sse = 0.0
    for t in range(m, n):
        s_old = season[t - m]
        pred = level + trend + s_old
        err = y[t] - pred
        sse += err * err
        new_level = alpha * (y[t] - s_old) + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
        season.append(gamma * (y[t] - level) + (1.0 - gamma) * s_old)
        _check(level, "level", years[t])
        _check(trend, "trend", years[t])
        _check(season[-1], "seasonal offset", years[t])
        fitted.append((years[t], pred))
        levels.append(level)
        trends.append(trend)
    _check(sse, "sse", years[-1])
    state = SmoothingState(level, trend, years[-1], tuple(season[-m:]))
    return FitResult(fitted, state, sse, levels, trends)


def hw_forecast(state: SmoothingState, horizon: int) -> list[tuple[int, float]]:
    if not isinstance(horizon, (int, np.integer)) or horizon < 1:
        raise ArgumentError(f"horizon must be a positive integer, got {horizon!r}")
    out = []
    for h in range(1, int(horizon) + 1):
        value = state.level + h * state.trend
        if state.seasonal is not None:
            value += state.seasonal[(h - 1) % len(state.seasonal)]
        out.append((state.last_year + h, value))
    return out


def _make_params(x: Sequence[float], seasonal_period: int | None) -> SmoothingParams:
    if seasonal_period is None:
        return SmoothingParams(float(x[0]), float(x[1]))
    return SmoothingParams(float(x[0]), float(x[1]), float(x[2]), seasonal_period)


def grid_search(
    train: SectorSeries, grid_steps: int = 21, seasonal_period: int | None = None
) -> tuple[SmoothingParams, float]:
    """Best point of a uniform grid over the unit square (cube if seasonal).

    Points are visited in ascending (alpha, beta[, gamma]) order and only a
    strictly smaller sse replaces the incumbent, so ties go to smaller alpha,
    then smaller beta.
    """
    axis = np.linspace(0.0, 1.0, grid_steps)
    gammas = axis if seasonal_period is not None else [None]
    best, best_sse = None, math.inf
    for a in axis:
        for b in axis:
            for g in gammas:
                x = (a, b) if g is None else (a, b, g)
                params = _make_params(x, seasonal_period)
                try:
                    sse = hw_fit_filter(train, params).sse
                except NumericError:
                    continue
                if sse < best_sse:
                    best, best_sse = params, sse
    if best is None:
        raise NumericError("every grid point produced a non-finite fit")
    return best, best_sse


def fit_params(
    train: SectorSeries, config: OptimizerConfig | None = None
) -> tuple[SmoothingParams, SmoothingState, float]:
    """Minimise one-step sse: coarse grid, then bounded Nelder-Mead refinement.

    The refined point is kept only when it strictly improves on the grid
    optimum, so the result never does worse than the grid.
    """
    config = config or OptimizerConfig()
    period = config.seasonal_period
    # surface argument errors (short series) before the search swallows them
    hw_fit_filter(train, _make_params((0.5, 0.5, 0.5), period))

    params, sse = grid_search(train, config.grid_steps, period)
    if config.refine and sse > 0.0:
        def objective(x):
            x = np.clip(x, 0.0, 1.0)
            try:
                return hw_fit_filter(train, _make_params(x, period)).sse
            except NumericError:
                return math.inf

        x0 = [params.alpha, params.beta] + ([params.gamma] if period else [])
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * len(x0),
            options={"maxiter": config.max_iter, "xatol": 1e-8, "fatol": 1e-12 * max(sse, 1.0)},
        )
        x = np.clip(res.x, 0.0, 1.0)
        refined = _make_params(x, period)
        refined_sse = hw_fit_filter(train, refined).sse
        if refined_sse < sse:
            params, sse = refined, refined_sse
    result = hw_fit_filter(train, params)
    return params, result.state, result.sse


def _paired(actual: Sequence[float], predicted: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.ndim != 1 or a.shape != p.shape:
        raise ArgumentError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise ArgumentError("empty inputs")
    return a, p


def error_rate(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Sum of absolute errors divided by the sum of actual values."""
    a, p = _paired(actual, predicted)
    total = math.fsum(a)
    if total <= 0.0:
        raise UndefinedMetricError("error rate undefined: sum of actual values is not positive")
    return math.fsum(np.abs(a - p)) / total


def error_stddev(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Population (1/n) standard deviation of errors actual - predicted."""
    a, p = _paired(actual, predicted)
    errors = a - p
    mu = math.fsum(errors) / errors.size
    return math.sqrt(math.fsum((errors - mu) ** 2) / errors.size)


@dataclass(frozen=True)
class BacktestReport:
    sector: str
    params: SmoothingParams
    sse: float
    error_rate: float
    error_stddev_abs: float
    error_stddev_relative: float
    per_year_errors: list[tuple[int, float]]
    actual: list[tuple[int, float]]
    predicted: list[tuple[int, float]]
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "sector": self.sector,
            "params": self.params.as_dict(),
            "sse": self.sse,
            "error_rate": self.error_rate,
            "error_stddev_abs": self.error_stddev_abs,
            "error_stddev_relative": self.error_stddev_relative,
            "per_year_errors": [
                {"year": y, "actual": a, "predicted": p, "error": e}
                for (y, a), (_, p), (_, e) in zip(self.actual, self.predicted, self.per_year_errors)
            ],
            "warnings": list(self.warnings),
        }


def negative_forecast_warnings(path: Sequence[tuple[int, float]]) -> list[str]:
    return [f"negative forecast {value:.6g} t in {year}" for year, value in path if value < 0]


def backtest(
    series: SectorSeries, holdout: int = 6, config: OptimizerConfig | None = None
) -> BacktestReport:
    """Fit on all but the last ``holdout`` years and score the forecast of them."""
    if len(series) <= holdout + 2:
        raise ArgumentError(
            f"{series.sector}: backtest needs more than holdout + 2 = {holdout + 2} years, "
            f"got {len(series)}"
        )
    train, test = split_train_test(series, holdout)
    params, state, sse = fit_params(train, config)
    predicted = hw_forecast(state, holdout)
    actual = test.items()
    a = [v for _, v in actual]
    p = [v for _, v in predicted]
    errors = [(y, av - pv) for (y, av), (_, pv) in zip(actual, predicted)]
    rate = error_rate(a, p)
    std_abs = error_stddev(a, p)
    warnings = negative_forecast_warnings(predicted)
    for w in warnings:
        log.warning("%s backtest: %s", series.sector, w)
    return BacktestReport(
        sector=series.sector,
        params=params,
        sse=sse,
        error_rate=rate,
        error_stddev_abs=std_abs,
        error_stddev_relative=std_abs / (math.fsum(a) / len(a)),
        per_year_errors=errors,
        actual=actual,
        predicted=predicted,
        warnings=warnings,
    )


def forecast_series(
    series: SectorSeries, horizon: int, config: OptimizerConfig | None = None
) -> tuple[SmoothingParams, float, list[tuple[int, float]]]:
    """Fit on the whole series and extrapolate ``horizon`` years past its end."""
    params, state, sse = fit_params(series, config)
    return params, sse, hw_forecast(state, horizon)
