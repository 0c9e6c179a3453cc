import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from canopy_plan.emissions import SectorSeries
from canopy_plan.errors import ArgumentError, NumericError, UndefinedMetricError
from canopy_plan.forecast import (
    OptimizerConfig,
    SmoothingParams,
    SmoothingState,
    backtest,
    error_rate,
    error_stddev,
    fit_params,
    grid_search,
    hw_fit_filter,
    hw_forecast,
)

HAND = [10.0, 12.0, 15.0, 14.0, 18.0, 21.0, 20.0, 25.0]
# Frozen from oracles.holt_step_table(HAND, 0.5, 0.3, 10.0, 4/3)
HAND_LEVELS = [10.0, 11.666666666666668, 14.05, 14.884166666666667, 17.168625,
               19.935560416666668, 20.9786940625, 23.853456776041668]
HAND_TRENDS = [1.3333333333333333, 1.4333333333333331, 1.7183333333333328, 1.4530833333333326,
               1.7024958333333324, 2.0218277083333325, 1.7282194895833323, 2.0721824567708325]
HAND_SSE = 23.567925020499686
HAND_NEXT3 = [25.9256392328125, 27.997821689583333, 30.070004146354165]


def series(values, first=1990, sector="cement"):
    return SectorSeries(sector, tuple(range(first, first + len(values))), tuple(values))


def test_hand_series_matches_step_table():
    fit = hw_fit_filter(series(HAND), SmoothingParams(0.5, 0.3))
    np.testing.assert_allclose(fit.levels, HAND_LEVELS, rtol=1e-9)
    np.testing.assert_allclose(fit.trends, HAND_TRENDS, rtol=1e-9)
    assert fit.sse == pytest.approx(HAND_SSE, rel=1e-9)
    assert [y for y, _ in fit.fitted] == list(range(1991, 1998))
    path = hw_forecast(fit.state, 3)
    assert [y for y, _ in path] == [1998, 1999, 2000]
    np.testing.assert_allclose([v for _, v in path], HAND_NEXT3, rtol=1e-9)


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (0.3, 0.7), (1.0, 1.0), (0.5, 0.0)])
def test_constant_series_is_fixed_point(alpha, beta):
    fit = hw_fit_filter(series([42.0] * 9), SmoothingParams(alpha, beta))
    assert fit.state.level == 42.0 and fit.state.trend == 0.0
    assert all(v == 42.0 for _, v in fit.fitted)
    assert fit.sse == 0.0


def test_exact_line_alpha_beta_one():
    y = [3.0 + 2.5 * t for t in range(12)]
    fit = hw_fit_filter(series(y), SmoothingParams(1.0, 1.0))
    assert fit.state.trend == pytest.approx(2.5)
    for (year, pred), actual in zip(fit.fitted, y[1:]):
        assert pred == pytest.approx(actual)
    assert fit.sse == pytest.approx(0.0, abs=1e-18)


def test_beta_zero_with_zero_trend_is_simple_smoothing():
    rng = np.random.default_rng(7)
    y = list(100 + rng.normal(0, 5, 15))
    for alpha in (0.1, 0.45, 0.9):
        fit = hw_fit_filter(series(y), SmoothingParams(alpha, 0.0), initial=(y[0], 0.0))
        np.testing.assert_allclose(fit.levels, oracles.ses_levels(y, alpha, y[0]), rtol=1e-12)
        assert all(t == 0.0 for t in fit.trends)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 1e6, allow_nan=False), min_size=2, max_size=25),
    st.floats(0, 1), st.floats(0, 1),
)
def test_filter_matches_error_correction_oracle(y, alpha, beta):
    fit = hw_fit_filter(series(y), SmoothingParams(alpha, beta))
    table = oracles.holt_step_table(y, alpha, beta, *oracles.holt_init(y))
    scale = max(1.0, max(abs(v) for v in y))
    np.testing.assert_allclose(fit.levels, [r["level"] for r in table], rtol=1e-9, atol=1e-9 * scale)
    np.testing.assert_allclose(fit.trends, [r["trend"] for r in table], rtol=1e-9, atol=1e-9 * scale)


def test_filter_errors():
    with pytest.raises(ArgumentError, match="too short"):
        hw_fit_filter(series([1.0]), SmoothingParams(0.5, 0.5))
    with pytest.raises(ArgumentError):
        hw_fit_filter(series([1.0] * 5), SmoothingParams(0.5, 0.5, 0.5, 3))
    with pytest.raises(NumericError):
        hw_fit_filter(series([1e308, 0.0, 1e308, 0.0]), SmoothingParams(0.0, 0.0))


def test_params_validation():
    with pytest.raises(ArgumentError):
        SmoothingParams(1.2, 0.5)
    with pytest.raises(ArgumentError):
        SmoothingParams(0.5, 0.5, gamma=0.5)
    with pytest.raises(ArgumentError):
        SmoothingParams(0.5, 0.5, 0.5, 1)


def test_forecast_examples():
    flat = hw_forecast(SmoothingState(100.0, 0.0, 2023), 10)
    assert [v for _, v in flat] == [100.0] * 10
    assert [y for y, _ in flat] == list(range(2024, 2034))
    down = hw_forecast(SmoothingState(100.0, -5.0, 2023), 3)
    assert [v for _, v in down] == [95.0, 90.0, 85.0]
    with pytest.raises(ArgumentError):
        hw_forecast(SmoothingState(1.0, 0.0, 2000), 0)


@given(st.floats(-1e6, 1e6), st.floats(-1e4, 1e4), st.integers(3, 40))
def test_forecast_second_differences_vanish(level, trend, h):
    # exact for representable steps: use a trend on a binary grid
    trend = round(trend * 64) / 64
    level = round(level * 64) / 64
    v = [x for _, x in hw_forecast(SmoothingState(level, trend, 2000), h)]
    assert all(v[i + 2] - 2 * v[i + 1] + v[i] == 0 for i in range(len(v) - 2))


def test_fitted_cement_fixture_extrapolation_matches_oracle(data_dir):
    from canopy_plan.emissions import parse_emissions_table

    cement = parse_emissions_table((data_dir / "emissions_azerbaijan_fixture.csv").read_text("utf-8"))["cement"]
    params, state, sse = fit_params(cement)
    y = list(cement.values)
    table = oracles.holt_step_table(y, params.alpha, params.beta, *oracles.holt_init(y))
    np.testing.assert_allclose(
        [v for _, v in hw_forecast(state, 10)], oracles.holt_extrapolate(table, 10), rtol=1e-9)
    assert sse == pytest.approx(oracles.holt_sse(y, params.alpha, params.beta), rel=1e-9)


def test_seasonal_mode_recovers_pure_seasonal_pattern():
    pattern = [5.0, -3.0, -2.0]
    y = [100 + 2 * t + pattern[t % 3] for t in range(18)]
    fit = hw_fit_filter(series(y), SmoothingParams(0.3, 0.2, 0.4, 3))
    assert fit.state.seasonal is not None and len(fit.state.seasonal) == 3
    params, state, sse = fit_params(series(y), OptimizerConfig(grid_steps=6, seasonal_period=3))
    assert params.seasonal_period == 3
    path = [v for _, v in hw_forecast(state, 3)]
    expected = [100 + 2 * t + pattern[t % 3] for t in range(18, 21)]
    np.testing.assert_allclose(path, expected, rtol=0.02)


def test_fit_exact_line_reaches_zero():
    y = [1000.0 - 7.0 * t for t in range(15)]
    params, state, sse = fit_params(series(y))
    ref = hw_fit_filter(series(y), SmoothingParams(1.0, 1.0)).sse
    assert sse <= ref + 1e-12
    assert sse == pytest.approx(0.0, abs=1e-12)


def test_fit_constant_ties_to_smallest_params():
    params, state, sse = fit_params(series([5.0] * 10))
    assert sse == 0.0
    assert (params.alpha, params.beta) == (0.0, 0.0)


def test_fit_is_deterministic():
    rng = np.random.default_rng(3)
    y = list(500 + 4 * np.arange(20) + rng.normal(0, 10, 20))
    assert fit_params(series(y)) == fit_params(series(y))


def test_fit_beats_independent_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(5):
        y = list(1000 + 15 * np.arange(25) + rng.normal(0, 40, 25))
        _, _, sse = fit_params(series(y))
        assert sse <= oracles.grid_min_sse(y) * (1 + 1e-12)


def test_grid_search_tie_break():
    params, sse = grid_search(series([3.0] * 5), grid_steps=5)
    assert (params.alpha, params.beta, sse) == (0.0, 0.0, 0.0)


def test_translation_equivariance():
    rng = np.random.default_rng(5)
    y = list(1000 + 10 * np.arange(20) + rng.normal(0, 30, 20))
    c = 4096.0
    p = SmoothingParams(0.4, 0.25)
    base = hw_forecast(hw_fit_filter(series(y), p).state, 6)
    shifted = hw_forecast(hw_fit_filter(series([v + c for v in y]), p).state, 6)
    np.testing.assert_allclose([b + c for _, b in base], [s for _, s in shifted], rtol=1e-12)


def test_error_rate_examples():
    assert error_rate([10, 10], [9, 11]) == pytest.approx(0.10)
    assert error_rate([3, 4], [3, 4]) == 0.0
    assert error_rate([100], [0]) == 1.0
    with pytest.raises(ArgumentError):
        error_rate([1, 2], [1])
    with pytest.raises(UndefinedMetricError):
        error_rate([0, 0], [1, 1])


def test_error_stddev_examples():
    assert error_stddev([1, -1], [0, 0]) == 1.0
    assert error_stddev([5, 6], [5, 6]) == 0.0
    assert error_stddev([2, 4, 6], [0, 0, 0]) == pytest.approx(math.sqrt(8 / 3))
    with pytest.raises(ArgumentError):
        error_stddev([], [])


@given(
    st.lists(st.tuples(st.floats(0.1, 1e6), st.floats(0, 1e6)), min_size=1, max_size=12),
    st.floats(1e-3, 1e3),
)
def test_metric_scaling(pairs, k):
    a = [p[0] for p in pairs]
    p = [q[1] for q in pairs]
    assert error_rate([k * x for x in a], [k * x for x in p]) == pytest.approx(error_rate(a, p), rel=1e-9)
    assert error_stddev([k * x for x in a], [k * x for x in p]) == pytest.approx(
        k * error_stddev(a, p), rel=1e-9, abs=1e-6 * k)


def test_backtest_examples():
    linear = series([200.0 + 12.0 * t for t in range(20)])
    report = backtest(linear, 6)
    assert report.error_rate <= 1e-9
    const = backtest(series([50.0] * 12), 6)
    assert const.error_rate == 0.0 and const.error_stddev_abs == 0.0
    with pytest.raises(ArgumentError):
        backtest(series([1.0] * 8), 6)


def test_backtest_report_invariants():
    rng = np.random.default_rng(2)
    s = series(list(1e5 + 3e3 * np.arange(30) + rng.normal(0, 4e3, 30)))
    r = backtest(s, 6)
    actual = [v for _, v in r.actual]
    predicted = [a - e for a, (_, e) in zip(actual, r.per_year_errors)]
    assert r.error_rate == pytest.approx(oracles.error_rate_bruteforce(actual, predicted), rel=1e-12)
    assert r.error_stddev_abs == pytest.approx(oracles.error_stddev_bruteforce(actual, predicted), rel=1e-9)
    assert r.error_stddev_relative == pytest.approx(r.error_stddev_abs / np.mean(actual), rel=1e-12)
    assert [y for y, _ in r.per_year_errors] == list(range(2014, 2020))


def test_backtest_flags_negative_forecasts():
    s = series([100.0, 80.0, 60.0, 40.0, 20.0, 10.0, 5.0, 3.0, 2.0, 1.0, 0.5])
    r = backtest(s, 6)
    assert r.warnings and all("negative forecast" in w for w in r.warnings)
    assert any(v < 0 for _, v in r.predicted)  # not clamped
