"""
Conformal prediction intervals for hourly carbon-intensity forecasts.

Two constructions share the same residual window and quantile convention:

- split conformal: fixed offsets from the empirical residual quantiles
- SPCI: a quantile regression forest over lagged residuals predicts the
  next residual's conditional quantiles, the tail split is chosen per step
  to make the interval as narrow as possible, and every observed residual
  is fed back into the sliding window
"""

import logging
from collections import deque
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from models.data_models import ForecastBatch, HourlySeries, HourlyStamp, Interval, IntervalSeries, SpciConfig
from models.qrf import QrfModel, qrf_fit
from models.residual_window import ResidualWindow
from utils.errors import AlignmentError, EmptyWindow, WindowTooSmall
from utils.stats import sorted_quantile, weighted_quantile

logger = logging.getLogger("carbon_uq.conformal")

__all__ = [
    "residual",
    "split_conformal_interval",
    "beta_grid",
    "beta_search",
    "spci_run",
    "spci_run_horizons",
    "stream_for_horizon",
]


def residual(y: float, y_hat: float) -> float:
    """Signed nonconformity score ``y - y_hat``."""
    return float(y) - float(y_hat)


def _levels(alpha: float, beta: float) -> Tuple[float, float]:
    return beta, 1.0 - alpha + beta


def split_conformal_interval(y_hat: float, window: ResidualWindow, alpha: float) -> Interval:
    """
    Interval from the empirical residual quantiles of the window.

    The lower bound adds the alpha/2 quantile and the upper bound the
    1 - alpha/2 quantile, so intervals shrink as alpha grows.

    Raises:
        EmptyWindow: If the window holds no residuals
    """
    if len(window) == 0:
        raise EmptyWindow("split conformal interval needs at least one residual")

    ordered = np.sort(window.residuals)
    low, high = _levels(alpha, alpha / 2.0)
    return Interval(
        lower=y_hat + sorted_quantile(ordered, low),
        upper=y_hat + sorted_quantile(ordered, high),
        alpha=alpha,
    )


def beta_grid(alpha: float, grid_size: int) -> List[float]:
    """
    Evenly spaced tail splits over [0, alpha].

    A single point grid is ``[alpha / 2]``. Odd grids contain ``alpha / 2``
    exactly.
    """
    if grid_size < 1:
        raise ValueError(f"grid_size must be >= 1, got {grid_size}")
    if grid_size == 1:
        return [alpha / 2.0]

    grid = [alpha * i / (grid_size - 1) for i in range(grid_size)]
    if grid_size % 2 == 1:
        grid[grid_size // 2] = alpha / 2.0
    return grid


def beta_search(
    quantile_fn: Callable[[float], float], alpha: float, grid_size: int
) -> Tuple[float, float, float]:
    """
    Choose the tail split giving the narrowest interval.

    Args:
        quantile_fn: Maps a probability level to a residual quantile
        alpha: Significance level
        grid_size: Number of candidate splits over [0, alpha]

    Returns:
        ``(beta_star, lower_q, upper_q)`` with
        ``lower_q = quantile_fn(beta_star)`` and
        ``upper_q = quantile_fn(1 - alpha + beta_star)``. Equal widths go to
        the split closest to alpha/2.
    """
    symmetric = alpha / 2.0
    best: Optional[Tuple[float, float, float, float]] = None

    for beta in beta_grid(alpha, grid_size):
        low, high = _levels(alpha, beta)
        lower_q = quantile_fn(low)
        upper_q = quantile_fn(high)
        width = upper_q - lower_q
        if (
            best is None
            or width < best[0]
            or (width == best[0] and abs(beta - symmetric) < abs(best[1] - symmetric))
        ):
            best = (width, beta, lower_q, upper_q)

    _, beta_star, lower_q, upper_q = best
    return beta_star, lower_q, upper_q


def _quantile_fn(model: QrfModel, recent: np.ndarray) -> Callable[[float], float]:
    ordered, cumulative = model.conditional_distribution(recent)
    if cumulative is None:
        return _pooled_quantile_fn(ordered)
    return lambda p: weighted_quantile(ordered, cumulative, p)


def _pooled_quantile_fn(ordered: np.ndarray) -> Callable[[float], float]:
    return lambda p: sorted_quantile(ordered, p)


def _fit(config: SpciConfig, window: ResidualWindow) -> QrfModel:
    return qrf_fit(
        window,
        lag_window=config.lag_window,
        n_trees=config.n_trees,
        seed=config.seed,
        max_depth=config.max_depth,
        min_leaf_size=config.min_leaf_size,
        n_jobs=config.n_jobs,
    )


def _run_stream(
    config: SpciConfig,
    point_forecasts: np.ndarray,
    truths: np.ndarray,
    window: ResidualWindow,
    pending: Sequence[float],
    delay: int,
) -> List[Interval]:
    """
    Sequential loop over one stream of (forecast, truth) pairs.

    The residual of step i is only pushed into the window before step
    ``i + delay``; ``pending`` holds residuals from before the first step
    that are still in flight.
    """
    in_flight = deque(pending)
    model: Optional[QrfModel] = None
    pooled = np.empty(0)
    intervals = []

    for step, (y_hat, y) in enumerate(zip(point_forecasts, truths)):
        while len(in_flight) > delay - 1:
            window.push(in_flight.popleft())

        if step % config.refit_stride == 0:
            if config.max_depth == 0:
                # an unsplit forest conditions on nothing: use the whole window
                pooled = np.sort(window.residuals)
            else:
                model = _fit(config, window)

        if model is None:
            quantile = _pooled_quantile_fn(pooled)
        else:
            quantile = _quantile_fn(model, window.recent(config.lag_window))
        _, lower_q, upper_q = beta_search(quantile, config.alpha, config.beta_grid_size)
        intervals.append(Interval(lower=y_hat + lower_q, upper=y_hat + upper_q, alpha=config.alpha))

        # truth for this hour is only read after its interval exists
        in_flight.append(residual(y, y_hat))

    return intervals


def _initial_window(config: SpciConfig, initial_residuals: Sequence[float]) -> ResidualWindow:
    initial = np.asarray(initial_residuals, dtype=float)
    if initial.size < config.window_capacity:
        raise WindowTooSmall(
            f"{initial.size} initial residuals, window capacity is {config.window_capacity}"
        )
    if initial.size <= config.lag_window + 1:
        raise WindowTooSmall(
            f"{initial.size} initial residuals cannot train lag window {config.lag_window}"
        )
    return ResidualWindow(config.window_capacity, initial[-config.window_capacity :])


def spci_run(
    config: SpciConfig,
    point_forecasts: Sequence[float],
    truths: Sequence[float],
    initial_residuals: Sequence[float],
    region: str = "SYN",
    start: HourlyStamp = 0,
) -> IntervalSeries:
    """
    Sequential predictive conformal intervals over a test stream.

    For each hour in order: refit the forest every ``refit_stride`` steps,
    emit ``[y_hat + Q(beta*), y_hat + Q(1 - alpha + beta*)]`` from the
    forest's conditional quantiles given the last w residuals, then feed
    the observed residual back into the window, evicting the oldest.
    With ``max_depth=0`` the forest has no splits to condition on, so the
    whole window is pooled at each refit; with a one-point beta grid and
    ``refit_stride=1`` every interval is the split conformal interval of the
    current window.

    Args:
        config: Loop hyperparameters
        point_forecasts: Forecast for each test hour
        truths: Observed value for each test hour
        initial_residuals: Calibration residuals, oldest first; the last
            ``window_capacity`` seed the window
        region: Region of the returned series
        start: Stamp of the first test hour

    Raises:
        AlignmentError: If forecasts and truths differ in length or are empty
        WindowTooSmall: If fewer than ``window_capacity`` initial residuals
    """
    point_forecasts = np.asarray(point_forecasts, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if point_forecasts.shape != truths.shape:
        raise AlignmentError(
            f"{point_forecasts.size} forecasts but {truths.size} truth values"
        )
    if point_forecasts.size == 0:
        raise AlignmentError("no test hours to calibrate")

    window = _initial_window(config, initial_residuals)
    intervals = _run_stream(config, point_forecasts, truths, window, pending=(), delay=1)

    logger.debug(f"SPCI produced {len(intervals)} intervals for {region} at alpha={config.alpha}")
    return IntervalSeries(
        region=region,
        start=start,
        intervals=tuple(intervals),
        alpha=config.alpha,
        points=tuple(float(p) for p in point_forecasts),
    )


def stream_for_horizon(
    batches: Sequence[ForecastBatch], horizon: int
) -> Dict[HourlyStamp, float]:
    """Prediction for each target hour made exactly ``horizon`` hours ahead."""
    return {
        batch.target(horizon): batch.prediction_for(horizon)
        for batch in batches
        if batch.horizon >= horizon
    }


def _run_horizon(
    config: SpciConfig,
    horizon: int,
    batches: Sequence[ForecastBatch],
    truth: HourlySeries,
    calibration_end: HourlyStamp,
    test_end: HourlyStamp,
) -> IntervalSeries:
    predictions = stream_for_horizon(batches, horizon)

    def _values(first: HourlyStamp, last: HourlyStamp, what: str) -> Tuple[np.ndarray, np.ndarray]:
        missing = [
            t for t in range(first, last) if t not in predictions or not truth.covers(t)
        ]
        if missing:
            error = WindowTooSmall if what == "calibration" else AlignmentError
            raise error(
                f"{truth.region} h={horizon}: {len(missing)} {what} hours lack a forecast "
                f"or truth, first at stamp {missing[0]}"
            )
        pred = np.array([predictions[t] for t in range(first, last)], dtype=float)
        actual = np.array([truth.value_at(t) for t in range(first, last)], dtype=float)
        return pred, actual

    # Targets up to calibration_end - h were observed before the first test
    # origin; the h - 1 after them arrive during the first test steps.
    window_end = calibration_end - horizon + 1
    cal_pred, cal_truth = _values(window_end - config.window_capacity, calibration_end, "calibration")
    cal_residuals = cal_truth - cal_pred
    initial = cal_residuals[: config.window_capacity]
    pending = cal_residuals[config.window_capacity :]

    if test_end <= calibration_end:
        raise AlignmentError("test range is empty")
    test_pred, test_truth = _values(calibration_end, test_end, "test")

    window = _initial_window(config, initial)
    intervals = _run_stream(config, test_pred, test_truth, window, pending=pending, delay=horizon)
    return IntervalSeries(
        region=truth.region,
        start=calibration_end,
        intervals=tuple(intervals),
        alpha=config.alpha,
        points=tuple(float(p) for p in test_pred),
        horizon=horizon,
    )


def spci_run_horizons(
    config: SpciConfig,
    batches: Sequence[ForecastBatch],
    truth: HourlySeries,
    calibration_end: HourlyStamp,
    test_end: HourlyStamp,
) -> Dict[int, IntervalSeries]:
    """
    Calibrate each horizon offset as its own stream.

    Stream h collects the predictions made h hours ahead. Its window starts
    with the last ``window_capacity`` residuals whose truth was known at the
    first test origin. During the test range the residual for target t is
    pushed only once an interval issued at an origin >= t is emitted.
    Intervals are never revised after emission.

    Returns:
        Interval series keyed by horizon, covering
        ``[calibration_end, test_end)``
    """
    horizons = sorted(set(config.horizons))
    results = Parallel(n_jobs=min(config.n_jobs, len(horizons)), prefer="threads")(
        delayed(_run_horizon)(config, h, batches, truth, calibration_end, test_end)
        for h in horizons
    )
    return dict(zip(horizons, results))
