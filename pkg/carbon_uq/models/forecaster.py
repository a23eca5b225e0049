"""
Built-in baseline point forecasters.

Each forecaster sees history up to and including the origin hour and
predicts origin+1 .. origin+H.
"""

import logging
from typing import Iterable, List

import numpy as np

from models.data_models import ForecastBatch, ForecasterSpec, HourlySeries, HourlyStamp
from utils.errors import InsufficientHistory

logger = logging.getLogger("carbon_uq.forecast")


def forecast(
    spec: ForecasterSpec, history: HourlySeries, origin: HourlyStamp, horizon: int
) -> ForecastBatch:
    """
    Issue one multi-horizon point forecast.

    seasonal_naive_24h repeats the most recent fully observed day:
    the prediction for origin+h is ``history[origin - 23 + ((h - 1) mod 24)]``.
    same_hour_last_week does the same with a 168-hour period; moving_average
    predicts the mean of the last k hours at every horizon.

    Args:
        spec: Forecaster to use
        history: Observed series; must cover the lookback ending at ``origin``
        origin: Last observed hour
        horizon: Number of hours to predict (H >= 1)

    Returns:
        ForecastBatch with H predictions

    Raises:
        InsufficientHistory: If the lookback is not covered
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")

    lookback = spec.lookback
    first_needed = origin - lookback + 1
    if first_needed < history.start or origin >= history.end:
        raise InsufficientHistory(
            f"{spec.label()} needs [{first_needed}, {origin + 1}) but history covers "
            f"[{history.start}, {history.end})"
        )

    offset = first_needed - history.start
    window = history.array[offset : offset + lookback]

    if spec.kind == "moving_average":
        predictions = np.full(horizon, float(np.mean(window)))
    else:
        predictions = window[np.arange(horizon) % lookback]

    return ForecastBatch(
        region=history.region,
        origin=origin,
        horizon=horizon,
        predictions=tuple(float(p) for p in predictions),
    )


def forecast_range(
    spec: ForecasterSpec,
    history: HourlySeries,
    origins: Iterable[HourlyStamp],
    horizon: int,
) -> List[ForecastBatch]:
    """Issue forecasts at every origin; origins without enough history are skipped."""
    batches = []
    skipped = 0
    for origin in origins:
        if origin - spec.lookback + 1 < history.start or origin >= history.end:
            skipped += 1
            continue
        batches.append(forecast(spec, history, origin, horizon))

    if skipped:
        logger.info(f"Skipped {skipped} origins without {spec.lookback}h of history")
    return batches
