"""
Point-forecast accuracy analyses: MAPE, per-day MAPE, seasonal and
horizon-bucket groupings.
"""

from datetime import date
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from models.data_models import AccuracyReport, ForecastBatch, HourlySeries
from models.timeseries import HOURS_PER_DAY, stamp_day
from utils.errors import (
    DateOutOfStudyRange,
    HorizonMismatch,
    LengthMismatch,
    TruthMissing,
    ZeroTruthValue,
)

SEASONS = {
    7: "summer",
    8: "summer",
    9: "fall",
    10: "fall",
    11: "winter",
    12: "winter",
}

WEEKDAYS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]


def mape(pred: Sequence[float], truth: Sequence[float]) -> float:
    """
    Mean absolute percentage error, in percent.

    Raises:
        LengthMismatch: Different lengths, or empty input
        ZeroTruthValue: A truth value is zero
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size == 0:
        raise LengthMismatch(f"pred has {pred.size} values, truth has {truth.size}")

    zeros = np.flatnonzero(truth == 0)
    if zeros.size:
        raise ZeroTruthValue(int(zeros[0]))

    return float(100.0 * np.mean(np.abs(truth - pred) / np.abs(truth)))


def _report(label: str, errors: np.ndarray, variance: float) -> AccuracyReport:
    return AccuracyReport(
        group_label=label,
        mape_percent=float(100.0 * np.mean(errors)),
        variance=max(0.0, variance),
        n=int(errors.size),
    )


def horizon_bucket_mape(
    batches: Sequence[ForecastBatch],
    truth: HourlySeries,
    horizon: int = 96,
    bucket_size: int = 24,
    exclude: Optional[Set[int]] = None,
) -> List[AccuracyReport]:
    """
    MAPE of long-horizon forecasts split into consecutive horizon buckets.

    With the defaults the 96 predictions of each batch fall into buckets
    1-24h, 25-48h, 49-72h and 73-96h. Each bucket's MAPE pools every
    batch's predictions in that bucket; ``variance`` is the variance of the
    per-batch bucket MAPEs and ``n`` counts pooled predictions.

    Raises:
        HorizonMismatch: A batch does not have ``horizon`` predictions
        TruthMissing: Truth does not cover a target hour
    """
    exclude = exclude or set()
    n_buckets = horizon // bucket_size
    pooled: List[List[float]] = [[] for _ in range(n_buckets)]
    per_batch: List[List[float]] = [[] for _ in range(n_buckets)]

    for batch in batches:
        if batch.horizon != horizon:
            raise HorizonMismatch(
                f"batch at origin {batch.origin} has H={batch.horizon}, expected {horizon}"
            )
        if not (truth.covers(batch.origin + 1) and truth.covers(batch.origin + horizon)):
            raise TruthMissing(
                f"truth [{truth.start}, {truth.end}) does not cover targets of origin {batch.origin}"
            )

        for b in range(n_buckets):
            errors = []
            for h in range(b * bucket_size + 1, (b + 1) * bucket_size + 1):
                target = batch.target(h)
                if target in exclude:
                    continue
                y = truth.value_at(target)
                if y == 0:
                    raise ZeroTruthValue(target - truth.start)
                errors.append(abs(y - batch.prediction_for(h)) / abs(y))
            if errors:
                pooled[b].extend(errors)
                per_batch[b].append(100.0 * float(np.mean(errors)))

    reports = []
    for b in range(n_buckets):
        if not pooled[b]:
            raise TruthMissing(f"no usable predictions in bucket {b + 1}")
        label = f"{b * bucket_size + 1}-{(b + 1) * bucket_size}h"
        variance = float(np.var(per_batch[b], ddof=1)) if len(per_batch[b]) > 1 else 0.0
        reports.append(_report(label, np.asarray(pooled[b]), variance))
    return reports


def daily_mape(
    batches: Sequence[ForecastBatch],
    truth: HourlySeries,
    exclude: Optional[Set[int]] = None,
) -> List[Tuple[date, float]]:
    """
    MAPE of the 24 day-ahead predictions targeting each UTC day.

    Only batches issued at 23:00 UTC (so that h=1..24 span exactly the
    next UTC day) contribute. Days whose targets are all excluded, or not
    covered by ``truth``, are omitted.
    """
    exclude = exclude or set()
    results = []
    for batch in batches:
        if (batch.origin + 1) % HOURS_PER_DAY != 0 or batch.horizon < HOURS_PER_DAY:
            continue
        pred, actual = [], []
        for h in range(1, HOURS_PER_DAY + 1):
            target = batch.target(h)
            if target in exclude or not truth.covers(target):
                continue
            pred.append(batch.prediction_for(h))
            actual.append(truth.value_at(target))
        if pred:
            results.append((stamp_day(batch.origin + 1), mape(pred, actual)))
    return results


def _group_label(day: date, by: str) -> str:
    if by == "season":
        if day.month not in SEASONS:
            raise DateOutOfStudyRange(f"{day.isoformat()} is outside July-December")
        return SEASONS[day.month]
    if by == "month":
        return f"{day.year:04d}-{day.month:02d}"
    if by == "weekday":
        return WEEKDAYS[day.weekday()]
    if by == "all":
        return "all"
    raise ValueError(f"unknown grouping '{by}'")


def group_daily_mapes(
    daily_mapes: Iterable[Tuple[date, float]], by: str = "season"
) -> Dict[str, AccuracyReport]:
    """
    Mean and standard deviation (over days) of daily MAPEs per group.

    Args:
        daily_mapes: ``(day, mape_percent)`` pairs
        by: ``season``, ``month``, ``weekday`` or ``all``

    Returns:
        Reports keyed by group label, in order of first appearance
    """
    rows = [(_group_label(day, by), value) for day, value in daily_mapes]
    if not rows:
        return {}

    frame = pd.DataFrame(rows, columns=["group", "mape"])
    stats = frame.groupby("group", sort=False)["mape"].agg(["mean", "var", "count"])

    reports = {}
    for label, row in stats.iterrows():
        variance = 0.0 if row["count"] < 2 or pd.isna(row["var"]) else float(row["var"])
        reports[str(label)] = AccuracyReport(
            group_label=str(label),
            mape_percent=float(row["mean"]),
            variance=max(0.0, variance),
            n=int(row["count"]),
        )
    return reports


def seasonal_group_stats(
    daily_mapes: Iterable[Tuple[date, float]],
) -> Dict[str, AccuracyReport]:
    """
    Daily MAPE statistics for summer (Jul-Aug), fall (Sep-Oct) and winter
    (Nov-Dec).

    Raises:
        DateOutOfStudyRange: A day falls outside July-December
    """
    return group_daily_mapes(daily_mapes, by="season")


def ratio_summary(a: AccuracyReport, b: AccuracyReport) -> Dict[str, float]:
    """
    How much worse ``a`` is than ``b``: ratios of mean MAPE and of variance.

    A ratio of 1.8 reads "a has 1.8x higher MAPE than b". A zero
    denominator yields ``inf``.
    """

    def _ratio(numerator: float, denominator: float) -> float:
        if denominator == 0:
            return float("inf") if numerator > 0 else 1.0
        return numerator / denominator

    return {
        "mape_ratio": _ratio(a.mape_percent, b.mape_percent),
        "variance_ratio": _ratio(a.variance, b.variance),
    }
