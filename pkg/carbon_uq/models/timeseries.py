"""
Hour stamps and alignment utilities for hourly series.

Ranges are half-open everywhere: a series starting at ``s`` with ``n`` values
covers ``[s, s + n)``. Stamps count whole hours since 1970-01-01T00:00 UTC.
"""

from datetime import date, datetime, timezone
from typing import Tuple, Union

import pandas as pd

from models.data_models import HourlySeries, HourlyStamp
from utils.errors import EmptyOverlap, OutOfRange

HOURS_PER_DAY = 24

_EPOCH = pd.Timestamp("1970-01-01T00:00:00", tz="UTC")


def stamp_from_timestamp(value: Union[str, datetime, pd.Timestamp]) -> HourlyStamp:
    """
    Convert an ISO-8601 string or datetime to an hour stamp.

    Naive values are taken as UTC; aware values are converted to UTC.

    Raises:
        ValueError: If the value does not fall on a whole hour
    """
    ts = pd.Timestamp(value)
    if ts.tzinfo is None:
        ts = ts.tz_localize("UTC")
    else:
        ts = ts.tz_convert("UTC")

    delta = ts - _EPOCH
    hours, remainder = divmod(delta, pd.Timedelta(hours=1))
    if remainder != pd.Timedelta(0):
        raise ValueError(f"timestamp {value} is not on a whole hour")
    return int(hours)


def stamp_to_timestamp(stamp: HourlyStamp) -> pd.Timestamp:
    return _EPOCH + pd.Timedelta(hours=int(stamp))


def stamp_to_iso(stamp: HourlyStamp) -> str:
    return stamp_to_timestamp(stamp).strftime("%Y-%m-%dT%H:%M:%SZ")


def stamp_day(stamp: HourlyStamp) -> date:
    """UTC calendar day containing the stamp."""
    return stamp_to_timestamp(stamp).date()


def day_start(day: date) -> HourlyStamp:
    return stamp_from_timestamp(datetime(day.year, day.month, day.day, tzinfo=timezone.utc))


def hour_of_day(stamp: HourlyStamp) -> int:
    return int(stamp) % HOURS_PER_DAY


def align(a: HourlySeries, b: HourlySeries) -> Tuple[HourlySeries, HourlySeries]:
    """
    Restrict two series to their common stamp range.

    The regions may differ (spatial comparisons pair different regions).

    Returns:
        ``(a', b')`` of equal length covering ``[max(start), min(end))``

    Raises:
        EmptyOverlap: If the ranges are disjoint
    """
    start = max(a.start, b.start)
    end = min(a.end, b.end)
    if end <= start:
        raise EmptyOverlap(
            f"{a.region} [{a.start}, {a.end}) and {b.region} [{b.start}, {b.end}) do not overlap"
        )
    return slice_series(a, start, end - start), slice_series(b, start, end - start)


def slice_series(s: HourlySeries, start: HourlyStamp, length: int) -> HourlySeries:
    """
    Copy ``[start, start + length)`` out of a series.

    Raises:
        OutOfRange: If the requested range is not inside the series
    """
    if length < 1 or start < s.start or start + length > s.end:
        raise OutOfRange(
            f"[{start}, {start + length}) is outside {s.region} [{s.start}, {s.end})"
        )
    offset = start - s.start
    if offset == 0 and length == len(s):
        return s
    return HourlySeries(
        region=s.region,
        start=start,
        values=s.values[offset : offset + length],
        unit=s.unit,
    )
