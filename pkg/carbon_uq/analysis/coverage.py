"""
Interval quality metrics: coverage, the truth/point coverage breakdown and
width statistics.
"""

from typing import Dict, Optional, Set, Tuple, Union

import numpy as np

from models.data_models import CoverageBreakdown, HourlySeries, IntervalSeries
from utils.errors import AlignmentError, EmptyInput


def _aligned(
    intervals: IntervalSeries, series: HourlySeries, what: str
) -> np.ndarray:
    if series.start > intervals.start or series.end < intervals.end:
        raise AlignmentError(
            f"{what} [{series.start}, {series.end}) does not cover intervals "
            f"[{intervals.start}, {intervals.end})"
        )
    offset = intervals.start - series.start
    return series.array[offset : offset + len(intervals)]


def _keep_mask(intervals: IntervalSeries, exclude: Optional[Set[int]]) -> np.ndarray:
    stamps = np.arange(intervals.start, intervals.end)
    if not exclude:
        return np.ones(stamps.size, dtype=bool)
    mask = ~np.isin(stamps, np.fromiter(exclude, dtype=np.int64, count=len(exclude)))
    if not mask.any():
        raise EmptyInput("every interval hour is excluded")
    return mask


def _covered(intervals: IntervalSeries, values: np.ndarray) -> np.ndarray:
    return (intervals.lowers <= values) & (values <= intervals.uppers)


def coverage(
    intervals: IntervalSeries, truth: HourlySeries, exclude: Optional[Set[int]] = None
) -> float:
    """
    Percentage of hours whose interval contains the truth (bounds included).

    Raises:
        AlignmentError: If truth does not cover the interval range
    """
    covered = _covered(intervals, _aligned(intervals, truth, "truth"))
    mask = _keep_mask(intervals, exclude)
    return float(100.0 * covered[mask].sum() / mask.sum())


def breakdown(
    intervals: IntervalSeries,
    truth: HourlySeries,
    points: Optional[Union[HourlySeries, IntervalSeries]] = None,
    exclude: Optional[Set[int]] = None,
) -> CoverageBreakdown:
    """
    Split hours by whether the interval covers the truth (T) and the point
    forecast (P).

    Args:
        intervals: Interval series
        truth: Observed series covering the interval range
        points: Point forecasts; defaults to the points stored on ``intervals``
        exclude: Stamps left out of every cell

    Raises:
        AlignmentError: If a series does not cover the interval range
    """
    if points is None or isinstance(points, IntervalSeries):
        stored = (points if points is not None else intervals).points
        if stored is None:
            raise AlignmentError("no point forecasts given or stored with the intervals")
        point_values = np.asarray(stored, dtype=float)
    else:
        point_values = _aligned(intervals, points, "points")

    mask = _keep_mask(intervals, exclude)
    truth_covered = _covered(intervals, _aligned(intervals, truth, "truth"))[mask]
    point_covered = _covered(intervals, point_values)[mask]
    n = int(mask.sum())

    def _percent(cell: np.ndarray) -> float:
        return float(100.0 * cell.sum() / n)

    t_cov_p_cov = _percent(truth_covered & point_covered)
    t_cov_p_uncov = _percent(truth_covered & ~point_covered)
    return CoverageBreakdown(
        coverage_percent=t_cov_p_cov + t_cov_p_uncov,
        t_cov_p_cov=t_cov_p_cov,
        t_cov_p_uncov=t_cov_p_uncov,
        t_uncov_p_cov=_percent(~truth_covered & point_covered),
        t_uncov_p_uncov=_percent(~truth_covered & ~point_covered),
        n=n,
        region=intervals.region,
        alpha=intervals.alpha,
        horizon=intervals.horizon,
    )


def width_stats(
    intervals: IntervalSeries, exclude: Optional[Set[int]] = None
) -> Tuple[float, float, float]:
    """Mean, median and maximum interval width over the hours not excluded."""
    widths = (intervals.uppers - intervals.lowers)[_keep_mask(intervals, exclude)]
    return float(np.mean(widths)), float(np.median(widths)), float(np.max(widths))


def midpoint_closer_percent(
    intervals: IntervalSeries,
    truth: HourlySeries,
    points: Optional[HourlySeries] = None,
    exclude: Optional[Set[int]] = None,
) -> float:
    """Percentage of hours where the interval midpoint is strictly closer to the truth than the point forecast."""
    actual = _aligned(intervals, truth, "truth")
    if points is not None:
        point_values = _aligned(intervals, points, "points")
    elif intervals.points is not None:
        point_values = np.asarray(intervals.points, dtype=float)
    else:
        raise AlignmentError("no point forecasts given or stored with the intervals")

    midpoints = (intervals.lowers + intervals.uppers) / 2.0
    closer = np.abs(midpoints - actual) < np.abs(point_values - actual)
    return float(100.0 * closer[_keep_mask(intervals, exclude)].mean())


def breakdown_row(result: CoverageBreakdown, widths: Optional[Tuple[float, float, float]] = None) -> Dict[str, str]:
    """Format a breakdown as a report row, percentages to 2 decimals."""
    row = {
        "region": result.region or "",
        "alpha": f"{result.alpha:g}" if result.alpha is not None else "",
        "horizon": str(result.horizon or 1),
        "coverage": f"{result.coverage_percent:.2f}",
        "t_cov_p_cov": f"{result.t_cov_p_cov:.2f}",
        "t_cov_p_uncov": f"{result.t_cov_p_uncov:.2f}",
        "t_uncov_p_cov": f"{result.t_uncov_p_cov:.2f}",
        "t_uncov_p_uncov": f"{result.t_uncov_p_uncov:.2f}",
        "n": str(result.n),
    }
    if widths is not None:
        row["mean_width"] = f"{widths[0]:.2f}"
        row["median_width"] = f"{widths[1]:.2f}"
        row["max_width"] = f"{widths[2]:.2f}"
    return row
