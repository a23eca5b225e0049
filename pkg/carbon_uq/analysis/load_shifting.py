"""
Emissions accounting and suspend-and-resume load-shifting studies.

A workload with a known hourly power draw either runs where/when it was
planned (the source) or is suspended and resumed at the target: the next
day (temporal) or another region on the same day (spatial). Decisions are
made from predicted day totals and their intervals; outcomes are judged
against the true totals.
"""

import logging
import math
from datetime import date, timedelta
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.data_models import (
    DayTotal,
    EmissionsTotal,
    HourlySeries,
    Interval,
    IntervalSeries,
    PowerTrace,
    ShiftCase,
    ShiftDecision,
    ShiftPolicy,
    ShiftReport,
)
from models.timeseries import HOURS_PER_DAY, day_start, hour_of_day, slice_series, stamp_day
from utils.errors import AlignmentError, AlphaMismatch, HorizonMismatch, InsufficientDays, ZeroTruthValue

logger = logging.getLogger("carbon_uq.shift")

KWH_PER_MWH = 1000.0
GRAMS_PER_TON = 1e6


def emissions(trace: PowerTrace, ci: HourlySeries) -> EmissionsTotal:
    """
    Total emissions of a power trace under an hourly carbon intensity.

    grams = sum over hours of (normalized * peak_mw * 1000 kWh) * ci

    Raises:
        AlignmentError: If the trace and the series cover different hours
    """
    if trace.start != ci.start or len(trace) != len(ci):
        raise AlignmentError(
            f"power trace [{trace.start}, {trace.end}) and {ci.region} carbon intensity "
            f"[{ci.start}, {ci.end}) cover different hours"
        )
    energy_kwh = trace.power_mw * KWH_PER_MWH
    grams = math.fsum(energy_kwh * ci.array)
    return EmissionsTotal(grams=grams, start=ci.start, length=len(ci), region=ci.region)


def tons_delta(percent_increase: float, base_grams: float) -> float:
    """Extra metric tons emitted by a percentage increase over a base total."""
    if base_grams <= 0:
        raise ValueError(f"base_grams must be > 0, got {base_grams}")
    return percent_increase / 100.0 * base_grams / GRAMS_PER_TON


def decide_shift(
    source: Tuple[float, Interval],
    target: Tuple[float, Interval],
    policy: ShiftPolicy,
) -> ShiftDecision:
    """
    Decide whether to move the workload from source to target.

    - point: shift iff the target's predicted total is lower
    - interval_dominance: shift iff target.upper < source.lower
    - overlap_threshold: shift iff the target's prediction is lower and the
      overlap of the two intervals, relative to the narrower one, is at
      most theta

    Args:
        source: ``(predicted_total, interval)`` of the current option
        target: ``(predicted_total, interval)`` of the alternative
        policy: Decision rule

    Raises:
        AlphaMismatch: If the two intervals have different significance levels
    """
    source_pred, source_ci = source
    target_pred, target_ci = target
    if source_ci.alpha != target_ci.alpha:
        raise AlphaMismatch(
            f"source interval alpha {source_ci.alpha} != target alpha {target_ci.alpha}"
        )

    if policy.kind == "point":
        shift = target_pred < source_pred
        reason = (
            f"predicted {target_pred:g} < {source_pred:g}"
            if shift
            else f"predicted {target_pred:g} >= {source_pred:g}"
        )
    elif policy.kind == "interval_dominance":
        shift = target_ci.upper < source_ci.lower
        reason = (
            f"target upper {target_ci.upper:g} < source lower {source_ci.lower:g}"
            if shift
            else f"intervals overlap (target upper {target_ci.upper:g} >= source lower {source_ci.lower:g})"
        )
    else:
        ratio = _overlap_ratio(source_ci, target_ci)
        if target_pred >= source_pred:
            shift = False
            reason = f"predicted {target_pred:g} >= {source_pred:g}"
        else:
            shift = ratio <= policy.theta
            comparison = "<=" if shift else ">"
            reason = f"overlap ratio {ratio:.3f} {comparison} {policy.theta:g}"

    return ShiftDecision(
        action="shift" if shift else "stay",
        reason=reason,
        source_pred=source_pred,
        target_pred=target_pred,
        source_ci=source_ci,
        target_ci=target_ci,
    )


def _overlap_ratio(a: Interval, b: Interval) -> float:
    narrower = min(a.width, b.width)
    if narrower == 0:
        return 1.0 if a.overlaps(b) else 0.0
    return a.overlap_length(b) / narrower


# ---------------------------------------------------------------------------
# Day totals
# ---------------------------------------------------------------------------


def workload_day(trace: PowerTrace, day: date) -> PowerTrace:
    """
    The workload's power trace over one UTC day.

    The trace is tiled over time, so a one-day trace describes a job that
    runs the same way every day.
    """
    stamps = day_start(day) + np.arange(HOURS_PER_DAY)
    normalized = np.asarray(trace.normalized, dtype=float)[(stamps - trace.start) % len(trace)]
    return PowerTrace(
        region=trace.region,
        start=day_start(day),
        normalized=tuple(float(v) for v in normalized),
        peak_mw=trace.peak_mw,
    )


def _day_values(series_values: np.ndarray, series_start: int, first: int) -> np.ndarray:
    offset = first - series_start
    return series_values[offset : offset + HOURS_PER_DAY]


def day_totals(
    trace: PowerTrace,
    intervals: IntervalSeries,
    truth: HourlySeries,
    points: Optional[HourlySeries] = None,
) -> List[DayTotal]:
    """
    Predicted and true emissions per full UTC day of the interval range.

    The day's interval sums the power-weighted hourly lower bounds and
    upper bounds, a conservative bound on the day total.

    Args:
        trace: Workload power trace (tiled)
        intervals: Hourly intervals; their stored points are the predictions
            unless ``points`` is given
        truth: Observed carbon intensity
        points: Optional point forecasts covering the interval range

    Returns:
        One DayTotal per UTC day fully covered by intervals and truth
    """
    if points is not None:
        if points.start > intervals.start or points.end < intervals.end:
            raise AlignmentError(f"points do not cover the {intervals.region} interval range")
        predictions = points.array[intervals.start - points.start :][: len(intervals)]
    elif intervals.points is not None:
        predictions = np.asarray(intervals.points, dtype=float)
    else:
        raise AlignmentError("no point forecasts given or stored with the intervals")

    first_day = stamp_day(intervals.start)
    if day_start(first_day) < intervals.start:
        first_day += timedelta(days=1)

    lowers, uppers = intervals.lowers, intervals.uppers
    totals = []
    day = first_day
    while day_start(day) + HOURS_PER_DAY <= min(intervals.end, truth.end):
        first = day_start(day)
        if first >= truth.start:
            profile = workload_day(trace, day)
            energy = profile.power_mw * KWH_PER_MWH
            totals.append(
                DayTotal(
                    region=intervals.region,
                    day=day,
                    pred=math.fsum(energy * _day_values(predictions, intervals.start, first)),
                    truth=emissions(profile, slice_series(truth, first, HOURS_PER_DAY)).grams,
                    ci=Interval(
                        lower=math.fsum(energy * _day_values(lowers, intervals.start, first)),
                        upper=math.fsum(energy * _day_values(uppers, intervals.start, first)),
                        alpha=intervals.alpha,
                    ),
                )
            )
        day += timedelta(days=1)
    return totals


def origin_aligned_intervals(
    streams: Dict[int, IntervalSeries], days_ahead: int = 0
) -> IntervalSeries:
    """
    Hourly intervals as issued from one origin per UTC day.

    The origin of day d is its last preceding hour. Hour k of day
    ``d + days_ahead`` is read from the stream calibrated
    ``24 * days_ahead + k + 1`` hours ahead, so the returned series holds
    what was known at the origin.

    Raises:
        HorizonMismatch: If a needed horizon stream is missing
        AlignmentError: If the streams cover different hours or levels
    """
    first = HOURS_PER_DAY * days_ahead + 1
    needed = range(first, first + HOURS_PER_DAY)
    missing = [h for h in needed if h not in streams]
    if missing:
        raise HorizonMismatch(
            f"intervals {days_ahead} day(s) ahead need horizons {first}..{first + HOURS_PER_DAY - 1}, "
            f"{len(missing)} missing (first h={missing[0]})"
        )

    reference = streams[first]
    for h in needed:
        stream = streams[h]
        if (stream.start, len(stream), stream.alpha) != (reference.start, len(reference), reference.alpha):
            raise AlignmentError(f"h={h} stream does not match h={first} in range or alpha")
        if stream.points is None:
            raise AlignmentError(f"h={h} stream has no point forecasts")

    intervals, points = [], []
    for i, stamp in enumerate(range(reference.start, reference.end)):
        stream = streams[first + hour_of_day(stamp)]
        intervals.append(stream.intervals[i])
        points.append(stream.points[i])
    return IntervalSeries(
        region=reference.region,
        start=reference.start,
        intervals=tuple(intervals),
        alpha=reference.alpha,
        points=tuple(points),
        horizon=first,
    )


def pair_days(
    totals: Sequence[DayTotal], next_day_totals: Optional[Sequence[DayTotal]] = None
) -> List[Tuple[DayTotal, DayTotal]]:
    """
    Consecutive-day ``(d, d+1)`` pairs.

    Day d+1 is taken from ``next_day_totals`` when given, i.e. as it was
    predicted from day d's origin.
    """
    by_day = {t.day: t for t in totals}
    later = by_day if next_day_totals is None else {t.day: t for t in next_day_totals}
    return [
        (by_day[day], later[day + timedelta(days=1)])
        for day in sorted(by_day)
        if day + timedelta(days=1) in later
    ]


def pair_regions(
    source: Sequence[DayTotal], target: Sequence[DayTotal]
) -> List[Tuple[DayTotal, DayTotal]]:
    """
    Same-day ``(source, target)`` pairs.

    Raises:
        AlignmentError: If the two regions do not cover the same days
    """
    source_days = {t.day: t for t in source}
    target_days = {t.day: t for t in target}
    if set(source_days) != set(target_days):
        only = sorted(set(source_days) ^ set(target_days))
        raise AlignmentError(
            f"source and target regions differ on {len(only)} days, first {only[0].isoformat()}"
        )
    if not source_days:
        raise AlignmentError("no days to compare")
    return [(source_days[day], target_days[day]) for day in sorted(source_days)]


# ---------------------------------------------------------------------------
# Simulations
# ---------------------------------------------------------------------------


def _simulate(
    mode: str,
    pairs: Sequence[Tuple[DayTotal, DayTotal]],
    policy: ShiftPolicy,
    flip: bool,
) -> ShiftReport:
    if flip:
        pairs = [(target, source) for source, target in pairs]

    cases = []
    stay_grams = policy_grams = best_grams = 0.0
    for source, target in pairs:
        decision = decide_shift((source.pred, source.ci), (target.pred, target.ci), policy)
        misleading = target.pred < source.pred and target.truth > source.truth
        increase = 0.0
        if misleading and source.truth > 0:
            increase = (target.truth - source.truth) / source.truth * 100.0
        shifted = decision.action == "shift"

        cases.append(
            ShiftCase(
                source=_label(mode, source),
                target=_label(mode, target),
                day=source.day,
                source_truth=source.truth,
                target_truth=target.truth,
                decision=decision,
                misleading=misleading,
                increase_percent=increase,
                realized=misleading and shifted,
            )
        )
        stay_grams += source.truth
        policy_grams += target.truth if shifted else source.truth
        best_grams += min(source.truth, target.truth)

    misleading_cases = [c for c in cases if c.misleading]
    n_misleading = len(misleading_cases)
    realized = math.fsum(c.increase_percent for c in misleading_cases if c.realized)
    potential = math.fsum(c.increase_percent for c in misleading_cases)

    if mode == "spatial":
        source_label, target_label = cases[0].source, cases[0].target
    else:
        region = pairs[0][0].region
        source_label, target_label = f"{region}:d", f"{region}:d+1"
    return ShiftReport(
        mode=mode,
        source=source_label,
        target=target_label,
        policy=policy.label(),
        misleading_percent=100.0 * n_misleading / len(cases),
        increased_emissions_percent=realized / n_misleading if n_misleading else 0.0,
        potential_increase_percent=potential / n_misleading if n_misleading else 0.0,
        cases=cases,
        totals={
            "stay_grams": stay_grams,
            "policy_grams": policy_grams,
            "best_grams": best_grams,
        },
    )


def _label(mode: str, total: DayTotal) -> str:
    return total.region if mode == "spatial" else total.day.isoformat()


def temporal_shift_sim(
    totals: Sequence[DayTotal],
    policy: ShiftPolicy,
    flip: bool = False,
    next_day_totals: Optional[Sequence[DayTotal]] = None,
) -> ShiftReport:
    """
    Shift each day's workload to the next day when the policy says so.

    A pair (d, d+1) is misleading when d+1 is predicted lower but is truly
    higher; its increase is ``(truth(d+1) - truth(d)) / truth(d) * 100``.
    The reported increase averages, over misleading pairs, what the policy
    actually incurred by shifting.

    Args:
        totals: Day totals of one region
        policy: Decision rule
        flip: Swap the roles of d and d+1 (moving work to the previous day)
        next_day_totals: Day totals predicted one day further ahead; when
            given, day d+1 of each pair is read from here

    Raises:
        InsufficientDays: If no two consecutive days are available
    """
    pairs = pair_days(totals, next_day_totals)
    if not pairs:
        raise InsufficientDays(f"{len(totals)} days contain no consecutive pair")
    report = _simulate("temporal", pairs, policy, flip)
    logger.debug(
        f"Temporal {policy.label()}: {report.misleading_percent:.2f}% misleading over {len(pairs)} pairs"
    )
    return report


def spatial_shift_sim(
    source: Sequence[DayTotal],
    target: Sequence[DayTotal],
    policy: ShiftPolicy,
    flip: bool = False,
) -> ShiftReport:
    """
    Move each day's workload from the source region to the target region
    when the policy says so. Classification matches the temporal study with
    regions in place of days.

    Raises:
        AlignmentError: If the regions cover different days
    """
    pairs = pair_regions(source, target)
    report = _simulate("spatial", pairs, policy, flip)
    logger.debug(
        f"Spatial {report.source}->{report.target} {policy.label()}: "
        f"{report.misleading_percent:.2f}% misleading over {len(pairs)} days"
    )
    return report


def summary_row(report: ShiftReport) -> Dict[str, str]:
    return {
        "source": report.source,
        "target": report.target,
        "misleading_percent": f"{report.misleading_percent:.2f}",
        "increased_emissions_percent": f"{report.increased_emissions_percent:.2f}",
    }


def tons_row(report: ShiftReport) -> Dict[str, str]:
    """
    Study totals in metric tons.

    ``misleading_day_tons`` is what the reported average increase costs on
    an average source day.
    """
    totals = report.totals
    mean_day = totals["stay_grams"] / len(report.cases) if report.cases else 0.0
    extra = tons_delta(report.increased_emissions_percent, mean_day) if mean_day > 0 else 0.0
    return {
        "source": report.source,
        "target": report.target,
        "stay_tons": f"{totals['stay_grams'] / GRAMS_PER_TON:.3f}",
        "policy_tons": f"{totals['policy_grams'] / GRAMS_PER_TON:.3f}",
        "best_tons": f"{totals['best_grams'] / GRAMS_PER_TON:.3f}",
        "tons_avoided": f"{(totals['stay_grams'] - totals['policy_grams']) / GRAMS_PER_TON:.3f}",
        "misleading_day_tons": f"{extra:.3f}",
    }


def normalized_cases(report: ShiftReport) -> List[Dict[str, float]]:
    """
    Per-case totals normalized by the source truth, as in a worked example
    where the source day (or region) reads 1.00.
    """
    rows = []
    for i, case in enumerate(report.cases):
        base = case.source_truth
        if base <= 0:
            raise ZeroTruthValue(i)
        decision = case.decision
        rows.append(
            {
                "source_pred": decision.source_pred / base,
                "source_truth": 1.0,
                "source_lower": decision.source_ci.lower / base,
                "source_upper": decision.source_ci.upper / base,
                "target_pred": decision.target_pred / base,
                "target_truth": case.target_truth / base,
                "target_lower": decision.target_ci.lower / base,
                "target_upper": decision.target_ci.upper / base,
            }
        )
    return rows
