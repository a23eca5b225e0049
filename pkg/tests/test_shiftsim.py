from datetime import date, timedelta

import numpy as np
import pytest

from analysis.load_shifting import (
    day_totals,
    decide_shift,
    emissions,
    normalized_cases,
    origin_aligned_intervals,
    spatial_shift_sim,
    summary_row,
    temporal_shift_sim,
    tons_delta,
    tons_row,
)
from models.data_models import DayTotal, HourlySeries, Interval, IntervalSeries, PowerTrace, ShiftPolicy
from models.timeseries import day_start
from utils.errors import AlignmentError, AlphaMismatch, HorizonMismatch, InsufficientDays, ZeroTruthValue

POINT = ShiftPolicy(kind="point")
DOMINANCE = ShiftPolicy(kind="interval_dominance")
FIRST_DAY = date(2022, 7, 1)


def _ci(lower, upper, alpha=0.1):
    return Interval(lower=lower, upper=upper, alpha=alpha)


def _total(offset, pred, truth, lower=None, upper=None, region="ERCO"):
    lower = pred - 20.0 if lower is None else lower
    upper = pred + 20.0 if upper is None else upper
    return DayTotal(
        region=region,
        day=FIRST_DAY + timedelta(days=offset),
        pred=pred,
        truth=truth,
        ci=_ci(lower, upper),
    )


# --- emissions ---------------------------------------------------------------


def test_flat_cluster_day_is_48_tons(flat_trace, make_series):
    total = emissions(flat_trace, make_series([100.0] * 24))
    assert total.grams == 48e6
    assert total.tons == 48.0


def test_emissions_are_linear(make_series):
    rng = np.random.default_rng(5)
    normalized = rng.uniform(0, 1, size=72)
    ci = rng.uniform(50, 800, size=72)
    trace = PowerTrace(region="LOAD", start=0, normalized=tuple(normalized), peak_mw=20.0)
    base = emissions(trace, make_series(ci)).grams

    half_power = PowerTrace(region="LOAD", start=0, normalized=tuple(normalized), peak_mw=10.0)
    assert abs(emissions(half_power, make_series(ci)).grams / base - 0.5) < 1e-12
    assert abs(emissions(trace, make_series(ci * 3.7)).grams / base - 3.7) < 1e-12


def test_emissions_need_the_same_hours(flat_trace, make_series):
    with pytest.raises(AlignmentError):
        emissions(flat_trace, make_series([100.0] * 24, start=1))


def test_tons_delta():
    assert tons_delta(5, 42e6) == pytest.approx(2.1)
    assert abs(tons_delta(14, 74.3e6) - 10.4) <= 0.05
    with pytest.raises(ValueError):
        tons_delta(5, 0.0)


# --- decisions ---------------------------------------------------------------


def test_similar_day_intervals():
    day1 = (1.13, _ci(0.83, 1.21))
    day2 = (0.96, _ci(0.84, 1.20))
    assert decide_shift(day1, day2, POINT).action == "shift"
    decision = decide_shift(day1, day2, DOMINANCE)
    assert decision.action == "stay"
    assert "overlap" in decision.reason


def test_overlapping_regions_stay_under_dominance():
    isne = (0.90, _ci(0.83, 0.93))
    erco = (0.86, _ci(0.86, 1.11))
    assert decide_shift(isne, erco, POINT).action == "shift"
    assert decide_shift(isne, erco, DOMINANCE).action == "stay"
    assert decide_shift(erco, isne, POINT).action == "stay"


def test_strict_dominance_shifts_under_every_policy():
    source = (3.5, _ci(3.0, 4.0))
    target = (1.5, _ci(1.0, 2.0))
    for policy in (POINT, DOMINANCE, ShiftPolicy.parse("overlap:0.25")):
        assert decide_shift(source, target, policy).action == "shift"


def test_dominance_never_shifts_on_overlap():
    rng = np.random.default_rng(13)
    for _ in range(2000):
        s_lo, t_lo = rng.uniform(0, 10, size=2)
        s_hi = s_lo + rng.uniform(0, 5)
        # any target upper at or above the source lower overlaps it
        t_lo = min(t_lo, s_hi)
        t_hi = max(t_lo, s_lo) + rng.uniform(0, 5)
        decision = decide_shift(
            (rng.uniform(0, 10), _ci(s_lo, s_hi)),
            (rng.uniform(0, 10), _ci(t_lo, t_hi)),
            DOMINANCE,
        )
        assert decision.action == "stay"


def test_overlap_threshold():
    source = (6.0, _ci(0.0, 10.0))
    target = (5.0, _ci(8.0, 18.0))
    assert decide_shift(source, target, ShiftPolicy.parse("overlap:0.25")).action == "shift"
    assert decide_shift(source, target, ShiftPolicy.parse("overlap:0.1")).action == "stay"
    assert decide_shift(target, source, ShiftPolicy.parse("overlap:1")).action == "stay"


def test_alpha_mismatch():
    with pytest.raises(AlphaMismatch):
        decide_shift((1.0, _ci(0, 2, alpha=0.1)), (1.0, _ci(0, 2, alpha=0.05)), POINT)


# --- temporal study ----------------------------------------------------------


def _two_similar_days():
    return [
        _total(0, 1.13, 1.00, 0.83, 1.21),
        _total(1, 0.96, 1.05, 0.84, 1.20),
    ]


def test_temporal_pair_from_similar_days():
    point = temporal_shift_sim(_two_similar_days(), POINT)
    assert point.misleading_percent == 100.0
    assert point.increased_emissions_percent == pytest.approx(5.0)
    assert point.source == "ERCO:d" and point.target == "ERCO:d+1"

    dominance = temporal_shift_sim(_two_similar_days(), DOMINANCE)
    assert dominance.misleading_percent == 100.0
    assert dominance.increased_emissions_percent == 0.0
    assert dominance.potential_increase_percent == pytest.approx(5.0)


def test_flipped_predicate_reverses_the_pair():
    report = temporal_shift_sim(_two_similar_days(), POINT, flip=True)
    assert report.misleading_percent == 0.0
    assert report.cases[0].source == "2022-07-02"


def test_normalized_cases_read_one_at_the_source():
    rows = normalized_cases(temporal_shift_sim(_two_similar_days(), POINT))
    assert rows[0]["source_truth"] == 1.0
    assert rows[0]["target_truth"] == pytest.approx(1.05)
    assert rows[0]["target_upper"] == pytest.approx(1.20)


def test_ten_pairs_two_misleading():
    preds = [100, 90, 95, 96, 97, 98, 90, 99, 100, 101, 102]
    truths = [100, 104, 100, 100, 100, 100, 106, 100, 100, 100, 100]
    totals = [_total(i, float(p), float(t)) for i, (p, t) in enumerate(zip(preds, truths))]

    report = temporal_shift_sim(totals, POINT)
    assert len(report.cases) == 10
    assert report.misleading_percent == 20.0
    assert report.increased_emissions_percent == pytest.approx(5.0)
    assert summary_row(report) == {
        "source": "ERCO:d",
        "target": "ERCO:d+1",
        "misleading_percent": "20.00",
        "increased_emissions_percent": "5.00",
    }

    # every misleading pair here has overlapping intervals
    assert temporal_shift_sim(totals, DOMINANCE).increased_emissions_percent == 0.0


def test_perfect_forecaster_is_never_misleading():
    rng = np.random.default_rng(3)
    values = rng.uniform(50, 150, size=30)
    totals = [_total(i, v, v) for i, v in enumerate(values)]
    report = temporal_shift_sim(totals, POINT)
    assert report.misleading_percent == 0.0
    assert report.totals["policy_grams"] <= report.totals["stay_grams"]


def test_single_day_has_no_pairs():
    with pytest.raises(InsufficientDays):
        temporal_shift_sim([_total(0, 1.0, 1.0)], POINT)


# --- spatial study -----------------------------------------------------------


def test_spatial_day_toward_the_dirtier_region():
    source = [_total(0, 0.90, 0.87, 0.83, 0.93, region="ISNE")]
    target = [_total(0, 0.86, 1.00, 0.86, 1.11, region="ERCO")]

    point = spatial_shift_sim(source, target, POINT)
    assert (point.source, point.target) == ("ISNE", "ERCO")
    assert point.misleading_percent == 100.0
    assert point.increased_emissions_percent == pytest.approx(14.94, abs=0.01)
    assert point.totals["policy_grams"] == 1.00

    dominance = spatial_shift_sim(source, target, DOMINANCE)
    assert dominance.increased_emissions_percent == 0.0
    assert dominance.totals["policy_grams"] == 0.87


def test_spatial_twenty_days_one_misleading():
    source = [_total(i, 100.0, 100.0, region="ISNE") for i in range(20)]
    target = [_total(0, 90.0, 107.3, region="ERCO")] + [
        _total(i, 110.0, 100.0, region="ERCO") for i in range(1, 20)
    ]
    report = spatial_shift_sim(source, target, POINT)
    assert report.misleading_percent == 5.0
    assert report.increased_emissions_percent == pytest.approx(7.3)


def test_identical_regions_always_stay():
    days = [_total(i, 100.0 + i, 95.0 + 2 * i, region="CISO") for i in range(5)]
    twin = [d.model_copy(update={"region": "ERCO"}) for d in days]
    for policy in (POINT, DOMINANCE):
        report = spatial_shift_sim(days, twin, policy)
        assert report.misleading_percent == 0.0
        assert all(c.decision.action == "stay" for c in report.cases)


def test_spatial_regions_must_share_days():
    source = [_total(i, 1.0, 1.0, region="ISNE") for i in range(3)]
    target = [_total(i, 1.0, 1.0, region="ERCO") for i in range(1, 4)]
    with pytest.raises(AlignmentError):
        spatial_shift_sim(source, target, POINT)


# --- day totals --------------------------------------------------------------


def test_day_totals_from_hourly_intervals(flat_trace, make_intervals):
    start = day_start(FIRST_DAY)
    intervals = make_intervals([(90.0, 120.0)] * 48, start=start, points=[110.0] * 48, region="CISO")
    truth = HourlySeries(region="CISO", start=start, values=(100.0,) * 48)

    totals = day_totals(flat_trace, intervals, truth)
    assert [t.day for t in totals] == [FIRST_DAY, FIRST_DAY + timedelta(days=1)]
    first = totals[0]
    assert first.truth == 48e6
    assert first.pred == pytest.approx(52.8e6)
    assert (first.ci.lower, first.ci.upper) == pytest.approx((43.2e6, 57.6e6))


def test_day_totals_skip_partial_days(flat_trace, make_intervals):
    start = day_start(FIRST_DAY) + 5
    intervals = make_intervals([(90.0, 120.0)] * 48, start=start, points=[110.0] * 48, region="CISO")
    truth = HourlySeries(region="CISO", start=start, values=(100.0,) * 48)
    totals = day_totals(flat_trace, intervals, truth)
    assert [t.day for t in totals] == [FIRST_DAY + timedelta(days=1)]


def _stream(h, start, length=48, alpha=0.1):
    return IntervalSeries(
        region="CISO",
        start=start,
        intervals=tuple(Interval(lower=float(h), upper=h + 1.0, alpha=alpha) for _ in range(length)),
        alpha=alpha,
        points=(h + 0.5,) * length,
        horizon=h,
    )


def test_origin_aligned_intervals_read_hours_ahead_of_midnight():
    start = day_start(FIRST_DAY)
    streams = {h: _stream(h, start) for h in range(1, 49)}

    same_day = origin_aligned_intervals(streams, 0)
    assert [i.lower for i in same_day.intervals[:24]] == [float(h) for h in range(1, 25)]
    assert same_day.intervals[24:] == same_day.intervals[:24]
    assert same_day.points[0] == 1.5

    next_day = origin_aligned_intervals(streams, 1)
    assert [i.lower for i in next_day.intervals[:24]] == [float(h) for h in range(25, 49)]
    assert next_day.horizon == 25


def test_origin_aligned_intervals_need_every_horizon():
    start = day_start(FIRST_DAY)
    streams = {h: _stream(h, start) for h in range(1, 25)}
    with pytest.raises(HorizonMismatch):
        origin_aligned_intervals(streams, 1)

    streams[7] = _stream(7, start + 1)
    with pytest.raises(AlignmentError):
        origin_aligned_intervals(streams, 0)


def test_next_day_read_from_the_earlier_origin():
    same_day = [_total(0, 100.0, 100.0), _total(1, 200.0, 110.0)]
    day_ahead = [_total(1, 90.0, 110.0)]

    report = temporal_shift_sim(same_day, POINT, next_day_totals=day_ahead)
    assert len(report.cases) == 1
    assert report.cases[0].decision.target_pred == 90.0
    assert report.misleading_percent == 100.0
    assert report.increased_emissions_percent == pytest.approx(10.0)

    assert temporal_shift_sim(same_day, POINT).misleading_percent == 0.0


def test_tons_row():
    totals = [
        _total(0, 52e6, 48e6, 40e6, 60e6),
        _total(1, 50e6, 50.4e6, 45e6, 58e6),
    ]
    report = temporal_shift_sim(totals, POINT)
    assert tons_row(report) == {
        "source": "ERCO:d",
        "target": "ERCO:d+1",
        "stay_tons": "48.000",
        "policy_tons": "50.400",
        "best_tons": "48.000",
        "tons_avoided": "-2.400",
        "misleading_day_tons": "2.400",
    }
    assert tons_row(temporal_shift_sim(totals, DOMINANCE))["tons_avoided"] == "0.000"


def test_normalizing_needs_source_emissions():
    report = temporal_shift_sim([_total(0, 1.0, 0.0), _total(1, 0.5, 1.0)], POINT)
    with pytest.raises(ZeroTruthValue):
        normalized_cases(report)
