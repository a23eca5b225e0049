"""
Shared fixtures. Modules import each other flat (``from models...``), so the
application directory goes on the path first.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "carbon_uq"))

import pytest  # noqa: E402

from models.data_models import HourlySeries, Interval, IntervalSeries, PowerTrace  # noqa: E402


@pytest.fixture
def make_series():
    def _make(values, start=0, region="TEST"):
        return HourlySeries(region=region, start=start, values=tuple(float(v) for v in values))

    return _make


@pytest.fixture
def make_intervals():
    def _make(bounds, alpha=0.1, start=0, points=None, region="TEST"):
        return IntervalSeries(
            region=region,
            start=start,
            intervals=tuple(Interval(lower=lo, upper=hi, alpha=alpha) for lo, hi in bounds),
            alpha=alpha,
            points=tuple(points) if points is not None else None,
        )

    return _make


@pytest.fixture
def flat_trace():
    """20 MW at full load for one day."""
    return PowerTrace(region="LOAD", start=0, normalized=(1.0,) * 24, peak_mw=20.0)


@pytest.fixture
def write_file(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
