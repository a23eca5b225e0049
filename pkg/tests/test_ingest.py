import pytest
from pydantic import ValidationError

from analysis.carbon_intensity import mix_to_carbon_intensity
from managers.input_handler import InputHandler
from managers.output_handler import OutputHandler
from models.data_models import EmissionFactorTable, HourlySeries, SourceMixRow
from models.timeseries import stamp_from_timestamp
from utils.errors import (
    GapTooLarge,
    InconsistentHorizon,
    MissingFactor,
    ParseError,
    ValueOutOfUnitRange,
    ZeroGeneration,
)

T0 = "2022-07-01T00:00:00Z"


@pytest.fixture
def handler():
    return InputHandler({"ingest": {"max_fill_hours": 3}})


def test_mix_table_two_rows(handler, write_file):
    path = write_file(
        "mix.csv",
        "timestamp,solar,gas\n2022-07-01T00:00:00Z,10,90\n2022-07-01T01:00:00Z,20,80\n",
    )
    rows = handler.parse_mix_table(path)
    assert len(rows) == 2
    assert set(rows[0].generation) == {"solar", "gas"}
    assert rows[1].stamp == rows[0].stamp + 1
    assert not any(r.filled for r in rows)


def test_mix_table_gap_is_filled_and_recorded(handler, write_file):
    path = write_file(
        "mix.csv",
        "timestamp,gas\n"
        "2022-07-01T00:00:00Z,100\n"
        "2022-07-01T03:00:00Z,130\n",
    )
    rows = handler.parse_mix_table(path)
    assert len(rows) == 4
    assert [r.filled for r in rows] == [False, True, True, False]
    assert rows[1].generation["gas"] == 100.0
    start = stamp_from_timestamp(T0)
    assert handler.filled_stamps(path) == {start + 1, start + 2}
    assert {r["table"] for r in handler.provenance} == {"mix"}


def test_gap_beyond_fill_limit(handler, write_file):
    path = write_file(
        "truth.csv",
        "timestamp,carbon_intensity\n"
        "2022-07-01T00:00:00Z,100\n"
        "2022-07-01T06:00:00Z,130\n",
    )
    with pytest.raises(GapTooLarge, match="2022-07-01T01:00:00Z to 2022-07-01T05:00:00Z"):
        handler.parse_truth_table(path, "CISO")


def test_negative_generation_names_row_and_column(handler, write_file):
    path = write_file(
        "mix.csv",
        "timestamp,solar,gas\n2022-07-01T00:00:00Z,10,90\n2022-07-01T01:00:00Z,20,-5\n",
    )
    with pytest.raises(ParseError) as excinfo:
        handler.parse_mix_table(path)
    assert excinfo.value.line == 3
    assert excinfo.value.column == "gas"


def test_missing_file(handler, tmp_path):
    with pytest.raises(FileNotFoundError):
        handler.parse_truth_table(str(tmp_path / "absent.csv"), "CISO")


def test_truth_header_is_checked(handler, write_file):
    path = write_file("truth.csv", "timestamp,ci\n2022-07-01T00:00:00Z,100\n")
    with pytest.raises(ParseError):
        handler.parse_truth_table(path, "CISO")


def _factors(**values):
    return EmissionFactorTable(factors=values)


def test_single_source_intensity_is_its_factor():
    rows = [SourceMixRow(stamp=0, generation={"gas": 100.0})]
    assert mix_to_carbon_intensity(rows, _factors(gas=490.0), "TEST").values == (490.0,)


def test_weighted_intensity():
    rows = [SourceMixRow(stamp=0, generation={"coal": 50.0, "wind": 50.0})]
    series = mix_to_carbon_intensity(rows, _factors(coal=820.0, wind=11.0), "TEST")
    assert series.values[0] == pytest.approx(415.5)


def test_zero_generation():
    rows = [
        SourceMixRow(stamp=0, generation={"gas": 1.0}),
        SourceMixRow(stamp=1, generation={"gas": 0.0}),
    ]
    with pytest.raises(ZeroGeneration) as excinfo:
        mix_to_carbon_intensity(rows, _factors(gas=490.0), "TEST")
    assert excinfo.value.stamp == 1


def test_intensity_ignores_generation_scale():
    factors = _factors(coal=820.0, gas=490.0, wind=11.0)
    rows = [
        SourceMixRow(stamp=0, generation={"coal": 30.0, "gas": 50.0, "wind": 20.0}),
        SourceMixRow(stamp=1, generation={"coal": 1.0, "gas": 0.0, "wind": 99.0}),
    ]
    scaled = [
        SourceMixRow(stamp=r.stamp, generation={k: 7.5 * v for k, v in r.generation.items()}) for r in rows
    ]
    base = mix_to_carbon_intensity(rows, factors, "TEST").values
    assert mix_to_carbon_intensity(scaled, factors, "TEST").values == pytest.approx(base)
    for value in base:
        assert 11.0 <= value <= 820.0


def test_missing_factor():
    rows = [SourceMixRow(stamp=0, generation={"gas": 1.0, "peat": 1.0})]
    with pytest.raises(MissingFactor):
        mix_to_carbon_intensity(rows, _factors(gas=490.0), "TEST")


def _forecast_file(write_file, widths):
    header = "origin_timestamp," + ",".join(f"h{h}" for h in range(1, widths[0] + 1))
    lines = [header]
    for i, width in enumerate(widths):
        lines.append(f"2022-07-0{i + 1}T23:00:00Z," + ",".join(["100"] * width))
    return write_file("forecasts.csv", "\n".join(lines) + "\n")


def test_forecast_table(handler, write_file):
    batches = handler.parse_forecast_table(_forecast_file(write_file, [24, 24]), "CISO")
    assert len(batches) == 2
    assert all(b.horizon == 24 for b in batches)
    assert batches[0].origin < batches[1].origin


def test_forecast_table_96_hours(handler, write_file):
    batches = handler.parse_forecast_table(_forecast_file(write_file, [96]), "CISO")
    assert batches[0].horizon == 96


def test_forecast_table_mixed_horizons(handler, write_file):
    with pytest.raises(InconsistentHorizon):
        handler.parse_forecast_table(_forecast_file(write_file, [96, 24]), "CISO")


def _power_file(write_file, values):
    lines = ["timestamp,normalized_power"]
    for h, value in enumerate(values):
        lines.append(f"2022-07-01T{h:02d}:00:00Z,{value}")
    return write_file("power.csv", "\n".join(lines) + "\n")


def test_power_trace_constant(handler, write_file):
    trace = handler.parse_power_trace(_power_file(write_file, [1.0] * 24), 20.0, "LOAD")
    assert list(trace.power_mw) == [20.0] * 24

    zero = handler.parse_power_trace(_power_file(write_file, [0.0] * 24), 20.0, "LOAD")
    assert zero.power_mw.sum() == 0.0


def test_power_trace_out_of_range(handler, write_file):
    with pytest.raises(ValueOutOfUnitRange):
        handler.parse_power_trace(_power_file(write_file, [1.0, 1.2]), 20.0, "LOAD")


def test_emission_factors(handler, write_file):
    table = handler.load_emission_factors(
        write_file("factors.csv", "source,g_per_kwh\ncoal,820\nwind,11\n")
    )
    assert table.factor("coal") == 820.0
    with pytest.raises(MissingFactor):
        table.factor("peat")


def test_emission_factors_must_be_non_negative():
    with pytest.raises(ValidationError):
        EmissionFactorTable(factors={"coal": -1.0})


def test_truth_file_round_trip_is_exact(handler, tmp_path):
    values = (0.1 + 0.2, 1.0 / 3.0, 412.123456789012, 1e-7, 250.0)
    series = HourlySeries(region="CISO", start=stamp_from_timestamp(T0), values=values)
    path = OutputHandler({}).write_hourly_series(series, str(tmp_path / "ci.csv"))

    parsed = handler.parse_truth_table(path, "CISO")
    assert parsed.start == series.start
    assert parsed.values == values
