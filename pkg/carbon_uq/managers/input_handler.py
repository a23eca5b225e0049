"""
Input handler for the carbon_uq application.

Parses the plain comma-delimited hourly tables the pipeline consumes:

- mix:        ``timestamp,<source1>,<source2>,...`` (MWh)
- truth:      ``timestamp,carbon_intensity`` (gCO2eq/kWh)
- forecasts:  ``origin_timestamp,h1,...,hH``
- power:      ``timestamp,normalized_power`` (0..1)
- factors:    ``source,g_per_kwh``
- intervals:  ``target_timestamp,alpha,lower,upper,point_forecast,truth``

Hourly tables may have short dropouts; gaps of up to ``max_fill_hours``
consecutive hours are forward-filled and recorded in the provenance log.
"""

import logging
import math
import os
from typing import Any, Dict, List, NamedTuple, Optional, Set

import numpy as np
import pandas as pd

from models.data_models import (
    EmissionFactorTable,
    ForecastBatch,
    HourlySeries,
    Interval,
    IntervalSeries,
    PowerTrace,
    SourceMixRow,
    Unit,
)
from models.timeseries import stamp_from_timestamp, stamp_to_iso
from utils.errors import (
    GapTooLarge,
    InconsistentHorizon,
    ParseError,
    ValueOutOfUnitRange,
)

logger = logging.getLogger("carbon_uq.ingest")


class HourlyTable(NamedTuple):
    """Gap-filled contents of an hourly table."""

    start: int
    columns: List[str]
    values: np.ndarray  # shape (hours, columns)
    filled: np.ndarray  # bool per hour


class InputHandler:
    """
    Handles loading and validating input data.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the input handler with configuration.

        Args:
            config: Configuration settings
        """
        self.config = config
        self.max_fill_hours = config.get("ingest", {}).get("max_fill_hours", 3)
        self.provenance: List[Dict[str, Any]] = []

    # ------------------------------------------------------------------
    # Public parsers
    # ------------------------------------------------------------------

    def parse_mix_table(self, file_path: str) -> List[SourceMixRow]:
        """
        Load an hourly energy source mix.

        Args:
            file_path: Path to ``timestamp,<source>,...`` file (MWh)

        Returns:
            SourceMixRows sorted by stamp, with forward-filled hours flagged

        Raises:
            ParseError: Malformed row, negative or non-finite value
            GapTooLarge: Gap longer than ``max_fill_hours``
        """
        table = self._read_hourly_table(file_path, table_name="mix")
        if not table.columns:
            raise ParseError("mix table needs at least one source column", path=file_path, line=1)

        rows = []
        for i in range(table.values.shape[0]):
            generation = {
                source: float(table.values[i, j]) for j, source in enumerate(table.columns)
            }
            rows.append(
                SourceMixRow(
                    stamp=table.start + i, generation=generation, filled=bool(table.filled[i])
                )
            )
        return rows

    def parse_truth_table(self, file_path: str, region: str) -> HourlySeries:
        """Load ground-truth carbon intensity (``timestamp,carbon_intensity``)."""
        table = self._read_hourly_table(
            file_path, table_name="truth", expected_columns=["carbon_intensity"]
        )
        return HourlySeries(
            region=region,
            start=table.start,
            values=tuple(float(v) for v in table.values[:, 0]),
            unit=Unit.GCO2EQ_PER_KWH,
        )

    def parse_power_trace(self, file_path: str, peak_mw: float, region: str) -> PowerTrace:
        """
        Load a normalized power trace and scale it by the cluster peak.

        Raises:
            ValueOutOfUnitRange: If a normalized value is outside [0, 1]
        """
        table = self._read_hourly_table(
            file_path, table_name="power", expected_columns=["normalized_power"]
        )
        column = table.values[:, 0]
        outside = np.flatnonzero((column < 0.0) | (column > 1.0))
        if outside.size:
            i = int(outside[0])
            raise ValueOutOfUnitRange(
                f"{file_path}: normalized power {column[i]} at "
                f"{stamp_to_iso(table.start + i)} is outside [0, 1]"
            )
        return PowerTrace(
            region=region,
            start=table.start,
            normalized=tuple(float(v) for v in column),
            peak_mw=peak_mw,
        )

    def parse_forecast_table(self, file_path: str, region: str) -> List[ForecastBatch]:
        """
        Load externally produced multi-horizon point forecasts.

        Each record is an origin stamp followed by H predictions for
        origin+1 .. origin+H. H must be the same for every record.

        Returns:
            ForecastBatches sorted by origin

        Raises:
            ParseError: Malformed record
            InconsistentHorizon: Records of differing length
        """
        self._require_file(file_path)
        with open(file_path, "r", encoding="utf-8") as f:
            widths = [line.count(",") + 1 for line in f if line.strip()]
        if len(widths) < 2:
            raise ParseError("forecast table has no records", path=file_path, line=1)

        frame = self._read_csv(
            file_path, header=None, skiprows=1, names=list(range(max(widths)))
        ).fillna("")
        header_horizon = widths[0] - 1

        batches = []
        horizons: Set[int] = set()
        for i, record in enumerate(frame.itertuples(index=False)):
            line = i + 2
            cells = [str(c).strip() for c in record]
            while cells and cells[-1] == "":
                cells.pop()
            if len(cells) < 2:
                raise ParseError("record has no predictions", path=file_path, line=line)

            horizons.add(len(cells) - 1)
            if len(horizons) > 1 or len(cells) - 1 != header_horizon:
                raise InconsistentHorizon(
                    f"{file_path}, line {line}: {len(cells) - 1} predictions, "
                    f"header declares {header_horizon}"
                )

            origin = self._parse_stamp(cells[0], file_path, line)
            predictions = tuple(
                self._parse_number(cell, file_path, line, f"h{h}")
                for h, cell in enumerate(cells[1:], start=1)
            )
            batches.append(
                ForecastBatch(
                    region=region,
                    origin=origin,
                    horizon=len(predictions),
                    predictions=predictions,
                )
            )

        batches.sort(key=lambda b: b.origin)
        for previous, current in zip(batches, batches[1:]):
            if previous.origin == current.origin:
                raise ParseError(
                    f"duplicate origin {stamp_to_iso(current.origin)}", path=file_path
                )
        return batches

    def load_emission_factors(self, file_path: str) -> EmissionFactorTable:
        """Load ``source,g_per_kwh`` emission factors."""
        frame = self._read_csv(file_path)
        if list(frame.columns) != ["source", "g_per_kwh"]:
            raise ParseError(
                "expected header 'source,g_per_kwh'", path=file_path, line=1
            )

        factors = {}
        for i, (source, value) in enumerate(zip(frame["source"], frame["g_per_kwh"])):
            line = i + 2
            source = str(source).strip()
            if not source:
                raise ParseError("empty source name", path=file_path, line=line)
            if source in factors:
                raise ParseError(f"duplicate source '{source}'", path=file_path, line=line)
            factors[source] = self._parse_number(value, file_path, line, "g_per_kwh")
        return EmissionFactorTable(factors=factors)

    def parse_interval_table(self, file_path: str, region: str, horizon: int = 1) -> IntervalSeries:
        """
        Load an interval file written by ``run``.

        Columns: ``target_timestamp,alpha,lower,upper,point_forecast,truth``;
        the truth column may be blank.
        """
        frame = self._read_csv(file_path)
        expected = ["target_timestamp", "alpha", "lower", "upper", "point_forecast", "truth"]
        if list(frame.columns) != expected:
            raise ParseError(f"expected header '{','.join(expected)}'", path=file_path, line=1)
        if frame.empty:
            raise ParseError("interval file has no rows", path=file_path, line=2)

        intervals, points = [], []
        start = None
        alpha = None
        for i, record in enumerate(frame.itertuples(index=False)):
            line = i + 2
            stamp = self._parse_stamp(record.target_timestamp, file_path, line)
            if start is None:
                start = stamp
            elif stamp != start + i:
                raise ParseError(
                    f"expected {stamp_to_iso(start + i)}, got {record.target_timestamp}",
                    path=file_path,
                    line=line,
                    column="target_timestamp",
                )
            row_alpha = self._parse_number(record.alpha, file_path, line, "alpha")
            if alpha is None:
                alpha = row_alpha
            elif row_alpha != alpha:
                raise ParseError(f"alpha {row_alpha} differs from {alpha}", path=file_path, line=line, column="alpha")
            intervals.append(
                Interval(
                    lower=self._parse_number(record.lower, file_path, line, "lower"),
                    upper=self._parse_number(record.upper, file_path, line, "upper"),
                    alpha=alpha,
                )
            )
            points.append(self._parse_number(record.point_forecast, file_path, line, "point_forecast"))

        return IntervalSeries(
            region=region,
            start=start,
            intervals=tuple(intervals),
            alpha=alpha,
            points=tuple(points),
            horizon=horizon,
        )

    def filled_stamps(self, file_path: Optional[str] = None) -> Set[int]:
        """Stamps forward-filled so far, optionally restricted to one file."""
        return {
            record["stamp"]
            for record in self.provenance
            if file_path is None or record["path"] == file_path
        }

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _read_hourly_table(
        self,
        file_path: str,
        table_name: str,
        expected_columns: Optional[List[str]] = None,
    ) -> HourlyTable:
        frame = self._read_csv(file_path)
        if frame.shape[1] < 2:
            raise ParseError("expected a timestamp column and value columns", path=file_path, line=1)

        columns = [str(c).strip() for c in frame.columns[1:]]
        if expected_columns is not None and columns != expected_columns:
            raise ParseError(
                f"expected columns {['timestamp'] + expected_columns}, got {list(frame.columns)}",
                path=file_path,
                line=1,
            )
        if frame.empty:
            raise ParseError("table has no rows", path=file_path, line=2)

        stamps = np.empty(len(frame), dtype=np.int64)
        values = np.empty((len(frame), len(columns)), dtype=float)
        for i, record in enumerate(frame.itertuples(index=False)):
            line = i + 2
            stamps[i] = self._parse_stamp(record[0], file_path, line)
            for j, column in enumerate(columns):
                value = self._parse_number(record[j + 1], file_path, line, column)
                if value < 0:
                    raise ParseError(
                        f"negative value {value}", path=file_path, line=line, column=column
                    )
                values[i, j] = value

        order = np.argsort(stamps, kind="stable")
        stamps = stamps[order]
        values = values[order]
        duplicates = np.flatnonzero(np.diff(stamps) == 0)
        if duplicates.size:
            raise ParseError(
                f"duplicate timestamp {stamp_to_iso(int(stamps[duplicates[0]]))}",
                path=file_path,
            )

        return self._forward_fill(stamps, values, columns, file_path, table_name)

    def _forward_fill(
        self,
        stamps: np.ndarray,
        values: np.ndarray,
        columns: List[str],
        file_path: str,
        table_name: str,
    ) -> HourlyTable:
        start = int(stamps[0])
        length = int(stamps[-1]) - start + 1
        positions = stamps - start

        gaps = np.diff(stamps) - 1
        for i in np.flatnonzero(gaps > 0):
            missing = int(gaps[i])
            if missing > self.max_fill_hours:
                first = int(stamps[i]) + 1
                raise GapTooLarge(
                    stamp_to_iso(first), stamp_to_iso(first + missing - 1), missing, path=file_path
                )

        filled = np.ones(length, dtype=bool)
        filled[positions] = False
        full = np.empty((length, len(columns)), dtype=float)
        full[positions] = values

        # Each missing hour takes the last observed row.
        last_observed = np.maximum.accumulate(np.where(filled, 0, np.arange(length)))
        full = full[last_observed]

        filled_count = int(filled.sum())
        if filled_count:
            logger.info(f"Forward-filled {filled_count} hours in {file_path}")
            for position in np.flatnonzero(filled):
                stamp = start + int(position)
                self.provenance.append(
                    {
                        "table": table_name,
                        "path": file_path,
                        "stamp": stamp,
                        "timestamp": stamp_to_iso(stamp),
                        "filled": True,
                    }
                )

        return HourlyTable(start=start, columns=columns, values=full, filled=filled)

    def _read_csv(self, file_path: str, **kwargs) -> pd.DataFrame:
        self._require_file(file_path)
        try:
            return pd.read_csv(
                file_path, dtype=str, keep_default_na=False, skipinitialspace=True, **kwargs
            )
        except pd.errors.EmptyDataError:
            raise ParseError("file is empty", path=file_path, line=1)
        except pd.errors.ParserError as e:
            raise ParseError(str(e).strip(), path=file_path)

    @staticmethod
    def _require_file(file_path: str) -> None:
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"Input file not found: {file_path}")

    @staticmethod
    def _parse_stamp(cell: Any, file_path: str, line: int) -> int:
        try:
            return stamp_from_timestamp(str(cell).strip())
        except (ValueError, TypeError) as e:
            raise ParseError(f"invalid timestamp '{cell}': {e}", path=file_path, line=line, column="timestamp")

    @staticmethod
    def _parse_number(cell: Any, file_path: str, line: int, column: str) -> float:
        try:
            value = float(str(cell).strip())
        except ValueError:
            raise ParseError(f"invalid number '{cell}'", path=file_path, line=line, column=column)
        if not math.isfinite(value):
            raise ParseError(f"non-finite value '{cell}'", path=file_path, line=line, column=column)
        return value
