"""
Output handler for the carbon_uq application.

Everything is written as comma-delimited text with ``\\n`` line endings and
rows in a fixed order, so identical inputs give byte-identical files.
"""

import json
import os
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from models.data_models import (
    EmissionFactorTable,
    ForecastBatch,
    HourlySeries,
    IntervalSeries,
    PowerTrace,
    ShiftReport,
)
from models.timeseries import stamp_to_iso
from utils.helpers import ensure_directory_exists

NORMALIZED_CASE_COLUMNS = [
    "source_pred",
    "source_lower",
    "source_upper",
    "source_truth",
    "target_pred",
    "target_lower",
    "target_upper",
    "target_truth",
]


class OutputHandler:
    """
    Handles formatting and exporting results into the workspace.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the output handler with configuration.

        Args:
            config: Configuration settings
        """
        self.config = config
        self.workspace = config.get("output", {}).get("workspace", "./workspace")

    def path(self, *parts: str) -> str:
        """Path inside the workspace; parent directories are created."""
        full = os.path.join(self.workspace, *parts)
        ensure_directory_exists(os.path.dirname(full))
        return full

    # ------------------------------------------------------------------
    # Normalized input tables
    # ------------------------------------------------------------------

    def write_hourly_series(self, series: HourlySeries, file_path: str, column: str = "carbon_intensity") -> str:
        frame = pd.DataFrame(
            {
                "timestamp": [stamp_to_iso(s) for s in range(series.start, series.end)],
                column: list(series.values),
            }
        )
        return self._write_frame(frame, file_path)

    def write_power_trace(self, trace: PowerTrace, file_path: str) -> str:
        frame = pd.DataFrame(
            {
                "timestamp": [stamp_to_iso(s) for s in range(trace.start, trace.end)],
                "normalized_power": list(trace.normalized),
            }
        )
        return self._write_frame(frame, file_path)

    def write_forecasts(self, batches: Sequence[ForecastBatch], file_path: str) -> str:
        """Write ``origin_timestamp,h1..hH``; all batches share one horizon."""
        horizon = batches[0].horizon if batches else 0
        columns = ["origin_timestamp"] + [f"h{h}" for h in range(1, horizon + 1)]
        rows = [[stamp_to_iso(b.origin)] + list(b.predictions) for b in batches]
        return self._write_frame(pd.DataFrame(rows, columns=columns), file_path)

    def write_emission_factors(self, table: EmissionFactorTable, file_path: str) -> str:
        frame = pd.DataFrame(
            sorted(table.factors.items()), columns=["source", "g_per_kwh"]
        )
        return self._write_frame(frame, file_path)

    def write_provenance(self, records: Sequence[Dict[str, Any]], file_path: str) -> str:
        """Write ``region,table,timestamp,filled``, one row per filled hour."""
        frame = pd.DataFrame(
            [
                {
                    "region": r["region"],
                    "table": r["table"],
                    "timestamp": r["timestamp"],
                    "filled": "true" if r["filled"] else "false",
                }
                for r in sorted(records, key=lambda r: (r["region"], r["table"], r["stamp"]))
            ],
            columns=["region", "table", "timestamp", "filled"],
        )
        return self._write_frame(frame, file_path)

    # ------------------------------------------------------------------
    # Results
    # ------------------------------------------------------------------

    def write_intervals(
        self, intervals: IntervalSeries, file_path: str, truth: Optional[HourlySeries] = None
    ) -> str:
        """Write ``target_timestamp,alpha,lower,upper,point_forecast,truth``."""
        points = intervals.points or (None,) * len(intervals)
        rows = []
        for i, interval in enumerate(intervals.intervals):
            stamp = intervals.start + i
            rows.append(
                {
                    "target_timestamp": stamp_to_iso(stamp),
                    "alpha": f"{intervals.alpha:g}",
                    "lower": interval.lower,
                    "upper": interval.upper,
                    "point_forecast": "" if points[i] is None else points[i],
                    "truth": truth.value_at(stamp) if truth is not None and truth.covers(stamp) else "",
                }
            )
        columns = ["target_timestamp", "alpha", "lower", "upper", "point_forecast", "truth"]
        return self._write_frame(pd.DataFrame(rows, columns=columns), file_path)

    def write_rows(self, rows: List[Dict[str, Any]], file_path: str, columns: Optional[List[str]] = None) -> str:
        """Write report rows in the given order."""
        frame = pd.DataFrame(rows, columns=columns)
        return self._write_frame(frame, file_path)

    def write_shift_cases(
        self, report: ShiftReport, normalized: Sequence[Dict[str, float]], file_path: str
    ) -> str:
        """
        Write one row per decision.

        Predicted, interval and true totals are written relative to the
        source's true total (``normalized``, one row per case); the raw
        true totals follow in grams.
        """
        rows = [
            {
                "mode": report.mode,
                "policy": report.policy,
                "day": case.day.isoformat(),
                "source": case.source,
                "target": case.target,
                **{column: values[column] for column in NORMALIZED_CASE_COLUMNS},
                "source_truth_grams": case.source_truth,
                "target_truth_grams": case.target_truth,
                "action": case.decision.action,
                "reason": case.decision.reason,
                "misleading": "true" if case.misleading else "false",
                "increase_percent": case.increase_percent,
                "realized": "true" if case.realized else "false",
            }
            for case, values in zip(report.cases, normalized)
        ]
        return self._write_frame(pd.DataFrame(rows), file_path)

    def write_run_summary(self, summary: Dict[str, Any], file_path: str) -> str:
        """Write a JSON summary with sorted keys."""
        ensure_directory_exists(os.path.dirname(file_path))
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(summary, f, indent=2, sort_keys=True, default=str)
            f.write("\n")
        return file_path

    def _write_frame(self, frame: pd.DataFrame, file_path: str) -> str:
        ensure_directory_exists(os.path.dirname(file_path))
        frame.to_csv(file_path, index=False, lineterminator="\n")
        return file_path
