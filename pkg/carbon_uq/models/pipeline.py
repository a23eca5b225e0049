"""
Pipeline class for the carbon_uq application.

Runs the subcommands against a workspace directory:

    ingest    validated, gap-filled inputs + provenance.csv
    forecast  baseline forecasts (when not imported)
    run       conformal intervals + coverage report per (region, alpha, horizon)
    shift     load-shifting case studies
    report    plot-ready tidy tables
"""

import glob
import logging
import os
from typing import Any, Dict, List, Optional, Set

import pandas as pd

from analysis.accuracy import SEASONS, daily_mape, group_daily_mapes, horizon_bucket_mape
from analysis.carbon_intensity import mix_to_carbon_intensity
from analysis.conformal import spci_run_horizons
from analysis.coverage import breakdown, breakdown_row, midpoint_closer_percent, width_stats
from analysis.load_shifting import (
    day_totals,
    normalized_cases,
    origin_aligned_intervals,
    spatial_shift_sim,
    summary_row,
    temporal_shift_sim,
    tons_row,
)
from analysis.synthetic import synthetic_power_trace
from managers.input_handler import InputHandler
from managers.log_manager import LogManager
from managers.output_handler import OutputHandler
from models.data_models import (
    ForecastBatch,
    HourlySeries,
    IntervalSeries,
    PipelineConfig,
    PowerTrace,
    ShiftPolicy,
    ShiftReport,
)
from models.forecaster import forecast_range
from models.timeseries import HOURS_PER_DAY, stamp_from_timestamp
from utils.errors import AlignmentError, ConfigError, EmptyTestSplit
from utils.helpers import alpha_tag, sanitize_filename

logger = logging.getLogger("carbon_uq.pipeline")

COVERAGE_COLUMNS = [
    "region",
    "alpha",
    "horizon",
    "coverage",
    "t_cov_p_cov",
    "t_cov_p_uncov",
    "t_uncov_p_cov",
    "t_uncov_p_uncov",
    "n",
    "mean_width",
    "median_width",
    "max_width",
    "midpoint_closer",
]

SUMMARY_COLUMNS = ["source", "target", "misleading_percent", "increased_emissions_percent"]

EMISSIONS_COLUMNS = [
    "source",
    "target",
    "stay_tons",
    "policy_tons",
    "best_tons",
    "tons_avoided",
    "misleading_day_tons",
]

POWER_REGION = "LOAD"


class Pipeline:
    """
    Owns one validated run description and the managers that read and
    write the workspace.
    """

    def __init__(
        self,
        settings: PipelineConfig,
        config: Dict[str, Any],
        log_manager: Optional[LogManager] = None,
        ui_manager: Optional[Any] = None,
    ):
        """
        Initialize the pipeline.

        Args:
            settings: Validated run description
            config: Raw configuration (handed to the managers)
            log_manager: Optional log manager for domain log lines
            ui_manager: Optional console UI
        """
        self.settings = settings
        self.config = config
        self.input_handler = InputHandler(config)
        self.output_handler = OutputHandler(config)
        self.log_manager = log_manager
        self.ui_manager = ui_manager

    # ------------------------------------------------------------------
    # Workspace layout
    # ------------------------------------------------------------------

    def _truth_path(self, region: str) -> str:
        return self.output_handler.path(region, "carbon_intensity.csv")

    def _forecast_path(self, region: str) -> str:
        return self.output_handler.path(region, "forecasts.csv")

    def _interval_path(self, region: str, alpha: float, horizon: int) -> str:
        return self.output_handler.path(region, f"intervals_{alpha_tag(alpha)}_h{horizon}.csv")

    def _power_path(self) -> str:
        return self.output_handler.path("power_trace.csv")

    def _require(self, file_path: str, hint: str) -> str:
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"{file_path} not found; run '{hint}' first")
        return file_path

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def cmd_ingest(self) -> List[str]:
        """
        Validate and normalize every input into the workspace.

        Returns:
            Paths written
        """
        settings = self.settings
        written = []
        provenance: List[Dict[str, Any]] = []

        factors = self.input_handler.load_emission_factors(settings.paths.emission_factors)
        written.append(
            self.output_handler.write_emission_factors(
                factors, self.output_handler.path("emission_factors.csv")
            )
        )

        for region in settings.regions:
            seen = len(self.input_handler.provenance)
            if settings.truth_from == "source_mix":
                rows = self.input_handler.parse_mix_table(self._input_path("mix", region))
                truth = mix_to_carbon_intensity(rows, factors, region)
            else:
                truth = self.input_handler.parse_truth_table(self._input_path("truth", region), region)
            written.append(self.output_handler.write_hourly_series(truth, self._truth_path(region)))

            if settings.forecast.source == "imported":
                batches = self.input_handler.parse_forecast_table(
                    self._input_path("forecasts", region), region
                )
                written.append(self.output_handler.write_forecasts(batches, self._forecast_path(region)))

            new_records = self.input_handler.provenance[seen:]
            for record in new_records:
                provenance.append({**record, "region": region})
            if self.log_manager:
                for table in sorted({r["table"] for r in new_records}):
                    self.log_manager.log_fill(
                        region, table, sum(1 for r in new_records if r["table"] == table)
                    )

        if settings.paths.power:
            seen = len(self.input_handler.provenance)
            trace = self.input_handler.parse_power_trace(
                settings.paths.power, settings.shift.peak_mw, POWER_REGION
            )
            written.append(self.output_handler.write_power_trace(trace, self._power_path()))
            for record in self.input_handler.provenance[seen:]:
                provenance.append({**record, "region": POWER_REGION})

        written.append(
            self.output_handler.write_provenance(
                provenance, self.output_handler.path("provenance.csv")
            )
        )
        logger.info(f"Ingested {len(settings.regions)} regions into {self.output_handler.workspace}")
        return written

    def cmd_forecast(self) -> List[str]:
        """Generate baseline forecasts for every region (skipped for imported forecasts)."""
        settings = self.settings
        if settings.forecast.source == "imported":
            logger.info("Forecasts are imported; nothing to generate")
            return []

        spec = settings.forecast.baseline
        written = []
        for region in settings.regions:
            truth = self._load_truth(region)
            batches = forecast_range(
                spec, truth, range(truth.start, truth.end), settings.forecast.horizon
            )
            if not batches:
                raise AlignmentError(
                    f"{region}: {len(truth)} hours of history are too few for {spec.label()}"
                )
            written.append(self.output_handler.write_forecasts(batches, self._forecast_path(region)))
            logger.info(f"{region}: {len(batches)} {spec.label()} forecasts")
        return written

    def cmd_run(self) -> List[str]:
        """
        Calibrate intervals over the test split for every region, alpha and
        horizon stream, and write the coverage report.

        Raises:
            EmptyTestSplit: If a region has no truth in the test split
        """
        settings = self.settings
        written = []
        rows = []
        filled = self._filled_stamps()

        for region in settings.regions:
            truth = self._load_truth(region)
            exclude = filled.get(region, set())
            batches = self._load_forecasts(region)
            test_end = min(settings.test_end, truth.end)
            if test_end <= settings.calibration_end:
                raise EmptyTestSplit(
                    f"{region}: truth ends before the test split starts"
                )

            for alpha in settings.alphas:
                spci = settings.spci.model_copy(update={"alpha": alpha})
                streams = spci_run_horizons(spci, batches, truth, settings.calibration_end, test_end)
                for horizon, intervals in streams.items():
                    written.append(
                        self.output_handler.write_intervals(
                            intervals, self._interval_path(region, alpha, horizon), truth
                        )
                    )
                    result = breakdown(intervals, truth, exclude=exclude)
                    row = breakdown_row(result, width_stats(intervals, exclude))
                    closer = midpoint_closer_percent(intervals, truth, exclude=exclude)
                    row["midpoint_closer"] = f"{closer:.2f}"
                    rows.append(row)
                    if self.log_manager:
                        self.log_manager.log_coverage(result)

        coverage_path = self.output_handler.write_rows(
            rows, self.output_handler.path("coverage.csv"), COVERAGE_COLUMNS
        )
        written.append(coverage_path)
        written.append(
            self.output_handler.write_run_summary(
                {"settings": settings.model_dump(mode="json"), "coverage": rows},
                self.output_handler.path("run_summary.json"),
            )
        )
        if self.ui_manager:
            self.ui_manager.display_breakdown(rows)
        return written

    def cmd_shift(self, mode: Optional[str] = None) -> List[ShiftReport]:
        """
        Run the load-shifting study under the point policy and the configured
        policy.

        Args:
            mode: ``temporal`` or ``spatial``; defaults to the configured mode

        Returns:
            One report per (region or pair, policy)
        """
        settings = self.settings
        mode = mode or settings.shift.mode
        trace = self._load_power_trace()

        policies = [ShiftPolicy(kind="point")]
        if settings.policy.kind != "point":
            policies.append(settings.policy)

        if settings.shift.lead == "hour_ahead" and self.log_manager:
            self.log_manager.log_warning(
                "Day totals use 1-hour-ahead intervals, which are not all known when the day starts"
            )

        totals, next_day = {}, {}
        regions = self._shift_regions(mode)
        for region in regions:
            truth = self._load_truth(region)
            if settings.shift.lead == "day_ahead":
                streams = self._load_streams(region, settings.shift.alpha, mode)
                totals[region] = day_totals(trace, origin_aligned_intervals(streams, 0), truth)
                if mode == "temporal":
                    next_day[region] = day_totals(trace, origin_aligned_intervals(streams, 1), truth)
            else:
                intervals = self._load_intervals(region, settings.shift.alpha, 1)
                totals[region] = day_totals(trace, intervals, truth)

        reports = []
        for policy in policies:
            policy_reports = []
            if mode == "temporal":
                for region in regions:
                    policy_reports.append(
                        temporal_shift_sim(
                            totals[region],
                            policy,
                            flip=settings.shift.flip_predicate,
                            next_day_totals=next_day.get(region),
                        )
                    )
            else:
                for source, target in settings.shift.pairs:
                    try:
                        policy_reports.append(
                            spatial_shift_sim(
                                totals[source], totals[target], policy, flip=settings.shift.flip_predicate
                            )
                        )
                    except AlignmentError as e:
                        raise AlignmentError(f"{source} -> {target}: {e}") from e

            stem = sanitize_filename(f"{mode}_{policy.label()}")
            self.output_handler.write_rows(
                [summary_row(r) for r in policy_reports],
                self.output_handler.path("shift", f"{stem}_summary.csv"),
                SUMMARY_COLUMNS,
            )
            self.output_handler.write_rows(
                [tons_row(r) for r in policy_reports],
                self.output_handler.path("shift", f"{stem}_emissions.csv"),
                EMISSIONS_COLUMNS,
            )
            for report in policy_reports:
                name = sanitize_filename(f"{stem}_{report.source}_{report.target}_cases.csv")
                self.output_handler.write_shift_cases(
                    report, normalized_cases(report), self.output_handler.path("shift", name)
                )
                if self.log_manager:
                    self.log_manager.log_shift_summary(report)
            reports.extend(policy_reports)

        if self.ui_manager:
            self.ui_manager.display_shift_summary(reports)
        return reports

    def cmd_report(self) -> List[str]:
        """Write long-format tables for accuracy, interval and shifting charts."""
        settings = self.settings
        exclude = self._filled_stamps()
        written = []

        daily_rows, group_rows, horizon_rows, interval_rows = [], [], [], []
        for region in settings.regions:
            truth = self._load_truth(region)
            batches = self._load_forecasts(region)
            region_exclude = exclude.get(region, set())

            daily = daily_mape(batches, truth, region_exclude)
            daily_rows.extend(
                {"region": region, "day": day.isoformat(), "mape_percent": value}
                for day, value in daily
            )

            groupings = {
                "season": [(d, v) for d, v in daily if d.month in SEASONS],
                "month": daily,
                "weekday": daily,
            }
            for grouping, values in groupings.items():
                for label, report in group_daily_mapes(values, by=grouping).items():
                    group_rows.append(
                        {
                            "region": region,
                            "grouping": grouping,
                            "group": label,
                            "mape_percent": report.mape_percent,
                            "stddev": report.stddev,
                            "n": report.n,
                        }
                    )

            horizon_rows.extend(self._horizon_rows(region, batches, truth, region_exclude))

            for alpha in settings.alphas:
                for horizon in settings.spci.horizons:
                    file_path = self._interval_path(region, alpha, horizon)
                    if os.path.exists(file_path):
                        interval_rows.append(self._long_intervals(file_path, region, alpha, horizon))

        written.append(
            self.output_handler.write_rows(
                daily_rows, self.output_handler.path("report", "daily_mape.csv"),
                ["region", "day", "mape_percent"],
            )
        )
        written.append(
            self.output_handler.write_rows(
                group_rows, self.output_handler.path("report", "accuracy_by_group.csv"),
                ["region", "grouping", "group", "mape_percent", "stddev", "n"],
            )
        )
        written.append(
            self.output_handler.write_rows(
                horizon_rows, self.output_handler.path("report", "horizon_mape.csv"),
                ["region", "bucket", "mape_percent", "stddev", "n"],
            )
        )
        if interval_rows:
            frame = pd.concat(interval_rows, ignore_index=True)
            written.append(
                self.output_handler.write_rows(
                    frame.to_dict("records"),
                    self.output_handler.path("report", "intervals_long.csv"),
                    list(frame.columns),
                )
            )

        case_files = sorted(glob.glob(os.path.join(self.output_handler.workspace, "shift", "*_cases.csv")))
        if case_files:
            cases = pd.concat([pd.read_csv(f, dtype=str, keep_default_na=False) for f in case_files], ignore_index=True)
            written.append(
                self.output_handler.write_rows(
                    cases.to_dict("records"),
                    self.output_handler.path("report", "shift_cases.csv"),
                    list(cases.columns),
                )
            )
        return written

    # ------------------------------------------------------------------
    # Loading
    # ------------------------------------------------------------------

    def _input_path(self, key: str, region: str) -> str:
        file_path = self.settings.path_for(key, region)
        if not file_path:
            raise ConfigError(f"paths.{key} is not configured")
        return file_path

    def _load_truth(self, region: str) -> HourlySeries:
        return self.input_handler.parse_truth_table(
            self._require(self._truth_path(region), "ingest"), region
        )

    def _load_forecasts(self, region: str) -> List[ForecastBatch]:
        hint = "ingest" if self.settings.forecast.source == "imported" else "forecast"
        return self.input_handler.parse_forecast_table(
            self._require(self._forecast_path(region), hint), region
        )

    def _load_intervals(self, region: str, alpha: float, horizon: int) -> IntervalSeries:
        return self.input_handler.parse_interval_table(
            self._require(self._interval_path(region, alpha, horizon), "run"), region
        )

    def _load_streams(self, region: str, alpha: float, mode: str) -> Dict[int, IntervalSeries]:
        """Horizon streams needed for day-ahead totals: 1..24, plus 25..48 for the temporal study."""
        last = 2 * HOURS_PER_DAY if mode == "temporal" else HOURS_PER_DAY
        missing = [h for h in range(1, last + 1) if h not in self.settings.spci.horizons]
        if missing:
            raise ConfigError(
                f"day-ahead {mode} shifting needs spci.horizons 1..{last} "
                f"(missing {len(missing)}, first h={missing[0]}); calibrate them or set shift.lead: hour_ahead"
            )
        return {h: self._load_intervals(region, alpha, h) for h in range(1, last + 1)}

    def _load_power_trace(self) -> PowerTrace:
        if os.path.exists(self._power_path()):
            return self.input_handler.parse_power_trace(
                self._power_path(), self.settings.shift.peak_mw, POWER_REGION
            )
        logger.info(f"No power trace in the workspace; using a flat {self.settings.shift.peak_mw:g} MW load")
        return synthetic_power_trace(peak_mw=self.settings.shift.peak_mw, region=POWER_REGION)

    def _shift_regions(self, mode: str) -> List[str]:
        if mode == "temporal":
            return list(self.settings.regions)

        if not self.settings.shift.pairs:
            raise ConfigError("spatial shifting needs shift.pairs")
        regions = []
        for pair in self.settings.shift.pairs:
            for region in pair:
                if region not in self.settings.regions:
                    raise ConfigError(f"shift pair region {region} is not in regions")
                if region not in regions:
                    regions.append(region)
        return regions

    def _filled_stamps(self) -> Dict[str, Set[int]]:
        file_path = self.output_handler.path("provenance.csv")
        if not os.path.exists(file_path):
            return {}
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False)
        filled: Dict[str, Set[int]] = {}
        for record in frame.itertuples(index=False):
            if record.filled == "true":
                filled.setdefault(record.region, set()).add(stamp_from_timestamp(record.timestamp))
        return filled

    def _horizon_rows(
        self,
        region: str,
        batches: List[ForecastBatch],
        truth: HourlySeries,
        exclude: Set[int],
    ) -> List[Dict[str, Any]]:
        if not batches or batches[0].horizon < 48:
            logger.info(f"{region}: forecasts shorter than 48h, horizon buckets skipped")
            return []

        horizon = batches[0].horizon
        usable = [
            b for b in batches if truth.covers(b.origin + 1) and truth.covers(b.origin + horizon)
        ]
        if not usable:
            return []
        return [
            {
                "region": region,
                "bucket": report.group_label,
                "mape_percent": report.mape_percent,
                "stddev": report.stddev,
                "n": report.n,
            }
            for report in horizon_bucket_mape(usable, truth, horizon=horizon, exclude=exclude)
        ]

    def _long_intervals(self, file_path: str, region: str, alpha: float, horizon: int) -> pd.DataFrame:
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False)
        frame = frame.rename(columns={"target_timestamp": "timestamp", "point_forecast": "point"})
        long = frame.melt(
            id_vars=["timestamp"],
            value_vars=["lower", "upper", "point", "truth"],
            var_name="series",
            value_name="value",
        )
        long = long[long["value"] != ""]
        long.insert(0, "horizon", horizon)
        long.insert(0, "alpha", f"{alpha:g}")
        long.insert(0, "region", region)
        return long.sort_values(["timestamp", "series"], kind="stable").reset_index(drop=True)
