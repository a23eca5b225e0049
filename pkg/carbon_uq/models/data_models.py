"""
Pydantic data models for the carbon_uq application.

All models are frozen: once constructed they can be shared between threads
without copying.
"""

import math
from datetime import date
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FiniteFloat,
    StringConstraints,
    field_validator,
    model_validator,
)

from utils.errors import MissingFactor


# Whole hours since 1970-01-01T00:00Z. successor(h) == h + 1.
HourlyStamp = int

RegionId = Annotated[str, StringConstraints(pattern=r"^[A-Z0-9]+$", min_length=1)]


class Unit(str, Enum):
    """Physical unit of an hourly series."""

    GCO2EQ_PER_KWH = "gCO2eq_per_kWh"
    MWH = "MWh"
    MW = "MW"
    DIMENSIONLESS = "dimensionless"


NON_NEGATIVE_UNITS = (Unit.GCO2EQ_PER_KWH, Unit.MWH, Unit.MW)


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


# ---------------------------------------------------------------------------
# Core time series
# ---------------------------------------------------------------------------


class HourlySeries(FrozenModel):
    """
    Contiguous hourly series of one quantity for one region.

    Index i corresponds to stamp ``start + i``; the covered range is the
    half-open interval ``[start, end)``.
    """

    region: RegionId
    start: HourlyStamp
    values: Tuple[FiniteFloat, ...]
    unit: Unit = Unit.GCO2EQ_PER_KWH

    @model_validator(mode="after")
    def _check_values(self) -> "HourlySeries":
        if not self.values:
            raise ValueError("HourlySeries requires at least one value")
        if self.unit in NON_NEGATIVE_UNITS and min(self.values) < 0:
            raise ValueError(f"{self.unit.value} values must be >= 0")
        return self

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> HourlyStamp:
        """Exclusive end stamp."""
        return self.start + len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def stamps(self) -> np.ndarray:
        return np.arange(self.start, self.end, dtype=np.int64)

    def covers(self, stamp: HourlyStamp) -> bool:
        return self.start <= stamp < self.end

    def value_at(self, stamp: HourlyStamp) -> float:
        return self.values[stamp - self.start]


class ForecastBatch(FrozenModel):
    """Point forecasts for origin+1 .. origin+horizon issued at ``origin``."""

    region: RegionId
    origin: HourlyStamp
    horizon: int = Field(ge=1)
    predictions: Tuple[FiniteFloat, ...]

    @model_validator(mode="after")
    def _check_length(self) -> "ForecastBatch":
        if len(self.predictions) != self.horizon:
            raise ValueError(
                f"expected {self.horizon} predictions, got {len(self.predictions)}"
            )
        return self

    def target(self, h: int) -> HourlyStamp:
        return self.origin + h

    def prediction_for(self, h: int) -> float:
        return self.predictions[h - 1]


class Interval(FrozenModel):
    lower: FiniteFloat
    upper: FiniteFloat
    alpha: float = Field(gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_order(self) -> "Interval":
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2.0

    def contains(self, value: float) -> bool:
        """Closed-interval membership."""
        return self.lower <= value <= self.upper

    def overlap_length(self, other: "Interval") -> float:
        return max(0.0, min(self.upper, other.upper) - max(self.lower, other.lower))

    def overlaps(self, other: "Interval") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


class IntervalSeries(FrozenModel):
    """
    Hourly confidence intervals for one region at one significance level.

    ``points`` optionally keeps the point forecast each interval was built
    around; ``horizon`` names the horizon-offset stream that produced it.
    """

    region: RegionId
    start: HourlyStamp
    intervals: Tuple[Interval, ...]
    alpha: float = Field(gt=0.0, lt=1.0)
    points: Optional[Tuple[FiniteFloat, ...]] = None
    horizon: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_intervals(self) -> "IntervalSeries":
        if not self.intervals:
            raise ValueError("IntervalSeries requires at least one interval")
        for i, interval in enumerate(self.intervals):
            if interval.alpha != self.alpha:
                raise ValueError(
                    f"interval {i} has alpha {interval.alpha}, series has {self.alpha}"
                )
        if self.points is not None and len(self.points) != len(self.intervals):
            raise ValueError("points must match intervals in length")
        return self

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def end(self) -> HourlyStamp:
        return self.start + len(self.intervals)

    @property
    def lowers(self) -> np.ndarray:
        return np.array([i.lower for i in self.intervals], dtype=float)

    @property
    def uppers(self) -> np.ndarray:
        return np.array([i.upper for i in self.intervals], dtype=float)


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


NonNegativeFloat = Annotated[FiniteFloat, Field(ge=0.0)]


class SourceMixRow(FrozenModel):
    """Hourly generation per source (MWh)."""

    stamp: HourlyStamp
    generation: Dict[str, NonNegativeFloat]
    filled: bool = False

    @field_validator("generation")
    @classmethod
    def _non_empty(cls, value: Dict[str, float]) -> Dict[str, float]:
        if not value:
            raise ValueError("at least one generation source is required")
        return value

    @property
    def total(self) -> float:
        return math.fsum(self.generation.values())


class EmissionFactorTable(FrozenModel):
    """Emission factor per source in gCO2eq/kWh."""

    factors: Dict[str, NonNegativeFloat]

    def factor(self, source: str) -> float:
        if source not in self.factors:
            raise MissingFactor(source)
        return self.factors[source]


UnitInterval = Annotated[FiniteFloat, Field(ge=0.0, le=1.0)]


class PowerTrace(FrozenModel):
    """Normalized power trace scaled by ``peak_mw``."""

    region: RegionId
    start: HourlyStamp
    normalized: Tuple[UnitInterval, ...]
    peak_mw: float = Field(gt=0.0)

    def __len__(self) -> int:
        return len(self.normalized)

    @property
    def end(self) -> HourlyStamp:
        return self.start + len(self.normalized)

    @property
    def power_mw(self) -> np.ndarray:
        return np.asarray(self.normalized, dtype=float) * self.peak_mw

    def as_series(self) -> HourlySeries:
        return HourlySeries(
            region=self.region,
            start=self.start,
            values=tuple(float(v) for v in self.power_mw),
            unit=Unit.MW,
        )


# ---------------------------------------------------------------------------
# Forecast accuracy
# ---------------------------------------------------------------------------


class ForecasterSpec(FrozenModel):
    """Built-in baseline point forecaster."""

    kind: Literal["seasonal_naive_24h", "same_hour_last_week", "moving_average"]
    k: Optional[int] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "ForecasterSpec":
        if self.kind == "moving_average":
            if self.k is None or self.k < 1:
                raise ValueError("moving_average requires k >= 1")
        elif self.k is not None:
            raise ValueError(f"{self.kind} takes no k parameter")
        return self

    @property
    def lookback(self) -> int:
        """Hours of history the forecaster needs, ending at the origin."""
        if self.kind == "seasonal_naive_24h":
            return 24
        if self.kind == "same_hour_last_week":
            return 168
        return int(self.k)

    @classmethod
    def parse(cls, text: str) -> "ForecasterSpec":
        """Parse ``seasonal_naive_24h``, ``same_hour_last_week`` or ``moving_average:K``."""
        kind, _, parameter = text.partition(":")
        if parameter:
            return cls(kind=kind, k=int(parameter))
        return cls(kind=kind)

    def label(self) -> str:
        return f"{self.kind}:{self.k}" if self.k is not None else self.kind


class AccuracyReport(FrozenModel):
    group_label: str
    mape_percent: float = Field(ge=0.0)
    variance: float = Field(ge=0.0)
    n: int = Field(ge=1)

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)


# ---------------------------------------------------------------------------
# Conformal
# ---------------------------------------------------------------------------


class SpciConfig(FrozenModel):
    """
    Hyperparameters of the sequential conformal loop.

    ``max_depth`` of ``None`` grows trees until ``min_leaf_size`` stops them;
    ``0`` gives single-leaf trees, and the sequential loop then pools the
    whole residual window instead of the lagged training targets.
    """

    alpha: float = Field(default=0.1, gt=0.0, lt=1.0)
    window_capacity: int = Field(default=5000, ge=2)
    lag_window: int = Field(default=24, ge=1)
    n_trees: int = Field(default=25, ge=1)
    beta_grid_size: int = Field(default=11, ge=1)
    refit_stride: int = Field(default=24, ge=1)
    seed: int = 0
    max_depth: Optional[int] = Field(default=None, ge=0)
    min_leaf_size: int = Field(default=5, ge=1)
    n_jobs: int = 1
    horizons: Tuple[int, ...] = (1,)

    @model_validator(mode="after")
    def _check_window(self) -> "SpciConfig":
        if self.lag_window >= self.window_capacity:
            raise ValueError(
                f"lag_window ({self.lag_window}) must be smaller than "
                f"window_capacity ({self.window_capacity})"
            )
        if not self.horizons or min(self.horizons) < 1:
            raise ValueError("horizons must be a non-empty list of offsets >= 1")
        return self


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class CoverageBreakdown(FrozenModel):
    """Four-way split of hours by truth coverage (T) and point coverage (P)."""

    coverage_percent: float
    t_cov_p_cov: float
    t_cov_p_uncov: float
    t_uncov_p_cov: float
    t_uncov_p_uncov: float
    n: int = Field(ge=1)
    region: Optional[str] = None
    alpha: Optional[float] = None
    horizon: Optional[int] = None

    @model_validator(mode="after")
    def _check_cells(self) -> "CoverageBreakdown":
        cells = (
            self.t_cov_p_cov + self.t_cov_p_uncov + self.t_uncov_p_cov + self.t_uncov_p_uncov
        )
        if abs(cells - 100.0) > 0.01:
            raise ValueError(f"breakdown cells sum to {cells}, expected 100")
        if abs(self.coverage_percent - (self.t_cov_p_cov + self.t_cov_p_uncov)) > 0.01:
            raise ValueError("coverage must equal the T-covered cells")
        return self


# ---------------------------------------------------------------------------
# Load shifting
# ---------------------------------------------------------------------------


class EmissionsTotal(FrozenModel):
    grams: float = Field(ge=0.0)
    start: HourlyStamp
    length: int = Field(ge=1)
    region: RegionId

    @property
    def tons(self) -> float:
        return self.grams / 1e6


class ShiftPolicy(FrozenModel):
    kind: Literal["point", "interval_dominance", "overlap_threshold"]
    theta: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_theta(self) -> "ShiftPolicy":
        if self.kind == "overlap_threshold" and self.theta is None:
            raise ValueError("overlap_threshold requires theta")
        if self.kind != "overlap_threshold" and self.theta is not None:
            raise ValueError(f"theta is only defined for overlap_threshold, not {self.kind}")
        return self

    @classmethod
    def parse(cls, text: str) -> "ShiftPolicy":
        """Parse the command-line form ``point``, ``dominance`` or ``overlap:THETA``."""
        name, _, parameter = text.strip().partition(":")
        if name == "point":
            return cls(kind="point")
        if name in ("dominance", "interval_dominance"):
            return cls(kind="interval_dominance")
        if name in ("overlap", "overlap_threshold"):
            return cls(kind="overlap_threshold", theta=float(parameter) if parameter else 0.25)
        raise ValueError(f"unknown policy '{text}'")

    def label(self) -> str:
        if self.kind == "overlap_threshold":
            return f"overlap:{self.theta:g}"
        if self.kind == "interval_dominance":
            return "dominance"
        return "point"


class ShiftDecision(FrozenModel):
    action: Literal["shift", "stay"]
    reason: str = Field(min_length=1)
    source_pred: float
    target_pred: float
    source_ci: Interval
    target_ci: Interval


class DayTotal(FrozenModel):
    """
    Emissions of one workload-day in one region.

    ``ci`` bounds the total emissions by summing the power-weighted hourly
    lower and upper interval bounds.
    """

    region: RegionId
    day: date
    pred: float
    truth: float
    ci: Interval


class ShiftCase(FrozenModel):
    source: str
    target: str
    day: date
    source_truth: float
    target_truth: float
    decision: ShiftDecision
    misleading: bool
    increase_percent: float = 0.0
    realized: bool = False


class ShiftReport(FrozenModel):
    """
    Outcome of one shifting experiment.

    ``increased_emissions_percent`` is the mean over misleading cases of the
    increase the policy actually realized; ``potential_increase_percent`` is
    the same mean had every misleading case been shifted.
    """

    mode: Literal["temporal", "spatial"]
    source: str
    target: str
    policy: str
    misleading_percent: float = Field(ge=0.0)
    increased_emissions_percent: float = Field(ge=0.0)
    potential_increase_percent: float = Field(ge=0.0)
    cases: List[ShiftCase] = Field(default_factory=list)
    totals: Dict[str, float] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


class PathSettings(FrozenModel):
    """
    Input file locations. ``{region}`` in a template is replaced by the
    region code.
    """

    mix: Optional[str] = None
    truth: Optional[str] = None
    forecasts: Optional[str] = None
    power: Optional[str] = None
    emission_factors: str


class ForecastSettings(FrozenModel):
    source: Literal["imported", "baseline"] = "baseline"
    baseline: ForecasterSpec = ForecasterSpec(kind="seasonal_naive_24h")
    horizon: int = Field(default=48, ge=1)


class ShiftSettings(FrozenModel):
    """
    ``lead`` picks the intervals day totals are built from: ``day_ahead``
    reads each hour from the stream issued at the day's origin (horizons
    1..24 for the same day, 25..48 for the next); ``hour_ahead`` reads
    every hour from the 1-hour-ahead stream.
    """

    alpha: float = Field(default=0.1, gt=0.0, lt=1.0)
    peak_mw: float = Field(default=20.0, gt=0.0)
    pairs: Tuple[Tuple[RegionId, RegionId], ...] = ()
    flip_predicate: bool = False
    mode: Literal["temporal", "spatial"] = "temporal"
    lead: Literal["day_ahead", "hour_ahead"] = "day_ahead"


class PipelineConfig(FrozenModel):
    """Fully validated run description."""

    regions: Tuple[RegionId, ...]
    paths: PathSettings
    train_end: HourlyStamp
    calibration_end: HourlyStamp
    test_end: HourlyStamp
    spci: SpciConfig
    alphas: Tuple[float, ...]
    policy: ShiftPolicy
    forecast: ForecastSettings = ForecastSettings()
    shift: ShiftSettings = ShiftSettings()
    workspace: str
    max_fill_hours: int = Field(default=3, ge=0)
    truth_from: Literal["truth_table", "source_mix"] = "truth_table"

    @model_validator(mode="after")
    def _check_pipeline(self) -> "PipelineConfig":
        if not self.regions:
            raise ValueError("at least one region is required")
        if not self.train_end < self.calibration_end < self.test_end:
            raise ValueError("splits must satisfy train_end < calibration_end < test_end")
        if not self.alphas:
            raise ValueError("at least one alpha is required")
        for alpha in self.alphas:
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"alpha {alpha} is outside (0, 1)")
        if self.shift.alpha not in self.alphas:
            raise ValueError(f"shift alpha {self.shift.alpha} is not among the run alphas {list(self.alphas)}")
        if self.forecast.source == "baseline" and max(self.spci.horizons) > self.forecast.horizon:
            raise ValueError(
                f"spci horizon {max(self.spci.horizons)} exceeds the forecast horizon {self.forecast.horizon}"
            )
        return self

    def path_for(self, key: str, region: str) -> Optional[str]:
        template = getattr(self.paths, key)
        return template.format(region=region) if template else None
