"""
Application configuration management.
"""

import copy
import os
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from models.data_models import (
    ForecasterSpec,
    ForecastSettings,
    PathSettings,
    PipelineConfig,
    ShiftPolicy,
    ShiftSettings,
    SpciConfig,
)
from models.timeseries import stamp_from_timestamp
from utils.errors import ConfigError

WORKSPACE_ENV = "CARBON_UQ_WORKSPACE"

DEFAULT_EMISSION_FACTORS = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "emission_factors.csv"
)


class AppConfig:
    """
    Centralized configuration management for the carbon_uq application.
    Handles loading from a YAML file and the workspace environment variable.
    """

    def __init__(self, config_path: Optional[str] = None):
        """Initialize the configuration with optional path to config file."""
        self.config: Dict[str, Any] = {
            "paths": {
                "mix": None,
                "truth": None,
                "forecasts": None,
                "power": None,
                "emission_factors": DEFAULT_EMISSION_FACTORS,
            },
            "regions": [],
            "splits": {
                "train_end": "2022-01-01T00:00:00Z",
                "calibration_end": "2022-07-01T00:00:00Z",
                "test_end": "2023-01-01T00:00:00Z",
            },
            "ingest": {"max_fill_hours": 3, "truth_from": "truth_table"},
            "forecast": {
                "source": "baseline",
                "baseline": "seasonal_naive_24h",
                "horizon": 48,
            },
            "spci": {
                "window_capacity": 5000,
                "lag_window": 24,
                "n_trees": 25,
                "beta_grid_size": 11,
                "refit_stride": 24,
                "seed": 0,
                "max_depth": None,
                "min_leaf_size": 5,
                "n_jobs": 1,
                "horizons": list(range(1, 49)),
            },
            "evaluation": {"alphas": [0.1, 0.05, 0.01]},
            "shift": {
                "mode": "temporal",
                "policy": "dominance",
                "alpha": 0.1,
                "peak_mw": 20.0,
                "pairs": [],
                "flip_predicate": False,
                "lead": "day_ahead",
            },
            "ui": {"enabled": True},
            "output": {"workspace": "./workspace"},
            "logging": {
                "level": "INFO",
                "file": "./logs/carbon_uq.log",
                "console": True,
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
        }

        if config_path:
            self.load_from_file(config_path)

        self.load_from_env()

    def load_from_file(self, file_path: str) -> None:
        """
        Load configuration from a YAML file.

        Raises:
            ConfigError: If the file cannot be read or is not a YAML mapping
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                file_config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Error loading config from {file_path}: {e}") from e

        if not isinstance(file_config, dict):
            raise ConfigError(f"{file_path} must contain a mapping of sections")
        self._merge_configs(self.config, file_config)

    def load_from_env(self) -> None:
        """Override the workspace root from the environment."""
        workspace = os.environ.get(WORKSPACE_ENV)
        if workspace:
            self.config["output"]["workspace"] = workspace

    def get_setting(self, *keys: str, default: Any = None) -> Any:
        """
        Get a setting from the configuration.

        Args:
            *keys: The path to the setting (e.g., "spci", "n_trees").
            default: Default value if setting not found.

        Returns:
            The setting value or default if not found.
        """
        current = self.config
        for key in keys:
            if not isinstance(current, dict) or key not in current:
                return default
            current = current[key]
        return current

    def set_setting(self, value: Any, *keys: str) -> None:
        current = self.config
        for key in keys[:-1]:
            current = current.setdefault(key, {})
        current[keys[-1]] = value

    def apply_overrides(
        self,
        region: Optional[str] = None,
        alphas: Optional[list] = None,
        policy: Optional[str] = None,
        seed: Optional[int] = None,
        workspace: Optional[str] = None,
        mode: Optional[str] = None,
    ) -> None:
        """Command-line flags take precedence over the file and the environment."""
        if region:
            self.set_setting([region], "regions")
        if alphas:
            self.set_setting(list(alphas), "evaluation", "alphas")
            if self.get_setting("shift", "alpha") not in alphas:
                self.set_setting(alphas[0], "shift", "alpha")
        if policy:
            self.set_setting(policy, "shift", "policy")
        if seed is not None:
            self.set_setting(seed, "spci", "seed")
        if workspace:
            self.set_setting(workspace, "output", "workspace")
        if mode:
            self.set_setting(mode, "shift", "mode")

    def to_pipeline_config(self) -> PipelineConfig:
        """
        Validate the merged settings into a typed run description.

        Raises:
            ConfigError: Naming the first invalid setting
        """
        settings = copy.deepcopy(self.config)
        key = "splits"
        try:
            splits = {
                name: stamp_from_timestamp(settings["splits"][name])
                for name in ("train_end", "calibration_end", "test_end")
            }

            key = "spci"
            spci_settings = dict(settings["spci"])
            spci_settings["horizons"] = tuple(spci_settings.get("horizons") or (1,))
            spci = SpciConfig(alpha=settings["evaluation"]["alphas"][0], **spci_settings)

            key = "forecast"
            forecast = ForecastSettings(
                source=settings["forecast"]["source"],
                baseline=ForecasterSpec.parse(settings["forecast"]["baseline"]),
                horizon=settings["forecast"]["horizon"],
            )

            key = "shift"
            shift_settings = settings["shift"]
            policy = ShiftPolicy.parse(shift_settings["policy"])
            shift = ShiftSettings(
                alpha=shift_settings["alpha"],
                peak_mw=shift_settings["peak_mw"],
                pairs=tuple(tuple(pair) for pair in shift_settings.get("pairs") or ()),
                flip_predicate=shift_settings["flip_predicate"],
                mode=shift_settings["mode"],
                lead=shift_settings["lead"],
            )

            key = "pipeline"
            return PipelineConfig(
                regions=tuple(settings["regions"] or ()),
                paths=PathSettings(**settings["paths"]),
                spci=spci,
                alphas=tuple(float(a) for a in settings["evaluation"]["alphas"]),
                policy=policy,
                forecast=forecast,
                shift=shift,
                workspace=settings["output"]["workspace"],
                max_fill_hours=settings["ingest"]["max_fill_hours"],
                truth_from=settings["ingest"]["truth_from"],
                **splits,
            )
        except (ValidationError, ValueError, KeyError, TypeError, IndexError) as e:
            raise ConfigError(f"invalid '{key}' configuration: {e}") from e

    def _merge_configs(self, base: Dict[str, Any], override: Dict[str, Any]) -> None:
        """Recursively merge override config into base config."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._merge_configs(base[key], value)
            else:
                base[key] = value
