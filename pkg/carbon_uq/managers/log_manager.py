"""
Logging manager for the carbon_uq application.
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, Optional

from models.data_models import CoverageBreakdown, ShiftReport


class LogManager:
    """
    Manages logging throughout the application.

    Library modules log through children of the ``carbon_uq`` logger
    (``carbon_uq.ingest``, ``carbon_uq.conformal``, ...), so configuring it
    here covers them all.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the logging manager with configuration.

        Args:
            config: Configuration settings
        """
        self.config = config
        self.logger = None

        self.configure(config)

    def configure(self, config: Dict[str, Any]) -> None:
        """
        Configure logging based on configuration.

        Args:
            config: Configuration settings
        """
        logging_config = config.get("logging", {})

        level_name = logging_config.get("level", "INFO")
        level = getattr(logging, level_name.upper(), logging.INFO)

        log_file = logging_config.get("file", "./logs/carbon_uq.log")
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

        self.logger = logging.getLogger("carbon_uq")
        self.logger.setLevel(level)

        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)
            handler.close()

        file_handler = RotatingFileHandler(
            log_file, maxBytes=10 * 1024 * 1024, backupCount=5  # 10 MB
        )
        file_formatter = logging.Formatter(
            logging_config.get(
                "format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
        )
        file_handler.setFormatter(file_formatter)
        self.logger.addHandler(file_handler)

        if logging_config.get("console", True):
            console_handler = logging.StreamHandler()
            console_formatter = logging.Formatter("%(levelname)s: %(message)s")
            console_handler.setFormatter(console_formatter)
            self.logger.addHandler(console_handler)

    def log_info(self, message: str) -> None:
        if self.logger:
            self.logger.info(message)

    def log_warning(self, message: str) -> None:
        if self.logger:
            self.logger.warning(message)

    def log_error(self, message: str, exc_info: Optional[bool] = False) -> None:
        """
        Log an error message.

        Args:
            message: Message to log
            exc_info: Whether to include exception info
        """
        if self.logger:
            self.logger.error(message, exc_info=exc_info)

    def log_fill(self, region: str, table: str, hours: int) -> None:
        """Record forward-filled hours for one input table."""
        if not self.logger or hours == 0:
            return
        self.logger.warning(f"{region} {table}: {hours} hours forward-filled")

    def log_coverage(self, result: CoverageBreakdown) -> None:
        if not self.logger:
            return

        target = 100.0 * (1.0 - result.alpha) if result.alpha is not None else float("nan")
        self.logger.info(
            f"{result.region} alpha={result.alpha:g} h={result.horizon}: "
            f"coverage {result.coverage_percent:.2f}% (target {target:.0f}%) over {result.n} hours"
        )

    def log_shift_summary(self, report: ShiftReport) -> None:
        if not self.logger:
            return

        self.logger.info(
            f"{report.mode} {report.source} -> {report.target} [{report.policy}]: "
            f"{report.misleading_percent:.2f}% misleading, "
            f"+{report.increased_emissions_percent:.2f}% realized "
            f"(+{report.potential_increase_percent:.2f}% if always shifted)"
        )
