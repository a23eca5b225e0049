"""
Console UI for the carbon_uq application.
"""

import sys
import time
from typing import Any, Dict, List, Optional, Sequence

from models.data_models import PipelineConfig, ShiftReport
from utils.helpers import format_time_delta


class ConsoleUI:
    """
    Prints run banners and result tables to the console.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the console UI with configuration.

        Args:
            config: Configuration settings
        """
        self.config = config
        self.ui_config = config.get("ui", {})
        self.enabled = self.ui_config.get("enabled", True)
        self.start_time: Optional[float] = None

    def display_welcome(self, command: str, settings: PipelineConfig) -> None:
        if not self.enabled:
            return

        self.start_time = time.time()

        print("=" * 70)
        print(f"CARBON UQ: {command}")
        print("=" * 70)
        print(f"Regions: {', '.join(settings.regions)}")
        print(f"Alphas: {', '.join(f'{a:g}' for a in settings.alphas)}")
        print(f"Workspace: {settings.workspace}")
        print("=" * 70)
        print()

        sys.stdout.flush()

    def display_breakdown(self, rows: Sequence[Dict[str, str]]) -> None:
        """
        Display one coverage row per (region, alpha, horizon).

        Args:
            rows: Formatted breakdown rows
        """
        if not self.enabled:
            return

        print("\n" + "=" * 70)
        print("COVERAGE")
        print("-" * 70)
        print(
            f"{'Region':<8} {'Alpha':<6} {'H':<4} {'Coverage':<9} {'T+P+':<7} {'T+P-':<7} "
            f"{'T-P+':<7} {'T-P-':<7} {'Width':<8}"
        )
        print("-" * 70)
        for row in rows:
            print(
                f"{row['region']:<8} {row['alpha']:<6} {row['horizon']:<4} {row['coverage']:<9} "
                f"{row['t_cov_p_cov']:<7} {row['t_cov_p_uncov']:<7} {row['t_uncov_p_cov']:<7} "
                f"{row['t_uncov_p_uncov']:<7} {row.get('mean_width', ''):<8}"
            )
        print("=" * 70)
        sys.stdout.flush()

    def display_shift_summary(self, reports: List[ShiftReport]) -> None:
        if not self.enabled:
            return

        print("\n" + "=" * 70)
        print("LOAD SHIFTING")
        print("-" * 70)
        print(f"{'Source':<14} {'Target':<14} {'Policy':<14} {'Misleading':<11} {'Increase':<9}")
        print("-" * 70)
        for report in reports:
            print(
                f"{report.source:<14} {report.target:<14} {report.policy:<14} "
                f"{report.misleading_percent:<11.2f} {report.increased_emissions_percent:<9.2f}"
            )
        print("=" * 70)
        sys.stdout.flush()

    def display_completion(self, command: str, written: Sequence[str]) -> None:
        if not self.enabled:
            return

        elapsed = format_time_delta(time.time() - self.start_time) if self.start_time else "0s"
        print(f"\n{command} finished in {elapsed}; {len(written)} files written")
        sys.stdout.flush()
