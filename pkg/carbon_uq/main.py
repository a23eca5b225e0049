#!/usr/bin/env python
"""
carbon_uq

Uncertainty-aware carbon-intensity forecasting: conformal prediction
intervals around point forecasts, coverage evaluation, and load-shifting
case studies that compare point-based and interval-based decisions.
"""

import argparse
import sys
from typing import List, Optional

from config.app_config import AppConfig
from managers.log_manager import LogManager
from models.data_models import ShiftPolicy
from models.pipeline import Pipeline
from ui.console_ui import ConsoleUI
from utils.errors import CarbonUQError

COMMANDS = ("ingest", "forecast", "run", "shift", "report")


def _alpha(value: str) -> float:
    alpha = float(value)
    if not 0.0 < alpha < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must be in (0, 1), got {value}")
    return alpha


def _policy(value: str) -> str:
    try:
        ShiftPolicy.parse(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    return value


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Carbon-intensity uncertainty toolkit")

    parser.add_argument("command", choices=COMMANDS, help="Pipeline stage to run")

    parser.add_argument(
        "--config", type=str, default="config.yaml", help="Path to configuration file"
    )

    parser.add_argument("--region", type=str, help="Only process this region")

    parser.add_argument(
        "--alpha",
        type=_alpha,
        action="append",
        help="Significance level (repeatable)",
    )

    parser.add_argument(
        "--policy", type=_policy, help="point, dominance or overlap:THETA"
    )

    parser.add_argument("--seed", type=int, help="Base seed for the quantile forests")

    parser.add_argument("--workspace", type=str, help="Workspace directory")

    parser.add_argument(
        "--mode", choices=("temporal", "spatial"), help="Load-shifting mode"
    )

    parser.add_argument(
        "--headless", action="store_true", help="Run without console tables"
    )

    return parser.parse_args(argv)


def run_command(args: argparse.Namespace) -> int:
    """
    Run one subcommand.

    Args:
        args: Command line arguments

    Returns:
        Exit code (0 only if every requested report was written)
    """
    # Configuration is fully validated before any data is read.
    try:
        config = AppConfig(args.config)
        config.apply_overrides(
            region=args.region,
            alphas=args.alpha,
            policy=args.policy,
            seed=args.seed,
            workspace=args.workspace,
            mode=args.mode,
        )
        if args.headless:
            config.config["ui"]["enabled"] = False
        settings = config.to_pipeline_config()
    except CarbonUQError as e:
        print(f"Error loading configuration: {e}", file=sys.stderr)
        return 1

    log_manager = LogManager(config.config)
    log_manager.log_info(f"Starting '{args.command}'")

    ui_manager = ConsoleUI(config.config)
    pipeline = Pipeline(settings, config.config, log_manager=log_manager, ui_manager=ui_manager)
    ui_manager.display_welcome(args.command, settings)

    try:
        if args.command == "ingest":
            written = pipeline.cmd_ingest()
        elif args.command == "forecast":
            written = pipeline.cmd_forecast()
        elif args.command == "run":
            written = pipeline.cmd_run()
        elif args.command == "shift":
            reports = pipeline.cmd_shift(args.mode)
            written = [f"{r.source}->{r.target} [{r.policy}]" for r in reports]
        else:
            written = pipeline.cmd_report()
    except (CarbonUQError, FileNotFoundError) as e:
        log_manager.log_error(f"{args.command} failed: {type(e).__name__}: {e}")
        return 1
    except Exception as e:
        log_manager.log_error(f"{args.command} failed: {e}", exc_info=True)
        return 1

    log_manager.log_info(f"'{args.command}' completed")
    ui_manager.display_completion(args.command, written)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = parse_arguments(argv)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
