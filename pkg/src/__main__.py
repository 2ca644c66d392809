"""Main entry point for the NLS blow-up lab."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .scenarios import report, run
from .utils.commands import CommandLoader
from .utils.config import Config, RunConfig
from .utils.errors import ConfigurationError
from .utils.logger import configure_logging, get_logger

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CHECKS_FAILED = 2


def build_parser(commands: List[Dict[str, str]]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src",
        description="Numerical lab for approximate blow-up solutions of the energy-critical NLS.",
        epilog=CommandLoader.format_help_message(commands),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=[cmd["command"] for cmd in commands])
    parser.add_argument(
        "paths", nargs="*", type=Path, help="run directories or manifests to merge (report only)"
    )
    parser.add_argument("--config", type=Path, help="run configuration file (JSON)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--t-min", type=float, dest="t_min")
    parser.add_argument("--t-max", type=float, dest="t_max")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--threads", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the run configuration and apply command-line overrides.

    Raises:
        ConfigurationError: If the file or the overrides are invalid
    """
    path = args.config or Config.LAB_CONFIG
    config = RunConfig.load(path) if path is not None else RunConfig()
    sweep: Dict[str, Any] = {
        key: value
        for key in ("t_min", "t_max", "samples", "threads")
        if (value := getattr(args, key)) is not None
    }
    if "threads" not in sweep and Config.LAB_THREADS > 1:
        sweep["threads"] = Config.LAB_THREADS
    raw = config.model_dump()
    raw["sweep"].update(sweep)
    if args.out is not None:
        raw["output_dir"] = args.out
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(
            "invalid command-line overrides", {"errors": [err["msg"] for err in e.errors()]}
        )


def execute(argv: Optional[List[str]] = None) -> int:
    """Run one command and return the process exit code."""
    logger = get_logger(__name__)
    commands = CommandLoader.load_commands()
    try:
        args = build_parser(commands).parse_args(argv)
    except SystemExit as e:
        if e.code not in (0, None):
            raise ConfigurationError("invalid command line", {"argv": argv or sys.argv[1:]})
        raise
    config = resolve_config(args)

    if args.command == "report" and args.paths:
        target = report(args.paths, config.output_dir)
        return EXIT_OK if _report_passed(target) else EXIT_CHECKS_FAILED

    scenario = CommandLoader.scenario_for(commands, args.command)
    manifest = run(config, [scenario])
    run_dir = Path(config.output_dir) / manifest["run_id"]
    if args.command == "report":
        report([run_dir], run_dir)

    failed = [
        f"{name}.{check}"
        for name, section in manifest["scenarios"].items()
        for check, passed in section.get("checks", {}).items()
        if not passed
    ]
    errors = [name for name, section in manifest["scenarios"].items() if "error" in section]
    logger.info("run_finished", run_dir=str(run_dir), failed=failed, errors=errors)
    return EXIT_CHECKS_FAILED if failed or errors else EXIT_OK


def _report_passed(target: Path) -> bool:
    with open(target, "r") as f:
        return bool(json.load(f)["passed"])


def main() -> None:
    """Run the lab from the command line."""
    # Configure logging
    configure_logging(Config.LOG_LEVEL, Config.LOG_FORMAT)
    logger = get_logger(__name__)

    # Validate configuration
    try:
        Config.validate()
    except ValueError as e:
        logger.error("configuration_error", error=str(e))
        sys.exit(EXIT_FAILURE)

    try:
        code = execute()
    except ConfigurationError as e:
        logger.error("configuration_error", error=str(e), details=e.details)
        sys.exit(EXIT_FAILURE)
    except KeyboardInterrupt:
        logger.info("received_shutdown_signal")
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        logger.error("lab_crashed", error=str(e), exc_info=True)
        sys.exit(EXIT_FAILURE)
    sys.exit(code)


if __name__ == "__main__":
    main()
