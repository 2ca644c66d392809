"""Scenario pipeline execution for one run."""

import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import structlog

from ..storage.run_archive import RunArchive
from ..utils.config import RunConfig
from ..utils.errors import ConfigurationError, LabError
from ..utils.logger import get_logger
from .base import RunContext, Scenario, ScenarioResult
from .suites import SUITES

logger = get_logger(__name__)

# Dependency order of the suites; full-report runs all of them
PIPELINE = ("construct", "residual-sweep", "evolve", "picard", "spectral")


def expand(names: Sequence[str]) -> List[str]:
    """Requested scenario names in pipeline order, with full-report expanded.

    Raises:
        ConfigurationError: For an unknown name
    """
    wanted = set()
    for name in names:
        if name == "full-report":
            wanted.update(PIPELINE)
        elif name in SUITES:
            wanted.add(name)
        else:
            raise ConfigurationError(f"unknown scenario {name!r}", {"known": sorted(SUITES)})
    return [name for name in PIPELINE if name in wanted]


class ScenarioManager:
    """Run scenarios against one archive, recording every outcome in its manifest."""

    def __init__(self, config: RunConfig, archive: RunArchive):
        """Initialize the manager.

        Args:
            config: Validated run configuration
            archive: Archive receiving artifacts and the manifest
        """
        self.config = config
        self.archive = archive
        self.context = RunContext(config, archive)
        self._scenarios: Dict[str, Scenario] = dict(SUITES)
        logger.info("scenario_manager_initialized", run_id=archive.run_id)

    def register(self, scenario: Scenario) -> None:
        """Add or replace a scenario."""
        self._scenarios[scenario.name] = scenario

    def run_one(self, name: str) -> ScenarioResult:
        """Run a single scenario; module errors are recorded, not raised."""
        scenario = self._scenarios[name]
        structlog.contextvars.bind_contextvars(scenario=name)
        started = time.perf_counter()
        logger.info("scenario_started", description=scenario.description)
        try:
            result = scenario.run(self.context)
        except LabError as e:
            self.archive.record_error(name, e)
            result = ScenarioResult(name, error=e.to_dict())
        except Exception as e:
            logger.error("scenario_crashed", error=str(e), error_type=type(e).__name__)
            self.archive.record_error(name, e)
            result = ScenarioResult(
                name, error={"type": type(e).__name__, "message": str(e), "details": {}}
            )
        else:
            self.archive.record(name, result.values, result.checks)
        elapsed = time.perf_counter() - started
        self.archive.record(name, {"elapsed": elapsed})
        logger.info(
            "scenario_finished",
            passed=result.passed,
            failed=[k for k, v in result.checks.items() if not v],
            elapsed=elapsed,
        )
        structlog.contextvars.unbind_contextvars("scenario")
        return result

    def run(self, names: Optional[Sequence[str]] = None) -> Dict[str, ScenarioResult]:
        """Run the requested scenarios (default: the configured one) in pipeline order."""
        order = expand(names or [self.config.scenario])
        results = {}
        for name in order:
            results[name] = self.run_one(name)
            if name == "construct" and results[name].error is not None:
                logger.warning("pipeline_stopped", reason="construction failed")
                break
        return results


def run(
    config: RunConfig,
    names: Optional[Sequence[str]] = None,
    out: Optional[Path] = None,
    run_id: Optional[str] = None,
) -> Dict:
    """Execute a scenario pipeline and return the finished manifest.

    Args:
        config: Validated run configuration
        names: Scenarios to run; defaults to ``config.scenario``
        out: Output root; defaults to ``config.output_dir``
        run_id: Run directory name

    Returns:
        Manifest with per-scenario files, values, verdicts and errors
    """
    archive = RunArchive(out or config.output_dir, run_id, config.model_dump(mode="json"))
    structlog.contextvars.bind_contextvars(run_id=archive.run_id)
    try:
        ScenarioManager(config, archive).run(names)
        return archive.finish()
    finally:
        structlog.contextvars.unbind_contextvars("run_id")
