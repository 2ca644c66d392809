"""Experiment suites, their per-run pipeline and the consolidated report."""

from .base import RunContext, Scenario, ScenarioResult
from .manager import PIPELINE, ScenarioManager, expand, run
from .report import report
from .suites import SUITES

__all__ = [
    "PIPELINE",
    "SUITES",
    "RunContext",
    "Scenario",
    "ScenarioManager",
    "ScenarioResult",
    "expand",
    "report",
    "run",
]
