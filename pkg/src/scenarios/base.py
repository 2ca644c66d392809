"""Scenario interface and the shared per-run context."""

import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np
from tqdm import tqdm

from ..profiles.gluing import GlobalApprox, build_global_approx
from ..profiles.inner import InnerSeries, build_inner_series
from ..profiles.self_similar import SelfSimilarSolution, solve_A_system
from ..storage.run_archive import RunArchive
from ..utils.config import RunConfig
from ..utils.errors import DomainError
from ..utils.logger import get_logger, progress_enabled

logger = get_logger(__name__)

T = TypeVar("T")


@dataclass
class ScenarioResult:
    """Outcome of one scenario.

    Attributes:
        name: Scenario name
        values: Fitted values and diagnostics merged into the manifest
        checks: Acceptance verdicts
        error: Serialized error when the scenario stopped early
    """

    name: str
    values: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.checks.values())


class RunContext:
    """Configuration, archive and lazily built profiles shared by the scenarios of a run.

    The inner series, the self-similar solution and the glued approximation are built once
    per run; the lock keeps concurrent samples from building them twice.
    """

    def __init__(self, config: RunConfig, archive: RunArchive):
        self.config = config
        self.archive = archive
        self.rng = np.random.default_rng(config.seed)
        self._lock = threading.RLock()
        self._inner: Optional[InnerSeries] = None
        self._solution: Optional[SelfSimilarSolution] = None
        self._approx: Optional[GlobalApprox] = None

    @property
    def inner(self) -> InnerSeries:
        with self._lock:
            if self._inner is None:
                self._inner = build_inner_series(self.config.params, self.config.inner)
            return self._inner

    @property
    def solution(self) -> SelfSimilarSolution:
        with self._lock:
            if self._solution is None:
                self._solution = solve_A_system(
                    self.config.params, self.inner, self.config.self_similar
                )
            return self._solution

    @property
    def approx(self) -> GlobalApprox:
        with self._lock:
            if self._approx is None:
                self._approx = build_global_approx(
                    self.inner, self.solution, self.config.remote, self.config.params.delta
                )
            return self._approx

    def sample_times(self) -> np.ndarray:
        """Geometric sweep times clipped to the validity window of the glued approximation.

        Raises:
            DomainError: When the sweep range misses the window
        """
        sweep = self.config.sweep
        approx = self.approx
        lo = max(sweep.t_min, approx.t_min)
        hi = min(sweep.t_max, approx.t_max)
        if hi <= lo:
            raise DomainError(
                "sweep range does not meet the validity window",
                {"t_min": sweep.t_min, "t_max": sweep.t_max, "T": approx.t_min},
            )
        if lo > sweep.t_min or hi < sweep.t_max:
            logger.warning("sweep_range_clipped", t_min=lo, t_max=hi)
        return np.geomspace(lo, hi, sweep.samples)

    def map(self, func: Callable[[float], T], items: Sequence[float], desc: str) -> List[T]:
        """Evaluate independent samples, concurrently when more than one thread is configured.

        Results keep the order of ``items``.
        """
        threads = self.config.sweep.threads
        show = progress_enabled()
        if threads <= 1:
            return [func(item) for item in tqdm(items, desc=desc, disable=not show)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(tqdm(pool.map(func, items), total=len(items), desc=desc, disable=not show))


class Scenario(ABC):
    """One experiment suite of the lab."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Scenario name as used in configurations and manifests."""

    @property
    @abstractmethod
    def description(self) -> str:
        """One-line description."""

    @abstractmethod
    def run(self, ctx: RunContext) -> ScenarioResult:
        """Execute the suite, write its artifacts and return values and verdicts.

        Raises:
            LabError: Any module error; the manager records it with the partial outputs
        """

    def archive_record(self, ctx: RunContext, stem: str, record) -> None:
        """Write an (index, arrays) pair produced by a ``to_record`` method."""
        index, arrays = record
        ctx.archive.write_json(self.name, stem, index)
        for key, array in arrays.items():
            ctx.archive.write_array(self.name, f"{stem}_{key}", array)
