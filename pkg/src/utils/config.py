"""Configuration management.

Two layers: process settings read from the environment (``Config``) and run settings read
from a single JSON file and validated with pydantic (``RunConfig``).
"""

import json
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError

load_dotenv()


class Config:
    """Process configuration."""

    DATA_DIRECTORY: Path = Path(os.getenv("DATA_DIRECTORY", "runs"))
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "console")
    LAB_THREADS: int = int(os.getenv("LAB_THREADS", "1") or 1)
    LAB_CONFIG: Optional[Path] = Path(p) if (p := os.getenv("LAB_CONFIG")) else None

    # Accepted run configuration extensions
    ACCEPTED_CONFIG_TYPES: tuple = (".json",)

    @classmethod
    def validate(cls) -> None:
        """Validate process configuration."""
        if cls.LOG_FORMAT.lower() not in ("console", "json"):
            raise ValueError("LOG_FORMAT must be 'console' or 'json'")
        if cls.LAB_THREADS < 1:
            raise ValueError("LAB_THREADS must be a positive integer")
        if cls.LAB_CONFIG is not None and cls.LAB_CONFIG.suffix not in cls.ACCEPTED_CONFIG_TYPES:
            raise ValueError(f"LAB_CONFIG must be one of {cls.ACCEPTED_CONFIG_TYPES}")

        # Ensure directories exist
        cls.DATA_DIRECTORY.mkdir(parents=True, exist_ok=True)


class ZoneSpec(BaseModel):
    """One graded zone of a radial grid."""

    start: float = Field(ge=0.0)
    end: float
    count: int = Field(ge=5)
    law: Literal["uniform", "geometric", "chebyshev"] = "uniform"

    @model_validator(mode="after")
    def _check_extent(self) -> "ZoneSpec":
        if self.end <= self.start:
            raise ValueError(f"zone end {self.end} must exceed start {self.start}")
        if self.law == "geometric" and self.start <= 0.0:
            raise ValueError("geometric zones need a positive start")
        return self


class GridSpec(BaseModel):
    """Radial grid as a list of zones; contiguity is checked by ``make_grid``."""

    zones: List[ZoneSpec] = Field(min_length=1)

    @classmethod
    def uniform(cls, end: float, count: int, start: float = 0.0) -> "GridSpec":
        return cls(zones=[ZoneSpec(start=start, end=end, count=count)])

    @classmethod
    def graded(
        cls, core: float, core_count: int, end: float, tail_count: int
    ) -> "GridSpec":
        """Uniform core on [0, core] followed by a geometric stretch to ``end``."""
        return cls(
            zones=[
                ZoneSpec(start=0.0, end=core, count=core_count),
                ZoneSpec(start=core, end=end, count=tail_count, law="geometric"),
            ]
        )


class Params(BaseModel):
    """Modulation exponents and remote cutoff scale."""

    nu: float = 0.02
    alpha0: float = 0.01
    delta: float = 0.5

    @field_validator("delta")
    @classmethod
    def _check_delta(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        return value

    @field_validator("nu")
    @classmethod
    def _check_nu(cls, value: float) -> float:
        if value <= -0.5:
            raise ValueError("nu must exceed -1/2")
        return value


class InnerConfig(BaseModel):
    """Inner-region expansion settings."""

    order: int = Field(default=27, ge=1)
    eps1: Optional[float] = None
    fit_window: Tuple[float, float] = (40.0, 400.0)
    fit_depth: int = Field(default=4, ge=1)
    tail_fit_orders: int = Field(default=3, ge=0)
    enforce_matching_constraint: bool = True
    t_min: float = Field(default=10.0, gt=1.0)
    grid: GridSpec = Field(
        default_factory=lambda: GridSpec.graded(
            core=4.0, core_count=201, end=2000.0, tail_count=600
        )
    )

    def resolved_eps1(self, nu: float) -> float:
        return self.eps1 if self.eps1 is not None else (1.0 + 2.0 * nu) / 27.0

    def check_matching(self, nu: float) -> None:
        """Check the joint (N, eps1) inequality.

        Raises:
            ConfigurationError: If the inequality fails and enforcement is on
        """
        if not self.enforce_matching_constraint:
            return
        eps1 = self.resolved_eps1(nu)
        scale = 1.0 + 2.0 * nu
        if not (2 * self.order + 3) * eps1 > 1.5 * scale or not 0.0 < eps1 < scale / 20.0:
            raise ConfigurationError(
                "inner order and matching exponent violate (2N+3)eps1 > 3(1+2nu)/2, "
                "0 < eps1 < (1+2nu)/20",
                {"order": self.order, "eps1": eps1, "nu": nu},
            )


class SelfSimilarConfig(BaseModel):
    """Self-similar profile solver settings."""

    y_series: float = Field(default=1.0, gt=0.0)
    y_floor: float = Field(default=0.02, gt=0.0)
    y_asym: float = Field(default=25.0, gt=1.0)
    y_match: float = Field(default=30.0, gt=1.0)
    y_max: float = Field(default=60.0, gt=1.0)
    series_tol: float = 1e-9
    rtol: float = 1e-11
    atol: float = 1e-14
    samples: int = Field(default=2001, ge=50)


class RemoteConfig(BaseModel):
    """Remote region and gluing settings."""

    eps2: float = 0.375
    x_core: float = 40.0
    x_core_step: float = 0.05
    x_outer_step: float = 0.25
    zeta_k_max: float = 60.0
    zeta_samples: int = Field(default=400, ge=20)

    @field_validator("eps2")
    @classmethod
    def _check_eps2(cls, value: float) -> float:
        if not 0.375 <= value < 0.5:
            raise ValueError("eps2 must lie in [3/8, 1/2)")
        return value


class EvolverConfig(BaseModel):
    """Radial NLS integrator settings."""

    radius: float = Field(default=200.0, gt=0.0)
    step: float = Field(default=0.05, gt=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    sponge_width: float = Field(default=0.2, ge=0.0, lt=1.0)
    sponge_strength: float = Field(default=5.0, ge=0.0)
    blowup_ceiling: float = Field(default=1e3, gt=0.0)
    sample_every: int = Field(default=100, ge=1)
    fit_radius: float = Field(default=10.0, gt=0.0)
    bubble_gate: float = Field(default=0.2, gt=0.0)
    fit_log_scale: float = Field(default=3.0, gt=0.0)
    span_factor: float = Field(default=2.0, gt=1.0)


class PicardConfig(BaseModel):
    """Finite-horizon fixed-point iteration settings."""

    tau1: Optional[float] = None
    horizon_factor: float = Field(default=1e3, gt=1.0)
    tau_samples: int = Field(default=60, ge=4)
    iterations: int = Field(default=6, ge=1)
    radius: float = Field(default=60.0, gt=0.0)
    step: float = Field(default=0.1, gt=0.0)
    substeps: int = Field(default=4, ge=1)
    tau1_candidates: List[float] = Field(default_factory=lambda: [300.0, 1000.0, 3000.0])
    contraction_gate: float = Field(default=1.0, gt=0.0)


class SpectralConfig(BaseModel):
    """Linearized-operator and scattering settings."""

    radius: float = Field(default=60.0, ge=10.0)
    step: float = Field(default=0.1, gt=0.0)
    jost_radius: float = Field(default=1000.0, gt=10.0)
    reduction_radius: float = Field(default=8.0, gt=0.0)
    k_min: float = Field(default=0.005, gt=0.0)
    k_max: float = Field(default=0.5, gt=0.0)
    k_count: int = Field(default=40, ge=4)
    kappas: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2])
    transform_radius: float = Field(default=800.0, gt=10.0)
    transform_step: float = Field(default=0.1, gt=0.0)
    propagator_params: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.0, 0.0), (0.01, 0.0), (0.0, 0.01), (0.01, 0.01)]
    )
    propagator_ratio: float = Field(default=100.0, gt=1.0)
    propagator_steps: int = Field(default=400, ge=10)
    propagator_start: float = Field(default=100.0, gt=0.0)
    eigen_gate: float = Field(default=1e-6, gt=0.0)
    transform_k_count: int = Field(default=32, ge=4)
    coercivity_constant: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_radii(self) -> "SpectralConfig":
        if self.jost_radius < self.transform_radius:
            raise ValueError("jost_radius must cover transform_radius")
        if self.k_max <= self.k_min:
            raise ValueError("k_max must exceed k_min")
        return self


class SweepConfig(BaseModel):
    """Time samples for residual sweeps and reports."""

    t_min: float = Field(default=1e2, gt=1.0)
    t_max: float = Field(default=1e4, gt=1.0)
    samples: int = Field(default=5, ge=2)
    threads: int = Field(default=1, ge=1)
    slope_tolerance: float = 0.05

    @model_validator(mode="after")
    def _check_range(self) -> "SweepConfig":
        if self.t_max <= self.t_min:
            raise ValueError("t_max must exceed t_min")
        return self


ScenarioName = Literal["construct", "residual-sweep", "evolve", "picard", "spectral", "full-report"]


class RunConfig(BaseModel):
    """Root run configuration."""

    params: Params = Field(default_factory=Params)
    beta0: float = Field(default=0.1, gt=0.0)
    inner: InnerConfig = Field(default_factory=InnerConfig)
    self_similar: SelfSimilarConfig = Field(default_factory=SelfSimilarConfig)
    remote: RemoteConfig = Field(default_factory=RemoteConfig)
    evolver: EvolverConfig = Field(default_factory=EvolverConfig)
    picard: PicardConfig = Field(default_factory=PicardConfig)
    spectral: SpectralConfig = Field(default_factory=SpectralConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    scenario: ScenarioName = "construct"
    output_dir: Path = Field(default_factory=lambda: Config.DATA_DIRECTORY)
    seed: int = 20240101

    @model_validator(mode="after")
    def _check_admissible(self) -> "RunConfig":
        if abs(self.params.nu) + abs(self.params.alpha0) > self.beta0:
            raise ValueError(
                f"|nu|+|alpha0| = {abs(self.params.nu) + abs(self.params.alpha0):.4g} "
                f"exceeds beta0 = {self.beta0}"
            )
        try:
            self.inner.check_matching(self.params.nu)
        except ConfigurationError as e:
            raise ValueError(str(e)) from e
        return self

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Read and validate a run configuration file.

        Args:
            path: JSON file

        Returns:
            Validated configuration

        Raises:
            ConfigurationError: If the file is missing, unreadable or invalid
        """
        if not path.exists():
            raise ConfigurationError(f"run configuration not found: {path}", {"path": str(path)})
        try:
            with open(path, "r") as f:
                raw = json.load(f)
            return cls.model_validate(raw)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read run configuration: {e}", {"path": str(path)})
        except ValidationError as e:
            raise ConfigurationError(
                "invalid run configuration",
                {"path": str(path), "errors": [err["msg"] for err in e.errors()]},
            )

    @property
    def eps1(self) -> float:
        return self.inner.resolved_eps1(self.params.nu)
