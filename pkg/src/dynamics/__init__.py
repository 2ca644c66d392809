"""Time evolution, modulation fits and the remainder iteration."""

from .evolver import (
    RadialEvolver,
    Trajectory,
    center_tracking,
    dispersive_decay,
    evolve,
    scaling_defect,
    time_reversal_defect,
)
from .modulation import BubbleFit, ModulationFit, fit_bubble, modulation_fit
from .picard import (
    PicardReport,
    PicardSolver,
    TimeMap,
    glued_background,
    ground_background,
    picard_remainder,
)

__all__ = [
    "BubbleFit",
    "ModulationFit",
    "PicardReport",
    "PicardSolver",
    "RadialEvolver",
    "TimeMap",
    "Trajectory",
    "center_tracking",
    "dispersive_decay",
    "evolve",
    "fit_bubble",
    "ground_background",
    "glued_background",
    "modulation_fit",
    "picard_remainder",
    "scaling_defect",
    "time_reversal_defect",
]
