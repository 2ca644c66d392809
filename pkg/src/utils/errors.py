"""Error hierarchy for the lab.

Library code raises these; the scenario layer and the CLI catch them, log them and
record them in run manifests.
"""

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for all lab errors.

    Args:
        message: Human readable description
        details: Optional diagnostic values, logged and written to manifests
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details: Dict[str, Any] = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for a manifest entry."""
        return {"type": type(self).__name__, "message": str(self), "details": self.details}


class ConfigurationError(LabError, ValueError):
    """Invalid run or environment configuration."""


class GridConfigurationError(ConfigurationError):
    """Grid zones overlap, leave gaps or are too small."""


class UnsupportedOperationError(LabError, ValueError):
    """Requested variant (derivative order, norm kind, ...) is not available."""


class NumericError(LabError, ArithmeticError):
    """Non-finite samples encountered."""


class DomainError(LabError, ValueError):
    """Evaluation outside the region where an object is defined."""


class SingularityError(DomainError):
    """Evaluation at a removable-only-by-convention singular point."""


class OrderingError(LabError, ValueError):
    """Recursive construction requested out of order."""


class DependencyError(LabError, ValueError):
    """A prerequisite result is missing."""


class TailFitConditioningError(LabError, ArithmeticError):
    """Least-squares tail basis is ill conditioned on the requested window."""


class MatchingError(LabError, ArithmeticError):
    """Connection problem is near singular at the matching radius."""


class BranchSelectionError(LabError, ArithmeticError):
    """A particular solution does not show the required decay."""


class StiffnessError(LabError, ArithmeticError):
    """ODE continuation failed (step size underflow or integrator failure)."""


class QuadratureError(LabError, ArithmeticError):
    """An oscillatory or singular quadrature did not converge."""


class CoverageError(LabError, ValueError):
    """Region evaluators do not cover the requested radii."""


class ResolutionError(LabError, ArithmeticError):
    """Discretization too coarse for the requested quantity."""


class ConstraintError(LabError, ArithmeticError):
    """Constraint set is rank deficient."""


class IntegratorError(LabError, ArithmeticError):
    """Time integration became unstable."""


class DomainSizeError(LabError, ValueError):
    """Computational domain too small for the requested momentum."""


class BlowUpError(LabError, ArithmeticError):
    """Solution amplitude exceeded the configured ceiling."""


class NoBubbleError(LabError, ValueError):
    """Trajectory is not dominated by a modulated ground state."""
