"""Exception hierarchy shared by all subsystems."""


class LabError(Exception):
    """Base class for every error raised by the package."""


class GridError(LabError, ValueError):
    """Invalid grid specification or incompatible grids."""


class InvalidFieldError(LabError, ValueError):
    """Field with non-finite samples or the wrong role/shape."""


class DivisionGuardError(LabError, ZeroDivisionError):
    """A ratio was requested whose denominator vanishes."""


class TrajectoryError(LabError, ValueError):
    """Trajectory too short or otherwise unusable for the requested norm."""


class DomainError(LabError, ValueError):
    """Argument outside the domain of a constitutive law."""


class SolverStallError(LabError, RuntimeError):
    """Iterative linear solve did not reach its tolerance.

    The final relative residual is kept on ``residual``.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class StepBreakdown(LabError, RuntimeError):
    """The shifted operator ``I + dt*A(t,u)`` lost invertibility.

    Raised by ``solve_shifted`` implementations when the frozen operator can
    no longer be resolved at the current step size; the integrator treats it
    as a blow-up signal.
    """


class ProjectionError(LabError, RuntimeError):
    """Helmholtz projection failed to produce a divergence-free field."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (divergence {residual:.3e})")
        self.residual = residual


class EstimatorError(LabError, ValueError):
    """Invalid request to the maximal-regularity estimator."""


class AssumptionViolation(LabError, RuntimeError):
    """A family violated its declared Lipschitz bound during sampling."""


class ConfigError(LabError, ValueError):
    """Bad or inconsistent configuration."""
