"""Exception taxonomy for flatsat.

Every error raised by the library derives from FlatsatError so callers can
catch the whole family; the CLI maps subfamilies to exit codes.
"""


class FlatsatError(Exception):
    """Base class for all flatsat errors."""


class ZeroThrust(FlatsatError):
    """Thrust-vector inversion called on the zero vector."""


class SingularAttitude(FlatsatError):
    """Requested acceleration needs >= 90 deg inclination (h3 <= 0)."""


class NonPositiveSampling(FlatsatError):
    """Sampling time must be strictly positive."""


class InfeasibleBall(FlatsatError):
    """No ball of positive radius fits in the input set (t_max <= g)."""


class ZeroVector(FlatsatError):
    """Operation undefined for the zero vector."""


class NoFeasibleScaling(FlatsatError):
    """No candidate scaling in (0, 1] lands inside the input set."""


class OriginNotInterior(FlatsatError):
    """Polytope saturation requires the origin strictly inside (all b_i > 0)."""


class EmptyDifference(FlatsatError):
    """Pontryagin difference produced a negative offset (empty set)."""


class Infeasible(FlatsatError):
    """Certificate synthesis found no feasible parameters in range."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class ThresholdAboveInitial(FlatsatError):
    """Adaptive-bound computation needs V(0) >= V_inf."""


class UnstableAcl(FlatsatError):
    """Discrete Lyapunov equation requires a Schur-stable closed loop."""


class DegenerateConstraint(FlatsatError):
    """All terminal-level constraints are non-binding; level is unbounded."""


class ReferenceTooAggressive(FlatsatError):
    """Reference accelerations leave no input margin; use longer durations."""


class ControllerAbort(FlatsatError):
    """A simulated control step emitted an input outside the actuation set."""


class ConfigError(FlatsatError):
    """Configuration file failed schema validation."""
