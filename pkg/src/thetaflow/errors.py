"""Typed failures raised across the package."""


class ThetaFlowError(Exception):
    """Base class for every error raised by thetaflow."""


class DomainError(ThetaFlowError, ValueError):
    """Input outside the admissible domain (e.g. tau too close to the real axis)."""


class BranchError(ThetaFlowError, ValueError):
    """A square root or branch choice was required but not supplied or is ambiguous."""


class SingularModulus(ThetaFlowError, ArithmeticError):
    """Elliptic modulus on the singular set {0, 1, -1}."""


class ParameterError(ThetaFlowError, ValueError):
    """Degenerate special-function parameters."""


class CutError(ThetaFlowError, ValueError):
    """Argument on a branch cut with no side specified."""


class NoConvergence(ThetaFlowError, ArithmeticError):
    """A series or iteration failed to converge."""


class SingularTransform(ThetaFlowError, ArithmeticError):
    """A point transformation is undefined at the given state."""


class UnsupportedSystem(ThetaFlowError, ValueError):
    """Operation not available for this system."""


class StepUnderflow(ThetaFlowError, ArithmeticError):
    """Adaptive step shrank below the floor; likely a movable singularity."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class DomainEscape(ThetaFlowError, ArithmeticError):
    """Trajectory left the admissible region of its system."""

    def __init__(self, message, last_t=None):
        super().__init__(message)
        self.last_t = last_t


class SingularState(ThetaFlowError, ArithmeticError):
    """A quantity is undefined at the given state (zero denominator)."""


class ResamplingError(ThetaFlowError, ValueError):
    """A trajectory could not be resampled onto the requested grid."""
