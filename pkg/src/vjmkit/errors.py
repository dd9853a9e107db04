"""Exception types raised by the library.

Each class carries a short machine-readable ``code`` used by the CLI to
pick exit statuses and to emit parsable error objects.
"""
from __future__ import annotations


class VjmError(Exception):
    """Base class for all library errors."""

    code = "error"


class DimensionMismatch(VjmError):
    """Array shape or coordinate count does not match the model."""

    code = "dimension-mismatch"


class AngleOutOfRange(VjmError):
    """Relative rotation too close to pi for the rotation-log chart."""

    code = "angle-out-of-range"


class SingularSystem(VjmError):
    """Chain equilibrium block matrix is rank deficient (kinematic singularity)."""

    code = "singular-system"


class MaxIterationsExceeded(VjmError):
    """Iteration budget exhausted before tolerances were met."""

    code = "max-iterations"

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BucklingDetected(VjmError):
    """K_theta0 - H_thth lost positive definiteness under the applied load."""

    code = "buckling"


class SingularJacobian(VjmError):
    """Passive-joint directions are not resolvable through the spring metric."""

    code = "singular-jacobian"


class SingularAggregateStiffness(VjmError):
    """Summed platform stiffness is singular; assembly pose is not unique."""

    code = "singular-aggregate-stiffness"


class NotConverged(VjmError):
    """Outer (platform-level) iteration failed to meet its tolerance."""

    code = "not-converged"

    def __init__(self, message: str, residual: float | None = None, alpha: float | None = None):
        super().__init__(message)
        self.residual = residual
        self.alpha = alpha


class SingularStiffness(VjmError):
    """Aggregate stiffness matrix cannot be inverted for a Newton step."""

    code = "singular-stiffness"


class UnreachableTarget(VjmError):
    """Target pose lies outside the manipulator workspace."""

    code = "unreachable-target"


class ConfigError(VjmError):
    """Configuration file is malformed; message carries the field path."""

    code = "config"
