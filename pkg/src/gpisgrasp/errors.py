"""Exception types shared across the package."""


class GpisGraspError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(GpisGraspError):
    """Inputs with incompatible dimensionality."""


class KernelDomainError(GpisGraspError):
    """Kernel evaluated outside its valid range (thin-plate r > R)."""


class IndistinguishableInputsError(GpisGraspError):
    """Covariance factorization failed, typically duplicate inputs with zero noise."""


class NumericalError(GpisGraspError):
    """A numerical result too far out of range to be round-off."""


class OutOfDomainError(GpisGraspError):
    """Query or observation point outside the model's bounding domain."""


class DegenerateShapeError(GpisGraspError):
    """Shape model has no interior: centre of mass undefined."""


class EmptySurfaceError(GpisGraspError):
    """Scalar field has no zero crossing inside the domain."""


class MeshError(GpisGraspError):
    """Mesh file unparseable or mesh not watertight."""


class EmptyViewError(GpisGraspError):
    """Rendered view contains no object hits."""


class InfeasiblePlanError(GpisGraspError):
    """Hand plan violates a kinematic constraint.

    `reason` is one of 'reach' or 'self-collision'.
    """

    def __init__(self, reason, message=""):
        self.reason = reason
        super().__init__(message or f"infeasible hand plan: {reason}")


class PriorConstructionError(GpisGraspError):
    """Could not collect enough successful prior grasps within the attempt cap."""


class ConfigError(GpisGraspError):
    """Malformed run configuration; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
