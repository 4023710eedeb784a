"""Shared exception types for the mdcf package."""


class DomainError(ValueError):
    """Input lies outside the domain of the requested operation."""


class DimensionError(ValueError):
    """Incompatible matrix/vector dimensions."""


class SingularityError(ValueError):
    """Geometric object touches or crosses the singular line of a projective map."""


class PreconditionError(ValueError):
    """A stated precondition was violated (e.g. overlapping polygons in a union)."""


class RankError(ValueError):
    """Linearly dependent columns where an independent basis is required."""


class ClassificationError(RuntimeError):
    """A nonempty cylinder/piece cell matched no known image family."""


class BudgetError(RuntimeError):
    """Computation would exceed the configured step/enumeration budget."""


class VerificationError(RuntimeError):
    """An exact verification produced a nonzero residual."""


class OrbitHalt(Exception):
    """Orbit reached a point where the map is undefined.

    Raised when a coordinate that must be inverted is exactly zero
    (rational endpoint / rational dependence detected).
    """

    def __init__(self, reason: str = "rational dependence"):
        super().__init__(reason)
        self.reason = reason
