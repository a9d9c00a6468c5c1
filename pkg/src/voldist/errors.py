"""Exception types shared across the package.

Every numerical precondition failure maps to one of these, so callers (and the
service layer) can report a stable error name instead of a bare ValueError.
"""


class VoldistError(Exception):
    """Base class for all package errors."""


class ConfigInvalid(VoldistError):
    """Scenario configuration cannot be parsed or fails validation."""


class ComputationFailed(VoldistError):
    """A scenario computation raised a numerical error (wrapped)."""

    def __init__(self, cause: VoldistError):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause


class NotInside(VoldistError):
    """Point expected strictly inside the body (or section) is not."""


class NoIntersection(VoldistError):
    """Ray does not meet the boundary (or exits the domain first)."""


class NotOnSurface(VoldistError):
    """Point expected on the boundary is not on it."""


class SingularMap(VoldistError):
    """Affine map has a singular linear part."""


class UnsupportedDimension(VoldistError):
    """Requested ambient/section dimension is not supported."""


class NonpositiveDepth(VoldistError):
    """Cap depth came out non-positive."""


class NotTransversal(VoldistError):
    """Section ray meets the boundary almost tangentially."""


class DomainExceeded(VoldistError):
    """Computation needs the surface beyond its parameter domain."""


class DegenerateSection(VoldistError):
    """Section has (near) zero measure."""


class NotPositiveDefinite(VoldistError):
    """Matrix required to be positive definite is not."""


class MaxIterations(VoldistError):
    """Iterative solver did not converge within its iteration budget."""


class UnboundedCap(VoldistError):
    """Cap volume in the requested direction is unbounded."""


class StepTooLarge(VoldistError):
    """Finite-difference step leaves the admissible region."""


class NotConvex(VoldistError):
    """Surface data fails the convexity check."""


class InsufficientLadder(VoldistError):
    """Too few ladder rungs for the requested fit."""
