"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all ma2d errors."""


class NonfiniteValue(ToolkitError):
    """A sampled or computed value is NaN or infinite."""


class EmptyDomain(ToolkitError):
    """No lattice node falls inside the requested domain."""


class MalformedFile(ToolkitError):
    """A persisted file violates its format; message carries the line number."""


class DegenerateInput(ToolkitError):
    """Input points are collinear or otherwise do not span the plane."""


class AlphaOutOfRange(ToolkitError):
    """The flow power alpha lies outside the admissible open interval (0, 1/4)."""


class NoConvergence(ToolkitError):
    """The iterative solver did not meet its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfeasibleBoundary(ToolkitError):
    """Boundary data admits no convex extension meeting the prescribed masses."""


class SectionNotCompact(ToolkitError):
    """A sub-level set reaches the computational boundary."""


class DegeneratePolygon(ToolkitError):
    """Polygon area is below the degeneracy threshold."""


class DivideByZeroMass(ToolkitError):
    """A balance radius was requested for a section of zero mass."""


class DomainTooSmall(ToolkitError):
    """The evaluable domain cannot host the requested circles."""


class ConfigInvalid(ToolkitError):
    """An experiment configuration violates the schema."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)
