"""Exception taxonomy.

Every failure mode that callers are expected to catch gets its own class so
test suites and the CLI can distinguish "bad input" from "resolution too
coarse to answer" from "solver gave up".
"""


class GuenterLabError(Exception):
    """Base class for all package-specific errors."""


# -- geometry --------------------------------------------------------------

class DegenerateGradient(GuenterLabError):
    """Level-set gradient vanishes at a point where a normal is required."""


class NonUnitNormal(GuenterLabError):
    """A vector handed in as a unit normal is not normalized."""


class UnknownShape(GuenterLabError):
    """Shape name not present in the build registry."""


class ResolutionTooCoarse(GuenterLabError):
    """Mesh resolution below the documented per-shape floor."""


class EmptyRegion(GuenterLabError):
    """Region predicate selected no nodes."""


class ZeroMeasure(GuenterLabError):
    """A carrier or region with zero measure where positive measure is required."""


class DegenerateInterval(GuenterLabError):
    """Extrusion interval has zero or negative length."""


class DisconnectedMesh(GuenterLabError):
    """Mean-zero (Poincare-type) constants are undefined on a disconnected mesh."""


# -- calculus ---------------------------------------------------------------

class GridTooCoarse(GuenterLabError):
    """Grid too small for the requested difference stencil."""


class DimensionMismatch(GuenterLabError):
    """Field/vector arguments live on incompatible carriers or dimensions."""


class RankDeficientNeighborhood(GuenterLabError):
    """Vertex star does not span the tangent plane; no gradient fit possible."""


class OrderOutOfScope(GuenterLabError):
    """Derivative or Sobolev order beyond the supported range."""


class NotTangential(GuenterLabError):
    """A surface operation received a field with a normal component."""


# -- norms ------------------------------------------------------------------

class InvalidP(GuenterLabError):
    """Lebesgue exponent outside [1, inf]."""


# -- spectra ----------------------------------------------------------------

class MissingRegion(GuenterLabError):
    """Form kind requires a marked region and none was given."""


class UnsupportedKind(GuenterLabError):
    """Quadratic-form kind not in the registry."""


class NoConvergence(GuenterLabError):
    """Eigen iteration exhausted its budget.

    Carries the iteration count and the last residual for diagnostics.
    """

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(residual {residual:.3e})")


class UnsupportedDimension(GuenterLabError):
    """Operation defined only for ambient dimension 2 or 3."""


# -- kernels ----------------------------------------------------------------

class AmbiguousKernel(GuenterLabError):
    """Spectral gap too small to separate the kernel at this resolution."""


# -- verify -----------------------------------------------------------------

class NoAdmissibleSamples(GuenterLabError):
    """Every generated sample was rejected or trivial."""


class InadmissibleSample(GuenterLabError):
    """A sample violates the admissible-space constraint of the inequality."""


class ProjectionCollapse(GuenterLabError):
    """Admissibility projection annihilated the sample repeatedly."""


# -- cli ---------------------------------------------------------------------

class ConfigError(GuenterLabError):
    """Config file invalid; message carries the offending key or field."""
