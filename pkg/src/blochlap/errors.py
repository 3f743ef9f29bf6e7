"""Exception types shared across the package."""


class BlochlapError(Exception):
    """Base class for all package errors."""


class BandNotResolved(BlochlapError):
    """A requested spectral band could not be bracketed in the scanned window."""


class DegenerateEdge(BlochlapError):
    """A band edge coincides with a neighbouring band (closed gap) where a
    simple edge was required."""


class BandEdgeSingularity(BlochlapError):
    """Derivative quantities requested at a band edge where dE/dk vanishes
    and the implicit-function formulas break down."""


class OutOfBand(BlochlapError):
    """Energy outside the range of the requested band function."""


class AmbiguousLabeling(BlochlapError):
    """Extended-zone labeling by dominant Fourier coefficient is ambiguous
    (two coefficients within the resolution margin)."""


class IrregularFrequency(BlochlapError):
    """A level set touches a critical point of the band function
    (|grad Lambda| below threshold), so it is not a regular surface."""


class TruncationNotConverged(BlochlapError):
    """Plane-wave truncation box too small for the requested tolerance."""


class OriginSingularity(BlochlapError):
    """Special function evaluated at its branch point / singularity."""


class WindowMismatch(BlochlapError):
    """Sampled density window and cutoff support disagree."""


class SingularForm(BlochlapError):
    """Quadratic form (numerically) singular where invertibility is required."""


class QuadratureNotConverged(BlochlapError):
    """Oscillatory quadrature failed its doubling / Richardson check."""


class NoResonantPoint(BlochlapError):
    """No level-set point with normal matching the requested direction."""


class CurvatureVanishes(BlochlapError):
    """Level-set curvature below threshold where strict positivity is needed."""


class EpsilonZero(BlochlapError):
    """Operation requires a nonzero spectral shift epsilon."""


class TailDominant(BlochlapError):
    """Truncation-tail estimate exceeds the tolerated fraction of the value."""


class EmptyLevelSet(BlochlapError):
    """Requested sublevel shell contains no momenta."""
