"""Exception hierarchy shared across the package."""


class FtopticsError(Exception):
    """Base class for all solver and validation errors."""


class NonIntegrableDifference(FtopticsError):
    """L1 distance requested on the whole line but f - g has no compact support."""


class RangeNotOnGrid(FtopticsError):
    """Flux range endpoints are not multiples of the grid spacing."""


class ValueOffGrid(FtopticsError):
    """A scalar state is not a grid value (or lies outside the flux range)."""


class FrontCountExplosion(FtopticsError):
    """Live front count exceeded the configured cap."""


class OutOfSpan(FtopticsError):
    """Query time outside the interval a trajectory was built for."""


class SpanExceeded(OutOfSpan):
    """Expansion profiles were not evolved far enough for the requested time."""


class InadmissibleState(FtopticsError):
    """State outside the model's admissible region (vacuum, subsonic, ...)."""


class NoAdmissibleSamples(FtopticsError):
    """Model lint could not draw admissible sample states."""


class CurveRadiusExceeded(FtopticsError):
    """Wave-curve parameter beyond the configured curve radius."""


class NewtonDivergence(FtopticsError):
    """A Newton iteration failed to converge to tolerance."""


class OutsideSmallAmplitude(FtopticsError):
    """Riemann data separated by more than the small-amplitude radius."""


class XiOutsideFan(FtopticsError):
    """Self-similar coordinate outside the requested rarefaction wave."""


class InteractionWithinH(FtopticsError):
    """apply_semigroup called with a step large enough for fronts to interact."""


class TVBlowup(FtopticsError):
    """Total variation monitor violated during front tracking."""


class KindMismatch(FtopticsError):
    """Correction field kind does not match the requested assembly variant."""


class SupportsNotSeparated(FtopticsError):
    """Profile supports overlap at the requested anchor time."""


class NoSeparation(FtopticsError):
    """Family supports never become disjoint within the run horizon."""


class MultipleJumpsInWindow(FtopticsError):
    """Local estimate probe requires exactly one profile jump in its window."""


class NonPositiveValue(FtopticsError):
    """Log-log slope fit received a non-positive value."""


class SweepBudgetExceeded(FtopticsError):
    """Convergence sweep exceeded its wall-clock budget."""


class ConfigValidation(FtopticsError):
    """Experiment configuration failed validation."""
