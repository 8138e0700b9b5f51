"""Exception hierarchy shared by all ottolab modules."""


class OttolabError(Exception):
    """Base class for every error raised by this package."""


class DomainViolation(OttolabError):
    """A point lies outside (or within 1e-12 of the boundary of) a potential's open domain."""


class NonFinite(OttolabError):
    """A state or objective value overflowed to inf/nan."""


class NoConvergence(OttolabError):
    """An iterative solver stopped before reaching its tolerance.

    The best iterate found so far is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class LineSegmentExitsDomain(OttolabError):
    """The straight-segment initial guess leaves the potential's domain."""


class ShootingDiverged(OttolabError):
    """Boundary-value shooting failed from every available start; use the direct minimizer."""


class FDUnstable(OttolabError):
    """Two finite-difference step sizes disagree by more than 10% of scale."""


class NormalizationError(OttolabError):
    """A potential expected to be normalized (inf F = 0 at the given minimizer) is not."""


class EmptySample(OttolabError):
    """A sampling plan produced no points."""


class CertificationFailed(OttolabError):
    """A convexity certificate required as a precondition does not hold."""


class BadOrder(OttolabError):
    """Invalid order parameter (e.g. p = 1 for the order-p entropy)."""


class NonPositive(OttolabError):
    """A density is not positive anywhere mass is required."""


class MassNotConserved(OttolabError):
    """A density perturbation does not integrate to zero."""


class StabilityViolation(OttolabError):
    """Requested explicit time step exceeds the diffusive stability bound."""


class CutViolation(OttolabError):
    """Too much mass near the circle cut for the interval quantile formula to be valid."""


class KernelDegenerate(OttolabError):
    """eps * N^2 too small: the discrete heat kernel is numerically degenerate."""


class ConfigInvalid(OttolabError):
    """An experiment configuration failed validation."""
