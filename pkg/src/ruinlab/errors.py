"""Exception types shared across the package."""


class RuinLabError(Exception):
    """Base class for every error raised by ruinlab."""


class DomainError(RuinLabError, ValueError):
    """An argument lies outside the domain an operation supports."""


class NoRoot(RuinLabError):
    """The Lundberg equation has no positive root for the given intensity."""


class QuadratureFailure(RuinLabError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NetProfitViolation(RuinLabError):
    """Some admissible intensity has expected claims outpacing premiums."""


class HypothesisViolation(RuinLabError):
    """A regime prediction was requested but a required hypothesis fails.

    Carries ``failed`` — the names of the failing items — so callers can
    report exactly which assumption broke.
    """

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class DerivativeUnstable(RuinLabError):
    """Numeric differentiation steps disagree beyond the allowed tolerance."""


class StratificationError(RuinLabError):
    """Stratified estimate's refinement proxy exceeds the requested tolerance."""


class AcceptanceRateError(RuinLabError):
    """Rejection sampler's acceptance rate fell below the documented floor."""


class DegenerateDenominator(RuinLabError):
    """Internal: a prefactor denominator that cannot vanish did."""


class ConfigError(RuinLabError):
    """Experiment configuration is malformed or inconsistent."""
