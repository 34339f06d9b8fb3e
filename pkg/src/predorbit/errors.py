"""Exception types shared across the package."""


class PredorbitError(Exception):
    """Base class for all errors raised by this package."""


class DivisionByZeroInterval(PredorbitError):
    """Divisor interval contains zero."""


class DomainError(PredorbitError):
    """Argument lies outside the domain of a validated elementary function."""


class NotInvertibleCandidate(PredorbitError):
    """The Neumann-series certificate for a reciprocal failed."""


class BallNotInvertible(PredorbitError):
    """Uniform invertibility over a norm ball could not be certified."""


class NewtonDiverged(PredorbitError):
    """Floating-point Newton iteration failed to converge."""


class SingularNodeMatrix(PredorbitError):
    """A collocation-node Jacobian could not be inverted."""


class NoViableNu(PredorbitError):
    """No candidate weight passed the floating-point bound preview."""


class ContractionFailed(PredorbitError):
    """A contraction inequality is violated; the message names it."""


class CrossingUnverified(PredorbitError):
    """A boundary-crossing condition failed on some panel."""


class XiNotInvertible(PredorbitError):
    """The approximate eigenbasis used for disc estimates is not certifiably invertible."""


class StabilityUnverified(PredorbitError):
    """A step of the stability verification failed; the message names the step."""
