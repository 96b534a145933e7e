"""Exception types raised across the package."""


class CritHeatError(Exception):
    """Base class for all package errors."""


class RangeOverflow(CritHeatError, OverflowError):
    """exp(s**2) is not representable in double precision."""


class DomainError(CritHeatError, ValueError):
    """Argument outside the domain of a map."""


class NoZeroFound(CritHeatError):
    """The shooting trajectory stayed positive up to the guard radius."""


class QuadratureFailure(CritHeatError):
    """A quadrature did not reach its requested tolerance."""


class NotInSpace(CritHeatError):
    """The modular integral is infinite for every scaling."""


class ConvergenceFailure(CritHeatError):
    """A root finder stalled."""


class NoConvergence(CritHeatError):
    """A fixed-point iteration hit its sweep limit."""

    def __init__(self, message, sweeps=None, history=None):
        super().__init__(message)
        self.sweeps = sweeps
        self.history = history


class BlowupDetected(CritHeatError):
    """The sup norm of an evolving state crossed the configured ceiling."""

    def __init__(self, message, t_star, trace=None):
        super().__init__(message)
        self.t_star = t_star
        self.trace = trace


class MonotonicityViolation(CritHeatError):
    """A monotone iteration produced a decreasing step."""


class CeilingViolation(CritHeatError):
    """An iterate exceeded its supersolution ceiling."""


class VacuousBound(CritHeatError):
    """The kernel comparison factor H(d, t) is non-positive."""
