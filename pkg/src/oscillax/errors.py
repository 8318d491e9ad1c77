"""Exception hierarchy shared by every module."""


class OscillaxError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(OscillaxError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(OscillaxError, ValueError):
    """An input function violates a stated hypothesis (e.g. positivity)."""


class ResolutionError(OscillaxError):
    """A grid or quadrature is too coarse/short to give a trustworthy answer."""


class InfeasibleError(OscillaxError):
    """No parameter satisfies the requested constraint at machine precision."""
