"""Exception types shared across the package."""


class HelmwaveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(HelmwaveError, ValueError):
    """A parameter violates a documented precondition (sign, range, shape)."""


class RepresentationError(HelmwaveError, TypeError):
    """A state vector was passed in the wrong representation (q vs r)."""


class CflViolationError(HelmwaveError, RuntimeError):
    """Requested time step violates the explicit-scheme stability bound."""
