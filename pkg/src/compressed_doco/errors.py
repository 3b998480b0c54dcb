"""Exception types raised across the package.

Every error derives from :class:`DocoError`; the argument-validation ones
also derive from :class:`ValueError` so callers can catch either.
"""


class DocoError(Exception):
    """Base class for all package errors."""


class InvalidSize(DocoError, ValueError):
    pass


class InvalidMatrix(DocoError, ValueError):
    pass


class InvalidCompressor(DocoError, ValueError):
    pass


class InvalidRounds(DocoError, ValueError):
    pass


class InvalidShrinkage(DocoError, ValueError):
    pass


class InvalidConstruction(DocoError, ValueError):
    pass


class InvalidExploration(DocoError, ValueError):
    pass


class InvalidStepSize(DocoError, ValueError):
    pass


class InvalidDomain(DocoError, ValueError):
    pass


class HorizonTooShort(DocoError, ValueError):
    pass


class InvalidPairing(DocoError, ValueError):
    pass


class InvalidSweep(DocoError, ValueError):
    pass


class ConfigError(DocoError, ValueError):
    """Experiment configuration failed cross-field validation."""


class ComparatorFailure(DocoError, RuntimeError):
    pass


class InternalInvariantFailure(DocoError, AssertionError):
    """A state the algorithms should never reach (e.g. a play outside the domain)."""
