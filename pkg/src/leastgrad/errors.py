"""Exception hierarchy shared across the solver."""


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SolverError):
    """Bad input: malformed configuration, data, or arguments."""


class InvariantViolation(SolverError):
    """A structural property the construction relies on failed to hold."""


class NonRegularLevel(SolverError):
    """The requested level is too close to a critical value of the datum.

    The level sweep catches this and skips the level; almost every level
    is regular, so skipping is sound.
    """
