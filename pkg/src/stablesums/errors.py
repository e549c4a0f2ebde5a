"""Exception types shared across the package.

The CLI maps PreconditionError to exit code 2 and ConvergenceError to 3.
"""


class StableSumsError(Exception):
    """Base class for package errors."""


class PreconditionError(StableSumsError, ValueError):
    """An input violates a documented precondition."""


class DegenerateDataError(PreconditionError):
    """Data carries no usable variation (e.g. all values equal)."""


class TooFewPointsError(PreconditionError):
    """Not enough observations for the requested computation."""


class NoExceedancesError(PreconditionError):
    """No observations exceed the requested threshold."""


class ConvergenceError(StableSumsError, RuntimeError):
    """A numerical routine failed to reach its tolerance."""
