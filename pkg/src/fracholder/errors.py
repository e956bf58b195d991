"""Exception hierarchy shared by all modules.

The CLI maps each class to a fixed exit code (see :mod:`fracholder.cli`).
"""


class FracHolderError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FracHolderError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(FracHolderError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` carries the best error estimate that was achieved.
    """

    def __init__(self, message, estimate=float("nan"), value=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.value = value


class InstabilityError(FracHolderError, ArithmeticError):
    """A time-stepping scheme blew up."""

    def __init__(self, message, step=-1):
        super().__init__(message)
        self.step = step
