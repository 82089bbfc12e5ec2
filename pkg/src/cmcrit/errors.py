"""Exception hierarchy shared by the numeric modules and the CLI."""


class CmcritError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class DomainError(CmcritError, ValueError):
    exit_code = 3


class OrderOutOfRange(CmcritError, IndexError):
    exit_code = 3


class ResourceError(CmcritError):
    exit_code = 3


class NonConvergence(CmcritError):
    """Newton iteration stopped without meeting the step tolerance.

    The last iterate is kept on ``point`` so callers can inspect it.
    """

    exit_code = 2

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InsufficientPrecision(CmcritError):
    """Raised when the working precision cannot resolve the linear solve."""

    exit_code = 4


class FitError(CmcritError, ValueError):
    exit_code = 3
