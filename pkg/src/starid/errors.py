"""Exception types raised across the package."""


class StarIDError(Exception):
    """Base class for all package errors."""


class DomainError(StarIDError, ValueError):
    """A time or interval lies outside the domain of a trajectory."""


class DimensionMismatchError(StarIDError, ValueError):
    """Trajectories or sets of different spatial dimension were combined."""


class ConvergenceError(StarIDError, ArithmeticError):
    """An iterative numerical routine did not reach its tolerance.

    The best available estimate is kept on ``best`` so callers can decide
    whether to accept it.
    """

    def __init__(self, message, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class SizeError(StarIDError, ValueError):
    """A problem is too large for an exhaustive routine."""


class UnderdeterminedError(StarIDError, ValueError):
    """Too few data points to fit the requested model."""


class DegenerateGeometryError(StarIDError, ValueError):
    """Sensor geometry cannot observe the target."""


class DegenerateWindowError(StarIDError, ValueError):
    """An evaluation window has zero or negative length."""


class FormatError(StarIDError, ValueError):
    """An input file does not follow the expected format."""
