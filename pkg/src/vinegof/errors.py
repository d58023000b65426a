"""Exception hierarchy shared by all modules."""


class VineError(Exception):
    """Base class for errors raised by vinegof."""


class DomainError(VineError, ValueError):
    """Argument or parameter outside the admissible domain."""


class FormatError(VineError, ValueError):
    """A model, data or configuration file does not follow its declared format."""


class ConvergenceError(VineError, RuntimeError):
    """An iterative routine did not converge.

    ``best`` optionally carries the best result found before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NumericalError(VineError, ArithmeticError):
    """A computation produced an unusable value (underflow, stencil off-domain)."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is (numerically) singular."""


class StudyError(VineError, RuntimeError):
    """Too many Monte Carlo replications failed."""
