"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` used by the command line driver so that
different failure classes are distinguishable from the shell.
"""


class BesselError(Exception):
    """Base class for all errors raised by :mod:`besselcmo`."""

    exit_code = 1


class InvalidArgumentError(BesselError, ValueError):
    """An argument violates a documented precondition."""

    exit_code = 4


class SingularPointError(InvalidArgumentError):
    """The kernel was requested on the diagonal ``y == z``."""

    exit_code = 5


class QuadratureAccuracyError(BesselError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The best available estimate is kept on the exception.
    """

    exit_code = 6

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InfiniteNormError(BesselError, ArithmeticError):
    """An L^p norm was requested for a function with a nonzero tail."""

    exit_code = 7


class DegenerateSymbolError(BesselError, ValueError):
    """The symbol is a.e. constant on the interval where it is needed."""

    exit_code = 8


class ConfigurationError(BesselError, ValueError):
    """Malformed run configuration or parameters exceeding a size guard."""

    exit_code = 3


class AssemblyError(BesselError, ArithmeticError):
    """A discretized operator produced a non-finite entry."""

    exit_code = 9


class NumericalError(BesselError, ArithmeticError):
    """A linear-algebra routine failed."""

    exit_code = 10
