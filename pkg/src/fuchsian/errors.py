"""Exception hierarchy shared by all modules."""


class FuchsianError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(FuchsianError, ValueError):
    pass


class DomainError(FuchsianError, ValueError):
    """Evaluation at a singular point (pole, inversion center)."""


class UnsupportedDimension(FuchsianError, ValueError):
    pass


class NumericError(FuchsianError, ArithmeticError):
    """Quadrature or iteration failed to produce a finite, converged value."""


class Diverged(NumericError):
    """An integral over the sampled family is not finite."""


class NoSolution(NumericError):
    """Shooting could not bracket a solution of the boundary value problem."""


class UnboundedBelow(NumericError):
    """The discrete energy decreased without bound during minimization."""


class BudgetExceeded(NumericError):
    """The iteration budget ran out before the residual target was met."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
