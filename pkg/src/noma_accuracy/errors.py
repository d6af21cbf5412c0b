"""Exception hierarchy shared by every module."""


class NomaAccuracyError(Exception):
    """Base class for all package errors."""


class ParameterError(NomaAccuracyError, ValueError):
    """Invalid argument or configuration (bad range, inconsistent fields)."""


class DomainError(ParameterError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(NomaAccuracyError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """Iterative procedure did not converge within its budget."""


class EvaluationError(NumericalError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
