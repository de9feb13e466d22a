"""Exception hierarchy.

Validation problems (bad input, violated preconditions) map to CLI exit
code 2; numerical failures (non-convergence, broken invariants detected at
run time) map to exit code 3.
"""


class SerrinError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(SerrinError, ValueError):
    exit_code = 2


class NumericalError(SerrinError, RuntimeError):
    exit_code = 3


class NotStarShapedError(ValidationError):
    pass


class RegimeError(ValidationError):
    """A parameter lies outside the range where a construction is defined."""


class ConvergenceError(NumericalError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class CertificateFailure(NumericalError):
    """A cone escaped the maximal cap during a (C, theta) check."""

    def __init__(self, message, violating_point=None, direction=None):
        super().__init__(message)
        self.violating_point = violating_point
        self.direction = direction
