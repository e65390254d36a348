"""Exception hierarchy shared by every module of the toolkit."""


class BellTouchardError(Exception):
    """Base class for all toolkit errors."""


class DomainError(BellTouchardError, ValueError):
    """An argument lies outside the domain of the function."""


class DegreeExceededError(DomainError):
    """A polynomial degree is larger than the evaluator supports."""


class ParameterMismatchError(BellTouchardError, ValueError):
    """Objects that must share parameters (theta, horizon) do not."""


class NonConvergenceError(BellTouchardError, ArithmeticError):
    """A series or iteration did not meet its tolerance within its budget."""


class NumericOverflowError(BellTouchardError, OverflowError):
    """A result is not representable as a finite float."""


class TruncationError(BellTouchardError, ValueError):
    """A truncation level is too small for the requested tolerance."""


class IntegrationError(BellTouchardError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class BoundViolationError(BellTouchardError, ValueError):
    """A rate function exceeded its declared upper bound."""
