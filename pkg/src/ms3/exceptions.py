"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ToleranceNotReached(ArithmeticError):
    """A series ran out of terms before its truncation bound met the tolerance."""

    def __init__(self, message, terms=None, truncation_bound=None):
        super().__init__(message)
        self.terms = terms
        self.truncation_bound = truncation_bound


class ConditionViolated(ValueError):
    """A structural requirement on a channel plan does not hold."""
