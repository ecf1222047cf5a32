"""Exception hierarchy.

Validation problems derive from ``ValidationError`` (CLI exit code 1);
budget and convergence problems derive from ``BudgetError`` (exit code 2).
"""


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class BudgetError(RuntimeError):
    """A computation ran out of its configured budget or failed to converge."""


class OutOfRange(ValidationError):
    pass


class Inconsistent(ValidationError):
    pass


class MTooSmall(ValidationError):
    pass


class BadU(ValidationError):
    pass


class OnSpiral(ValidationError):
    pass


class PoleHit(ValidationError):
    pass


class Singular(ValidationError):
    pass


class BadRadii(ValidationError):
    pass


class BadContours(ValidationError):
    pass


class BadAbscissas(ValidationError):
    pass


class NotGood(ValidationError):
    pass


class InvalidChain(ValidationError):
    pass


class BranchCut(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class Nonconvergence(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass
