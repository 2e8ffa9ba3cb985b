"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A parameter or config value violates its documented constraint."""


class NumericalError(ArithmeticError):
    """A linear-algebra routine failed or produced non-finite output."""


class BudgetExceededError(RuntimeError):
    """A computation would exceed its configured memory or enumeration budget."""
