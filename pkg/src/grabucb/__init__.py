"""Online sparse source placement on graphs with a kernel-UCB bandit."""
__version__ = "0.1.0"

from .errors import BudgetExceededError, InvalidParameterError, NumericalError  # noqa: F401
