"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a probability-valued function."""


class BudgetError(RuntimeError):
    """A computation would exceed its configured work budget."""


class ConvergenceError(RuntimeError):
    """A root search found no bracket or did not converge."""
