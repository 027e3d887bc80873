"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes or lengths do not agree."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConditioningError(ArithmeticError):
    """A linear system is singular or too badly conditioned to solve.

    Attributes:
        condition: The estimated 2-norm condition number that triggered the error.
    """

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class DegenerateError(ArithmeticError):
    """An iterative method was handed an input it cannot make progress on."""
