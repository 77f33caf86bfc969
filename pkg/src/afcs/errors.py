class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateConfigurationError(ArithmeticError):
    """The configuration makes a gain, depth or MSE update undefined (0/0 or infinite)."""
