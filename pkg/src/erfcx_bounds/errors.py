class DomainError(ValueError):
    """Argument outside the domain an operation is defined (or accurate) on."""


class PrecisionError(ValueError):
    """Requested accuracy cannot be delivered in binary64."""


class ConvergenceError(ArithmeticError):
    """An iterative engine stopped before meeting its own stopping rule."""
