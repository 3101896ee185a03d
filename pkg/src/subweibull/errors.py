"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input (bad parameter, malformed data, violated precondition)."""


class NumericError(ArithmeticError):
    """A numeric routine failed to converge or hit a non-finite value."""
