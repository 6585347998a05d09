"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid parameters or malformed input data."""


class NumericalError(ArithmeticError):
    """A root-finder or quadrature routine failed to converge."""
