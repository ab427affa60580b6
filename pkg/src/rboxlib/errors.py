"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and parse
problems exit with 2, numeric divergence with 3.
"""


class RBoxError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RBoxError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(RBoxError, ValueError):
    """A configuration value or combination is not usable."""


class DegenerateGeometryError(InvalidInputError):
    """Geometry input collapses to zero area (or worse)."""


class AnnotationParseError(RBoxError, ValueError):
    """A data line in an annotation or detection file is malformed."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DivergenceError(RBoxError, ArithmeticError):
    """A numeric routine produced non-finite values."""
