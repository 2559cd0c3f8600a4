"""Exception hierarchy.

Errors fall in two groups that the command-line runner maps to exit codes:
validation problems (bad input, exit 2) and numerical failures (exit 3).
Numerical errors carry a ``certificate`` dict that is serialized on failure.
"""


class MfbsError(Exception):
    """Base class for all package errors."""


class ValidationError(MfbsError, ValueError):
    """Input does not satisfy a documented precondition."""


class ArgumentError(ValidationError):
    """Malformed or inconsistent function arguments."""


class ModelError(ValidationError):
    """A Hurst functional leaves the admissible range (0, 1)."""


class ConfigurationError(ValidationError):
    """Sampler or experiment configuration cannot meet its accuracy target."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = dict(certificate or {})


class SizeError(ValidationError):
    """Problem size exceeds a configured cap."""


class FormatError(ValidationError):
    """Binary or CSV file does not match the expected layout."""


class NumericalError(MfbsError, ArithmeticError):
    """Base class for numerical failures; carries a serializable certificate."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = dict(certificate or {})


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ConditioningError(NumericalError):
    """A Gram matrix stays non positive definite after the maximal jitter."""


class ConsistencyError(NumericalError):
    """An internal identity that must hold by construction was violated."""
