"""Exception hierarchy."""


class SdaError(Exception):
    """Base class for all package errors."""


class DataError(SdaError, ValueError):
    """Input data is malformed or violates a precondition."""


class ConfigError(SdaError, ValueError):
    """A run configuration is invalid."""


class ConvergenceError(SdaError, RuntimeError):
    """An iterative solver failed to converge."""


class DegenerateVarianceError(SdaError, ArithmeticError):
    """Every slice has (numerically) zero variance, so no test is possible."""
