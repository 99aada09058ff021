"""Exception hierarchy shared across the package."""


class AqForecastError(Exception):
    """Base class for all package errors."""


class ContractError(AqForecastError, ValueError):
    """A documented precondition of an operation was violated."""


class DimensionError(ContractError):
    """Tensor shapes are incompatible for the requested operation."""


class NumericDomainError(AqForecastError, ValueError):
    """An input lies outside the mathematical domain of a function."""


class NumericError(AqForecastError, FloatingPointError):
    """A computation produced a non-finite value (divergence, overflow)."""


class DataError(AqForecastError):
    """Input data could not be parsed or failed validation.

    ``problems`` holds ``(line_number, message)`` pairs when the error is
    row-level.
    """

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])


class EmptyDatasetError(DataError):
    """No usable samples remain after windowing or filtering."""


class ConfigError(AqForecastError):
    """An experiment configuration is invalid or inconsistent."""
