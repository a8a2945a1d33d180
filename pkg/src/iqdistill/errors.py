"""Exception hierarchy shared by the library and the CLI.

Every error carries an ``exit_code`` so the CLI can translate failures
uniformly: 1 for usage/configuration problems, 2 for data and file format
problems, 3 for numeric aborts.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class ConfigError(EngineError):
    """Invalid configuration value or unknown config key."""

    exit_code = 1


class UsageError(EngineError):
    """Malformed command line."""

    exit_code = 1


class ShapeError(EngineError):
    """Dimension or shape mismatch between inputs."""


class DomainError(EngineError):
    """Input outside the mathematical domain of an operation."""


class DataError(EngineError):
    """Invalid or inconsistent data content."""


class FormatError(DataError):
    """File does not match the expected binary or text format."""


class CorruptionError(FormatError):
    """File header is valid but the payload is truncated or oversized."""


class UndefinedCorrelationError(DataError):
    """Correlation is undefined, e.g. a constant input sequence."""


class NumericError(EngineError):
    """Non-finite value encountered where a finite one is required."""

    exit_code = 3
