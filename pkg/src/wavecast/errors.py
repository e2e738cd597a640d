"""Exception types shared across the package."""


class WavecastError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(WavecastError):
    """Invalid configuration value or combination (CLI exit code 2)."""


class DataError(WavecastError):
    """Input data violates a contract (CLI exit code 3)."""


class ParseError(DataError):
    """A CSV cell could not be parsed; the message names the offending line."""


class InsufficientDataError(DataError):
    """The stream is too short for the requested operation."""


class EvaluationError(WavecastError):
    """Metric computation over an empty or inconsistent record set."""


class NumericError(WavecastError):
    """Non-finite value produced during model arithmetic (CLI exit code 4)."""
