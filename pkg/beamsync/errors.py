"""Exception hierarchy for beamsync."""


class BeamsyncError(Exception):
    """Base class for all beamsync errors."""


class ArgumentError(BeamsyncError, ValueError):
    """Malformed arguments: mismatched lengths, empty arrays, out-of-range parameters."""


class DegenerateInputError(BeamsyncError, ValueError):
    """Input for which the requested quantity is undefined (e.g. a zero total phasor)."""


class DomainError(BeamsyncError, ValueError):
    """Value outside the mathematical domain of an analytical-model function."""


class ConfigError(BeamsyncError):
    """Invalid experiment configuration, unknown preset or unknown experiment type."""
