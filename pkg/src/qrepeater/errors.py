"""Exception types raised across the package."""


class DomainError(ValueError):
    """A numeric argument is outside its admissible range."""


class UndefinedOutputError(ZeroDivisionError):
    """Purification with zero success probability has no output state."""


class DivergenceError(RuntimeError):
    """An iterated recurrence stopped improving."""


class ConfigError(ValueError):
    """Invalid or inconsistent simulation configuration.

    ``violations`` carries the individual problems when several were found.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ParseError(ConfigError):
    """A configuration document could not be turned into a SimConfig."""

    def __init__(self, key_path, message):
        super().__init__(f"{key_path}: {message}" if key_path else message)
        self.key_path = key_path


class SchedulingError(RuntimeError):
    """An event was scheduled before the current virtual time."""


class ProtocolFault(RuntimeError):
    """Internal protocol desynchronisation; always a simulator bug."""


class InsufficientDataError(ValueError):
    """Not enough arrivals to fit a throughput line."""


class EmptySweepError(ValueError):
    """No sweep candidates survived grid generation and filtering."""
