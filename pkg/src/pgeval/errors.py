"""Exception types shared across the package."""


class PgevalError(Exception):
    """Base class for all errors raised by pgeval."""


class ParameterError(PgevalError, ValueError):
    """An argument or configuration value violates its contract."""


class MapParseError(PgevalError):
    """The road-map document could not be parsed into a usable network."""


class ScenarioFormatError(PgevalError):
    """The scenario document violates the expected schema."""
