"""Exception types shared across the package."""

from __future__ import annotations


class ActeError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(ActeError):
    """A column set, header, or model fingerprint does not match expectations."""


class ParseError(ActeError):
    """A cell could not be parsed; carries the 1-based CSV line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInputError(ActeError):
    """An input file or filtered dataset contains no usable rows."""


class ChronologyError(ActeError):
    """A game date does not follow its previous game date."""


class DomainError(ActeError):
    """A numeric argument is outside its mathematical domain."""


class EncodingError(ActeError):
    """A categorical level was not present in the training vocabulary."""


class InsufficientDataError(ActeError):
    """Too few rows (or distinct ages) to fit the requested model."""


class DegenerateArmError(ActeError):
    """All rows belong to a single treatment arm."""


class PropensityMissingAgeError(ActeError):
    """No propensity value is available for a requested age."""


class AlignmentError(ActeError):
    """Two curves do not share the same age grid."""


class ReplicateFailureError(ActeError):
    """A bootstrap replicate could not be drawn with both arms present."""


class ConfigError(ActeError):
    """An invalid configuration value (unknown scenario, bad learner, ...)."""


class DependencyError(ActeError):
    """A required prior artifact is missing."""
