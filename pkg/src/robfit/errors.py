"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and data
problems exit with 2, numerical failures with 3, and detected bound
violations with 4.
"""
from __future__ import annotations


class RobfitError(Exception):
    """Base class for errors raised by this package."""


class DataError(RobfitError, ValueError):
    """Malformed input: bad shapes, non-finite entries, parse failures."""


class ConfigError(RobfitError, ValueError):
    """Invalid configuration file or option combination."""


class NumericalError(RobfitError, RuntimeError):
    """A numerical routine failed: rank deficiency, iteration blow-up."""


class GeneratorError(RobfitError, RuntimeError):
    """A data generator produced an unusable trajectory."""


class BoundViolationError(RobfitError, RuntimeError):
    """An empirical error exceeded its certified bound."""
