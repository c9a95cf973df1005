#  Copyright (c) modcs contributors.

"""Exception hierarchy shared by every modcs module."""


class ModcsError(Exception):
    """Base class for all modcs errors."""


class ParameterError(ModcsError, ValueError):
    """A precondition on an argument does not hold."""


class ZeroSignalError(ParameterError):
    """An operation that needs signal energy received an all-zero vector."""


class ConditionViolatedError(ModcsError):
    """A coefficient is undefined because its denominator is not positive."""


class EnumerationBudgetError(ModcsError):
    """Exhaustive enumeration would visit more subsets than allowed."""


class ModelError(ModcsError):
    """A generative model cannot keep its support inside [1, n]."""


class MissingConstantError(ModcsError, KeyError):
    """A RipTable was asked for a constant it neither stores nor can compute."""

    def __str__(self) -> str:
        # KeyError quotes its message; keep it readable.
        return str(self.args[0]) if self.args else ""


class ConfigError(ModcsError):
    """Malformed experiment or command-line configuration."""
