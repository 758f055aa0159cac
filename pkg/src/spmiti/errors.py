"""Exception hierarchy shared by every module."""


class SpmitiError(Exception):
    """Base class for all library errors."""


class ParseError(SpmitiError):
    """An input file is not well-formed JSON."""


class ValidationError(SpmitiError):
    """An input parsed but violates a structural or semantic invariant."""


class ConfigError(SpmitiError):
    """A run-time configuration value is out of range or inconsistent."""


class SplitError(SpmitiError):
    """A deployed protection could not be assigned to any code correlation set."""


class UnknownMetric(SpmitiError, KeyError):
    pass


class UnknownOverheadType(SpmitiError, KeyError):
    pass


class UnknownStep(SpmitiError, KeyError):
    pass


class SpaceTooLarge(SpmitiError):
    """Exhaustive enumeration was requested on a space above the guard."""


class EmptySolutionSpace(SpmitiError):
    pass


class GuardrailExceeded(SpmitiError):
    pass


class TooLarge(SpmitiError):
    pass


class DegenerateVanillaWarning(UserWarning):
    """A ratio was requested against a vanilla metric equal to zero."""
