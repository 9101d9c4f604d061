"""Exception hierarchy shared by every module."""


class FockError(Exception):
    """Base class for all library errors."""


class NumericalFailure(FockError):
    """Truncation or integration could not meet its tolerance."""


class TruncationOverflow(NumericalFailure):
    pass


class LeakageExceeded(NumericalFailure):
    pass


class TraceDrift(NumericalFailure):
    pass


class ConfigError(FockError, ValueError):
    """Invalid arguments or configuration."""


class InvalidMode(ConfigError):
    pass


class ShapeMismatch(ConfigError):
    pass


class ZeroXi(ConfigError):
    pass


class InvalidOrder(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class UnknownInputClass(ConfigError):
    pass


class InvalidEta(ConfigError):
    pass


class DomainViolation(ConfigError):
    pass


class BranchViolation(ConfigError):
    pass


class WrongModeCount(ConfigError):
    pass
