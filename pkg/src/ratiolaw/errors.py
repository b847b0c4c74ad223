"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RatioLawError(ValueError):
    exit_code = 3


class ConfigError(RatioLawError):
    """Bad configuration, flag, or call-site argument."""

    exit_code = 1


class DataError(RatioLawError):
    """Input data violates a contract (degenerate classes, bad CSV, ...)."""

    exit_code = 2


class NumericError(RatioLawError):
    """A numeric routine cannot produce a defined result."""

    exit_code = 3
