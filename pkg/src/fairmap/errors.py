"""Exception types shared across the package."""


class FairmapError(Exception):
    """Base class for all errors raised by fairmap."""


class ConfigError(FairmapError):
    """Bad flag value, malformed config file, or infeasible request."""


class DataError(FairmapError):
    """Malformed or inconsistent input data."""


class RunError(FairmapError):
    """A computation failed at runtime (divergence, empty archive, ...)."""
