"""Exception types shared across the package."""


class FlyscanError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FlyscanError):
    """A configuration file or override is malformed; message names the key."""


class NumericalError(FlyscanError):
    """A computation produced a non-finite value (diverged optimization etc.)."""
