"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A user-supplied configuration value is invalid or inconsistent."""


class BracketError(RuntimeError):
    """A threshold search could not bracket the target error rate."""
