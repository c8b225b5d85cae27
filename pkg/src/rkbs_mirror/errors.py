"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid solver or experiment configuration."""


class NumericalError(FloatingPointError):
    """A kernel value or iterate became non-finite."""
