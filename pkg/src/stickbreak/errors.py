"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain of the requested operation."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to converge or hit a safety cap."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or fails validation."""
