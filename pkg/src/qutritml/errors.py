class ValidationError(ValueError):
    """Input violates a documented precondition (shape, range, arity)."""


class ConfigError(ValueError):
    """Bad experiment or preprocessing configuration."""


class DataParseError(ValueError):
    """A data file could not be parsed; the message names the offending cell."""


class DatasetUnavailable(ConfigError):
    """A bundled dataset is missing from this installation."""
