"""Exception types shared across the package."""


class CapabilityError(ValueError):
    """A request exceeds what the configured inputs can provide.

    Raised e.g. when a Sobol' dimension is beyond the direction-number table,
    or when an oracle estimator needs a closed-form VaR the model lacks.
    """


class DirectionNumberError(ValueError):
    """Malformed or invalid direction-number input."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid study configuration; ``lineno`` points into the config text."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = source or "<config>"
        if lineno is not None:
            where = f"{where}:{lineno}"
        super().__init__(f"{where}: {message}")
