"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/schema problems -> 2,
numeric failures (divergence, non-convergent truncation) -> 3, oracle
validation failures -> 4.
"""


class ConfigError(ValueError):
    """Bad configuration value, unknown key, or inconsistent spec."""


class SchemaError(ConfigError):
    """A file does not match its declared schema (missing/renamed column)."""


class DataError(ValueError):
    """Data is structurally valid but unusable (empty after cleaning, ...)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergedError(RuntimeError):
    """Training produced a non-finite loss.  Carries the history so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class TruncationError(RuntimeError):
    """A series/factor tail did not decay below tolerance at the cap."""

    def __init__(self, message, suggested=None):
        super().__init__(message)
        self.suggested = suggested
