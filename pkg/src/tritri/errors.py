"""Exception types shared across the package."""


class TriTriError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(TriTriError):
    """Operand shapes are incompatible for the requested operation."""


class NumericError(TriTriError):
    """A computation produced NaN/Inf or otherwise left the finite domain."""


class StateError(TriTriError):
    """An object was used in an order its lifecycle does not allow."""


class DeterminismError(TriTriError):
    """A callable that must be deterministic returned differing values."""


class InputError(TriTriError):
    """Caller-supplied values violate an operation's preconditions."""


class ParseError(TriTriError):
    """A data file is malformed. Carries the offending line number."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        self.path = path
        self.line = line
        prefix = f"{path}:{line}: " if path else ""
        super().__init__(prefix + message)


class ResolutionError(TriTriError):
    """Cross-file references (e.g. image ids) could not be resolved."""

    def __init__(self, message: str, missing: list[str] | None = None):
        self.missing = list(missing or [])
        super().__init__(message)


class ConfigError(TriTriError):
    """A configuration value or combination of flags is invalid."""
