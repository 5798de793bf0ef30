"""Exception hierarchy shared by every kerrio module."""


class KerrioError(Exception):
    """Base class for all library errors."""


class ContractViolation(KerrioError, ValueError):
    """Caller broke a documented precondition (bad labels, unordered times, ...)."""


class CapabilityError(KerrioError, NotImplementedError):
    """Request is well formed but outside what the engine supports."""


class DivergenceError(KerrioError, ArithmeticError):
    """An integration step has a non-decaying exponent."""


class AccuracyError(KerrioError):
    """Numerical tolerance could not be met; ``best`` holds the last estimate."""

    def __init__(self, message: str, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class MultistabilityError(KerrioError):
    """Homotopy continuation crossed a fold; ``fixed_points`` lists all solutions."""

    def __init__(self, message: str, fixed_points=()):
        super().__init__(message)
        self.fixed_points = tuple(fixed_points)


class TruncationError(KerrioError):
    """Fock-space truncation did not converge for ``observable``."""

    def __init__(self, message: str, observable: str = ""):
        super().__init__(message)
        self.observable = observable


class UndefinedReflectionError(KerrioError, ZeroDivisionError):
    """Reflection or normalized coherence requested with zero drive."""


class ConfigError(KerrioError, ValueError):
    """Scan configuration failed to parse; carries the line number and field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.field = field


class SchemaMismatchError(KerrioError, ValueError):
    """Two result files cannot be compared column by column."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}
