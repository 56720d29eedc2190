# modules/errors.py
"""
ERROR HIERARCHY
Exceptions raised by the spectral engines and the command-line surface
"""

from __future__ import annotations


class MonopoleError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MonopoleError, ValueError):
    """Argument outside the domain of a special function or physical map."""


class InvalidSectorError(MonopoleError, ValueError):
    def __init__(self, labels: object, msg: str = "") -> None:
        _msg = f"Invalid quantum-number sector {labels!r}"
        if len(msg) > 0:
            _msg += f"\n  {msg}"
        super().__init__(_msg)
        self.labels = labels


class UsageError(MonopoleError, ValueError):
    """Unknown operator, family or command argument."""


class ConfigError(UsageError):
    def __init__(self, field: str, msg: str, line: int | None = None, column: int | None = None) -> None:
        where = field
        if line is not None:
            where += f" (line {line}, column {column})"
        super().__init__(f"{where}: {msg}")
        self.field = field
        self.line = line
        self.column = column


class ParameterError(MonopoleError, ValueError):
    """Model parameters that make an equation degenerate or a metric invalid."""


class ConvergenceError(MonopoleError, RuntimeError):
    """Successive mesh refinements disagree beyond tolerance."""


class CalibrationError(MonopoleError, RuntimeError):
    """No scalarization candidate reproduces the shift-operator recurrences."""
