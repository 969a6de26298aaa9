"""Exception hierarchy shared by all modules.

Everything raised for a violated mathematical precondition derives from
:class:`DomainError`; the CLI maps those to exit code 1.
"""

from __future__ import annotations


class DomainError(ValueError):
    """A computation was asked for outside its valid domain."""


class EnsembleError(DomainError):
    """An ensemble description failed validation."""


class SpecSyntaxError(EnsembleError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class InstantiationError(EnsembleError):
    """Node or edge counts are not integers at the requested length."""


class ResourceLimitError(DomainError):
    """A configured budget (terms, graphs, map count) would be exceeded."""


class ConvergenceError(DomainError):
    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class AssumptionError(DomainError):
    """Structural assumptions of the small-weight analysis do not hold."""
