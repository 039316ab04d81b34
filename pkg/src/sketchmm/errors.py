"""Exception types shared across the package.

Each class maps a distinct failure mode to a distinct exception so callers
(and the CLI exit-code logic) can tell user errors apart from runtime ones.
"""

from __future__ import annotations


class SketchmmError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(SketchmmError, ValueError):
    """A parameter violates its contract (wrong range, not a power of two, ...)."""


class InvalidSpectrumError(SketchmmError, ValueError):
    """A half-spectrum is not consistent with a real-valued signal."""


class SingularMatrixError(SketchmmError, ArithmeticError):
    """Matrix inversion hit a pivot too small to trust."""


class MemoryBudgetError(SketchmmError, RuntimeError):
    """Estimated working-set size exceeds the configured memory budget."""


class FormatError(SketchmmError, ValueError):
    """A serialized container is malformed or truncated."""
