"""Shared exception bases.

``ValidationError`` means the inputs were malformed or outside the
supported regime before any numerics ran; ``EngineError`` means a
solver started and failed.  The CLI maps these to exit codes 2 and 3.
"""

__all__ = ["FermidriftError", "ValidationError", "EngineError"]


class FermidriftError(Exception):
    """Base class for package errors."""


class ValidationError(FermidriftError, ValueError):
    """Bad inputs: malformed config, unsupported data, domain violations."""


class EngineError(FermidriftError, RuntimeError):
    """A numerical procedure failed: collapse, bracket or solver failure."""
