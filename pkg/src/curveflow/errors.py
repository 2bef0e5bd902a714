"""Exception hierarchy.

Everything a caller may want to branch on derives from :class:`CurveflowError`.
Domain violations carry the violated inequality as ``constraint`` so that the
CLI can report it verbatim.
"""

from __future__ import annotations


class CurveflowError(Exception):
    """Base class for all library errors."""


class DomainError(CurveflowError, ValueError):
    """An argument lies outside the region where an operation is defined."""

    def __init__(self, message: str, constraint: str | None = None):
        super().__init__(message)
        self.constraint = constraint


class ExtinctError(DomainError):
    """A shrinking curve was queried at or after its extinction time."""


class ConvergenceError(CurveflowError, RuntimeError):
    """An iterative procedure ran out of iterations."""


class BracketError(CurveflowError, ValueError):
    """A root-finding bracket does not enclose the target."""


class OpenCurveError(CurveflowError, ValueError):
    """A closed-curve quantity was requested for an open curve."""


class GeometryError(CurveflowError, ValueError):
    """Invalid curve data (coincident vertices, self-intersection, short grid)."""


class ShootingError(CurveflowError, RuntimeError):
    """A shooting method could not bracket or converge on its parameter."""


class FitError(CurveflowError, RuntimeError):
    """Asymptotic power-law fitting failed."""


class FlowError(CurveflowError, RuntimeError):
    """A PDE evolver aborted (slope cap, instability, self-intersection)."""
