"""Exception types shared across the package.

Every error raised by the public API derives from MaptrixError so callers
(CLI, HTTP service) can map failures to exit codes and response codes by
class name.
"""

from __future__ import annotations

__all__ = [
    "MaptrixError",
    "IngestError",
    "ValidationError",
    "GeometryError",
    "AggregationError",
    "ContiguityError",
    "RangeError",
    "DegenerateSiteError",
    "SteepLeaderError",
    "ModeError",
    "LayoutError",
]


class MaptrixError(Exception):
    """Base class for all package errors."""


class IngestError(MaptrixError):
    """Malformed or inconsistent input files (CSV / GeoJSON)."""


class ValidationError(MaptrixError):
    """Structurally valid input that violates a domain precondition."""


class GeometryError(MaptrixError):
    """Bad geometry: non-simple polygon, zero area, anchor outside, ..."""


class AggregationError(MaptrixError):
    """Region grouping is inconsistent (overlap, unknown member ids)."""


class ContiguityError(AggregationError):
    """A group's members do not form a connected patch of the map."""


class RangeError(MaptrixError):
    """Invalid flow filter range (lo > hi, negative bounds, ...)."""


class DegenerateSiteError(MaptrixError):
    """Two connection sites coincide, so no ordering between them exists."""


class SteepLeaderError(MaptrixError):
    """A leader cannot reach its port at the configured diagonal gradient.

    Carries the minimal gradient that would make the route feasible.
    """

    def __init__(self, message: str, min_feasible_k: float):
        super().__init__(message)
        self.min_feasible_k = float(min_feasible_k)


class ModeError(MaptrixError):
    """Dataset shape does not match the requested layout mode."""


class LayoutError(MaptrixError):
    """The layout pipeline could not produce a crossing-free arrangement."""
