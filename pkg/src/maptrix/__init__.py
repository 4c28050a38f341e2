"""maptrix: many-to-many flow maps.

Lays out an origin-destination flow matrix as a 45-degree rotated grid
joined to an origin map and a destination map by crossing-free, evenly
separated leader lines, and serves the result over a small HTTP API.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AggregationError,
    ContiguityError,
    DegenerateSiteError,
    GeometryError,
    IngestError,
    LayoutError,
    MaptrixError,
    ModeError,
    RangeError,
    SteepLeaderError,
    ValidationError,
)

__all__ = [
    "__version__",
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
