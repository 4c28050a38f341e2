"""Interactive selection state: range filter, grouping, highlights.

Highlights are tuples: ("origin", id), ("dest", id), or
("cell", origin_id, dest_id). Only range and groups induce a relayout;
highlights are a pure rendering concern.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError
from .model import RegionGroup

Highlight = tuple[str, ...]


@dataclass(frozen=True)
class SelectionState:
    range: tuple[float, float] | None = None
    groups: tuple[RegionGroup, ...] = ()
    highlights: frozenset[Highlight] = frozenset()
    version: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "highlights", frozenset(self.highlights))
        if self.range is not None:
            lo, hi = self.range
            object.__setattr__(self, "range", (float(lo), float(hi)))
        for h in self.highlights:
            if not (
                (len(h) == 2 and h[0] in ("origin", "dest"))
                or (len(h) == 3 and h[0] == "cell")
            ):
                raise ValidationError(f"malformed highlight {h!r}")

    @property
    def relayout_key(self) -> tuple:
        """Hashable identity of the parts that change the layout."""
        groups = tuple(
            sorted((g.group_id, tuple(sorted(g.member_ids))) for g in self.groups)
        )
        return (self.range, groups)

    def bump(self, **changes) -> "SelectionState":
        """A copy with the given fields replaced and the version advanced."""
        return replace(self, version=self.version + 1, **changes)
