"""Flow dataset model: regions, ingestion, aggregation, range filtering.

A dataset couples an M x N nonnegative flow matrix with polygon geometry
for the origin regions (rows) and destination regions (columns). All types
are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import unary_union

from .errors import (
    AggregationError,
    ContiguityError,
    GeometryError,
    IngestError,
    RangeError,
    ValidationError,
)
from .geometry import (
    min_distance_to_boundary,
    point_in_polygon,
    pole_of_inaccessibility,
    polygon_area,
    polygon_centroid,
    polygon_is_simple,
)

Point = tuple[float, float]


@dataclass(frozen=True)
class Region:
    """A named map region: simple polygon plus an interior anchor point."""

    id: str
    name: str
    boundary: tuple[Point, ...]
    anchor: Point


@dataclass(frozen=True)
class RegionGroup:
    """A set of region ids to merge into one region named group_id."""

    group_id: str
    member_ids: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "member_ids", frozenset(self.member_ids))
        if not self.member_ids:
            raise AggregationError(f"group {self.group_id!r} has no members")
        if not self.group_id:
            raise AggregationError("group id must be non-empty")


def make_region(
    region_id: str,
    name: str,
    boundary,
    anchor: Point | None = None,
) -> Region:
    """Validate a polygon and build a Region with an interior anchor.

    The anchor defaults to the centroid, falling back to the pole of
    inaccessibility when the centroid is not strictly inside (concave
    shapes).
    """
    pts = tuple((float(x), float(y)) for x, y in boundary)
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise GeometryError(f"region {region_id!r}: needs >= 3 vertices")
    if not polygon_is_simple(pts):
        raise GeometryError(f"region {region_id!r}: polygon is not simple")
    if abs(polygon_area(pts)) <= 1e-12:
        raise GeometryError(f"region {region_id!r}: zero-area polygon")
    if anchor is None:
        cand = polygon_centroid(pts)
        if not point_in_polygon(cand, pts) or (
            min_distance_to_boundary(cand, pts) <= 1e-9
        ):
            cand = pole_of_inaccessibility(pts)
        anchor = cand
    else:
        anchor = (float(anchor[0]), float(anchor[1]))
        if not point_in_polygon(anchor, pts) or (
            min_distance_to_boundary(anchor, pts) <= 0.0
        ):
            raise GeometryError(
                f"region {region_id!r}: anchor not strictly inside"
            )
    return Region(id=str(region_id), name=str(name), boundary=pts, anchor=anchor)


@dataclass(frozen=True)
class FlowDataset:
    """Immutable M x N flow matrix with per-side region geometry."""

    origins: tuple[Region, ...]
    destinations: tuple[Region, ...]
    flows: np.ndarray

    def __post_init__(self) -> None:
        flows = np.array(self.flows, dtype=float)
        m, n = len(self.origins), len(self.destinations)
        if flows.shape != (m, n):
            raise ValidationError(
                f"flow matrix shape {flows.shape} != ({m}, {n})"
            )
        if flows.size and float(flows.min()) < 0.0:
            raise ValidationError("negative flow value")
        if m and n and not np.any(flows > 0.0):
            raise ValidationError("dataset has no positive flow")
        for side, regions in (("origin", self.origins), ("destination", self.destinations)):
            ids = [r.id for r in regions]
            if len(set(ids)) != len(ids):
                raise ValidationError(f"duplicate {side} region ids")
        flows.setflags(write=False)
        object.__setattr__(self, "flows", flows)
        object.__setattr__(self, "origins", tuple(self.origins))
        object.__setattr__(self, "destinations", tuple(self.destinations))

    @property
    def totals_out(self) -> np.ndarray:
        return self.flows.sum(axis=1)

    @property
    def totals_in(self) -> np.ndarray:
        return self.flows.sum(axis=0)

    @property
    def grand_total(self) -> float:
        return float(self.flows.sum())

    @property
    def origin_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.origins)

    @property
    def dest_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.destinations)

    @property
    def same_country(self) -> bool:
        return self.origin_ids == self.dest_ids


@dataclass(frozen=True)
class ProjectionSpec:
    """How to map boundary coordinates into a panel box.

    kind "equirectangular" treats input as lon/lat degrees (x scaled by
    cos of the mid latitude, y flipped so north is up on screen); kind
    "identity" takes coordinates as already planar. Either way the result
    is uniformly scaled and centered into the padded panel box.
    """

    kind: str = "equirectangular"
    width: float = 360.0
    height: float = 360.0
    padding: float = 16.0


def _project_rings(
    rings: list[list[Point]], spec: ProjectionSpec
) -> list[list[Point]]:
    if spec.kind not in ("equirectangular", "identity"):
        raise ValidationError(f"unknown projection kind {spec.kind!r}")
    pts = [p for ring in rings for p in ring]
    if not pts:
        return rings
    if spec.kind == "equirectangular":
        lats = [p[1] for p in pts]
        lat0 = math.radians((min(lats) + max(lats)) / 2.0)
        cos0 = math.cos(lat0)
        rings = [[(x * cos0, -y) for x, y in ring] for ring in rings]
        pts = [p for ring in rings for p in ring]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    span_x = max(xs) - min(xs)
    span_y = max(ys) - min(ys)
    avail_x = spec.width - 2.0 * spec.padding
    avail_y = spec.height - 2.0 * spec.padding
    if avail_x <= 0 or avail_y <= 0:
        raise ValidationError("projection panel smaller than its padding")
    scale = min(
        avail_x / span_x if span_x > 0 else math.inf,
        avail_y / span_y if span_y > 0 else math.inf,
    )
    if not math.isfinite(scale):
        scale = 1.0
    cx = (min(xs) + max(xs)) / 2.0
    cy = (min(ys) + max(ys)) / 2.0
    tx = spec.width / 2.0
    ty = spec.height / 2.0
    return [
        [((x - cx) * scale + tx, (y - cy) * scale + ty) for x, y in ring]
        for ring in rings
    ]


def _as_text(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    if hasattr(data, "read"):
        raw = data.read()
        return raw.decode("utf-8") if isinstance(raw, bytes) else raw
    return str(data)


def _parse_flow_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise IngestError("flow CSV needs a header row and at least one data row")
    dest_ids = [cell.strip() for cell in rows[0][1:]]
    origin_ids = []
    values = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(dest_ids) + 1:
            raise IngestError(f"flow CSV line {line_no}: ragged row")
        origin_ids.append(row[0].strip())
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as exc:
            raise IngestError(f"flow CSV line {line_no}: {exc}") from None
    return origin_ids, dest_ids, np.asarray(values, dtype=float)


def _parse_boundaries(text: str) -> dict[str, tuple[str, list[Point]]]:
    """Feature id -> (name, outer ring) from a GeoJSON FeatureCollection."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"boundary file is not valid JSON: {exc}") from None
    features = doc.get("features")
    if doc.get("type") != "FeatureCollection" or not isinstance(features, list):
        raise IngestError("boundary file must be a FeatureCollection")
    out: dict[str, tuple[str, list[Point]]] = {}
    for feat in features:
        props = feat.get("properties") or {}
        fid = feat.get("id", props.get("id"))
        if fid is None:
            raise IngestError("boundary feature without an id")
        fid = str(fid)
        name = str(props.get("name", fid))
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "Polygon":
            ring = coords[0]
        elif gtype == "MultiPolygon":
            # keep the largest part; glyphs and leaders attach to it
            ring = max(
                (part[0] for part in coords),
                key=lambda r: abs(polygon_area([(p[0], p[1]) for p in r])),
            )
        else:
            raise IngestError(f"feature {fid!r}: unsupported geometry {gtype!r}")
        pts = [(float(p[0]), float(p[1])) for p in ring]
        if fid in out:
            raise IngestError(f"duplicate boundary feature id {fid!r}")
        out[fid] = (name, pts)
    return out


def load_dataset(
    flow_csv,
    boundaries,
    projection: ProjectionSpec | None = None,
) -> FlowDataset:
    """Build a FlowDataset from flow CSV and boundary GeoJSON bytes.

    CSV layout: first row holds destination ids (first cell ignored),
    first column holds origin ids, each cell the nonnegative flow
    origin -> destination. Every id must match a boundary feature id
    exactly and vice versa. When row and column id sets coincide the
    columns are reordered to the row order and both sides share one
    region list (same-country dataset).
    """
    spec = projection or ProjectionSpec()
    origin_ids, dest_ids, flows = _parse_flow_csv(_as_text(flow_csv))
    if flows.size and float(flows.min()) < 0.0:
        raise ValidationError("negative flow value")
    features = _parse_boundaries(_as_text(boundaries))

    needed = set(origin_ids) | set(dest_ids)
    missing = sorted(needed - set(features))
    extra = sorted(set(features) - needed)
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing from boundaries: " + ", ".join(missing))
        if extra:
            parts.append("not in flow matrix: " + ", ".join(extra))
        raise IngestError("; ".join(parts))

    if set(origin_ids) == set(dest_ids) and origin_ids != dest_ids:
        order = {d: j for j, d in enumerate(dest_ids)}
        perm = [order[o] for o in origin_ids]
        flows = flows[:, perm]
        dest_ids = list(origin_ids)

    def build(ids: list[str]) -> dict[str, Region]:
        rings = _project_rings([features[i][1] for i in ids], spec)
        return {
            rid: make_region(rid, features[rid][0], ring)
            for rid, ring in zip(ids, rings)
        }

    if set(origin_ids) == set(dest_ids):
        # one shared frame: both sides reference the same region objects
        regions = build(origin_ids)
        dest_regions = regions
    else:
        # two maps shown side by side: fit each side to its own frame so
        # neither country is squeezed by the other's extent
        regions = build(origin_ids)
        dest_regions = build(dest_ids)
    return FlowDataset(
        origins=tuple(regions[i] for i in origin_ids),
        destinations=tuple(dest_regions[i] for i in dest_ids),
        flows=flows,
    )


def _adjacent(a: ShapelyPolygon, b: ShapelyPolygon) -> bool:
    # contiguity requires a shared border of positive length, not just a
    # corner touch (point contact unions into pinched, non-simple rings)
    inter = a.boundary.intersection(b.boundary)
    return (not a.disjoint(b)) and inter.length > 0.0


def _merge_boundary(group: RegionGroup, members: list[Region]) -> Region:
    polys = [ShapelyPolygon(r.boundary).buffer(0) for r in members]
    if len(polys) > 1:
        order = list(range(len(polys)))
        seen = {0}
        frontier = [0]
        while frontier:
            cur = frontier.pop()
            for j in order:
                if j not in seen and _adjacent(polys[cur], polys[j]):
                    seen.add(j)
                    frontier.append(j)
        if len(seen) != len(polys):
            bad = sorted(members[j].id for j in order if j not in seen)
            raise ContiguityError(
                f"group {group.group_id!r}: not contiguous (disconnected: "
                + ", ".join(bad)
                + ")"
            )
    merged = unary_union(polys)
    if merged.geom_type != "Polygon":
        raise ContiguityError(
            f"group {group.group_id!r}: union is not a single polygon"
        )
    ring = [(float(x), float(y)) for x, y in merged.exterior.coords]
    return make_region(group.group_id, group.group_id, ring)


def _aggregate_side(
    regions: tuple[Region, ...], groups: list[RegionGroup]
) -> tuple[tuple[Region, ...], np.ndarray]:
    """New region tuple plus the old->new summing indicator matrix."""
    by_group: dict[str, RegionGroup] = {}
    for g in groups:
        for mid in g.member_ids:
            by_group[mid] = g
    merged_cache: dict[str, Region] = {}
    new_regions: list[Region] = []
    column_of: dict[str, int] = {}
    assign: list[int] = []
    for region in regions:
        group = by_group.get(region.id)
        if group is None:
            column_of[region.id] = len(new_regions)
            assign.append(len(new_regions))
            new_regions.append(region)
        elif group.group_id in merged_cache:
            assign.append(column_of[group.group_id])
        else:
            members = [r for r in regions if r.id in group.member_ids]
            merged = _merge_boundary(group, members)
            merged_cache[group.group_id] = merged
            column_of[group.group_id] = len(new_regions)
            assign.append(len(new_regions))
            new_regions.append(merged)
    ids = [r.id for r in new_regions]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise AggregationError("group id collides with region id: " + ", ".join(dupes))
    indicator = np.zeros((len(regions), len(new_regions)))
    for old_idx, new_idx in enumerate(assign):
        indicator[old_idx, new_idx] = 1.0
    return tuple(new_regions), indicator


def aggregate(dataset: FlowDataset, groups) -> FlowDataset:
    """Merge each group of contiguous regions into a single region.

    Flows sum over member pairs (intra-group flow lands on the merged
    region's diagonal cell); ungrouped regions pass through unchanged.
    """
    groups = list(groups)
    if not groups:
        return dataset
    seen: dict[str, str] = {}
    known = set(dataset.origin_ids) | set(dataset.dest_ids)
    gids = [g.group_id for g in groups]
    if len(set(gids)) != len(gids):
        raise AggregationError("duplicate group ids")
    for g in groups:
        for mid in g.member_ids:
            if mid in seen:
                raise AggregationError(
                    f"region {mid!r} appears in groups {seen[mid]!r} and {g.group_id!r}"
                )
            seen[mid] = g.group_id
            if mid not in known:
                raise AggregationError(f"unknown region id {mid!r} in group {g.group_id!r}")

    origin_side = [g for g in groups if any(m in set(dataset.origin_ids) for m in g.member_ids)]
    new_origins, s_out = _aggregate_side(dataset.origins, origin_side)
    if dataset.same_country:
        new_dests, s_in = new_origins, s_out
    else:
        dest_side = [g for g in groups if any(m in set(dataset.dest_ids) for m in g.member_ids)]
        new_dests, s_in = _aggregate_side(dataset.destinations, dest_side)
    return FlowDataset(
        origins=new_origins,
        destinations=new_dests,
        flows=s_out.T @ dataset.flows @ s_in,
    )


def filter_by_range(
    dataset: FlowDataset, lo: float, hi: float
) -> tuple[FlowDataset, frozenset[str]]:
    """Zero flows outside [lo, hi] and drop regions left with no flow.

    Same-country datasets drop a region only when both its in- and
    out-flows vanish (keeping the matrix square); two-country datasets
    drop rows and columns independently. Returns the reduced dataset and
    the set of retained region ids. An empty result is legal.
    """
    lo, hi = float(lo), float(hi)
    if not (0.0 <= lo <= hi):
        raise RangeError(f"invalid flow range [{lo}, {hi}]")
    flows = np.where((dataset.flows >= lo) & (dataset.flows <= hi), dataset.flows, 0.0)
    row_tot = flows.sum(axis=1)
    col_tot = flows.sum(axis=0)
    if dataset.same_country:
        keep = (row_tot > 0.0) | (col_tot > 0.0)
        keep_rows = keep_cols = np.where(keep)[0]
    else:
        keep_rows = np.where(row_tot > 0.0)[0]
        keep_cols = np.where(col_tot > 0.0)[0]
    origins = tuple(dataset.origins[i] for i in keep_rows)
    dests = tuple(dataset.destinations[j] for j in keep_cols)
    reduced = FlowDataset(
        origins=origins,
        destinations=dests,
        flows=flows[np.ix_(keep_rows, keep_cols)],
    )
    retained = frozenset(r.id for r in origins) | frozenset(r.id for r in dests)
    return reduced, retained
