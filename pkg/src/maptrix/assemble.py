"""Assemble the complete flow-map view.

Places the origin map above the destination map on the left, a
45-degree-rotated flow matrix to their right, and joins region sites to
matrix rows/columns with crossing-free two-segment leader lines whose
spacing is evened out by a quadratic program.

Coordinate plan: both map panels are laid out in a relative frame first
(origin content starting at y=0, destination content below the panel
gap). The port step t = (H_origin + H_dest + 2*gap) / (rows + cols)
makes the two port tracks exactly span the stacked panels; in the
shared-region mode the destination translation then equals a whole
number of steps, so the destination side is a pure translate of the
origin side. The finished scene is shifted once so nothing leaves the
canvas margin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ModeError, SteepLeaderError, ValidationError
from .labelling import (
    DEST_EDGE,
    ORIGIN_EDGE,
    LabellingConfig,
    LeaderRoute,
    Port,
    assign_ports,
    route_leader,
    verify_crossing_free,
)
from .model import FlowDataset, Region, aggregate, filter_by_range
from .refine import RefinementConfig, refine
from .selection import SelectionState
from .style import colors_for_flows, radius_for_total

Point = tuple[float, float]

SAME_COUNTRY = "same-country"
TWO_COUNTRY = "two-country"


@dataclass(frozen=True)
class AssemblyConfig:
    """Knobs for the assembled view.

    width=None lets the canvas grow rightward to fit the leaders; a
    fixed width pins the matrix against the right margin instead and can
    make leaders infeasibly steep (SteepLeaderError then reports the
    smallest workable gradient k).
    """

    margin: float = 24.0
    panel_gap: float = 48.0
    matrix_gap: float = 40.0
    k: float = 1.0
    w: float = 1.0
    separator_every: int = 5
    glyph_max_radius: float = 14.0
    width: float | None = None

    def __post_init__(self) -> None:
        if not self.margin >= 0:
            raise ValidationError("margin must be >= 0")
        if not self.panel_gap > 0:
            raise ValidationError("panel_gap must be > 0")
        if not self.matrix_gap > 0:
            raise ValidationError("matrix_gap must be > 0")
        if not self.k > 0:
            raise ValidationError("leader gradient k must be > 0")
        if not self.w >= 0:
            raise ValidationError("separation weight w must be >= 0")
        if int(self.separator_every) != self.separator_every or self.separator_every < 2:
            raise ValidationError("separator_every must be an integer >= 2")
        if not self.glyph_max_radius > 0:
            raise ValidationError("glyph_max_radius must be > 0")
        if self.width is not None and not self.width > 0:
            raise ValidationError("width must be > 0 when given")


@dataclass(frozen=True)
class PanelBox:
    """Axis-aligned content box of one map panel."""

    x: float
    y: float
    width: float
    height: float


@dataclass(frozen=True)
class MatrixGeometry:
    """The rotated flow matrix.

    left_corner is the corner shared by the row-port edge (up toward the
    origin map) and the column-port edge (down toward the destination
    map); step is the per-cell advance along either edge measured in x
    (equal in y), so cell edges have length step*sqrt(2).
    """

    left_corner: Point
    step: float
    rows: int
    cols: int
    row_ports: tuple[Port, ...]
    col_ports: tuple[Port, ...]
    separator_every: int
    rotation: float = 45.0

    @property
    def cell_size(self) -> float:
        return self.step * math.sqrt(2.0)

    @property
    def corners(self) -> tuple[Point, Point, Point, Point]:
        lx, ly = self.left_corner
        m, n, t = self.rows, self.cols, self.step
        top = (lx + m * t, ly - m * t)
        right = (lx + (m + n) * t, ly + (n - m) * t)
        bottom = (lx + n * t, ly + n * t)
        return (self.left_corner, top, right, bottom)

    @property
    def center(self) -> Point:
        lx, ly = self.left_corner
        m, n, t = self.rows, self.cols, self.step
        return (lx + (m + n) * t / 2.0, ly + (n - m) * t / 2.0)

    def cell_center(self, p: int, q: int) -> Point:
        lx, ly = self.left_corner
        a = (self.rows - p - 0.5) * self.step
        b = (q + 0.5) * self.step
        return (lx + a + b, ly - a + b)

    def cell_polygon(self, p: int, q: int) -> tuple[Point, Point, Point, Point]:
        cx, cy = self.cell_center(p, q)
        t = self.step
        return ((cx - t, cy), (cx, cy - t), (cx + t, cy), (cx, cy + t))


@dataclass(frozen=True)
class MapTrixLayout:
    """A fully placed scene, ready for rendering or JSON export.

    Region lists keep dataset order; leader lists are in matrix-position
    order (origin_leaders[p] feeds row p). row_order/col_order map matrix
    positions back to dataset indices.
    """

    dataset: FlowDataset
    config: AssemblyConfig
    mode: str
    matrix: MatrixGeometry
    row_order: tuple[int, ...]
    col_order: tuple[int, ...]
    origin_regions: tuple[Region, ...]
    dest_regions: tuple[Region, ...]
    origin_leaders: tuple[LeaderRoute, ...]
    dest_leaders: tuple[LeaderRoute, ...]
    origin_panel: PanelBox
    dest_panel: PanelBox
    canvas: tuple[float, float]
    glyph_radius_out: tuple[float, ...]
    glyph_radius_in: tuple[float, ...]
    label_shade_out: tuple[float, ...]
    label_shade_in: tuple[float, ...]
    cell_colors: tuple[tuple[str, ...], ...]
    max_flow: float
    crossings: tuple[int, int]
    refine_status: tuple[str, str]

    def cell_value(self, p: int, q: int) -> float:
        return float(self.dataset.flows[self.row_order[p], self.col_order[q]])

    def to_json(self) -> str:
        ds = self.dataset
        origin_pos = {idx: p for p, idx in enumerate(self.row_order)}
        dest_pos = {idx: q for q, idx in enumerate(self.col_order)}

        def region_entry(r, position, site, radius, shade):
            return {
                "id": r.id,
                "name": r.name,
                "polygon": [[x, y] for x, y in r.boundary],
                "site": [site[0], site[1]],
                "position": position,
                "glyph_radius": radius,
                "label_shade": shade,
            }

        def leader_entry(route, region_id, position):
            return {
                "region_id": region_id,
                "position": position,
                "points": [[x, y] for x, y in route.polyline],
            }

        def panel_entry(p):
            return {"x": p.x, "y": p.y, "width": p.width, "height": p.height}

        cells = []
        for p in range(len(self.row_order)):
            for q in range(len(self.col_order)):
                cx, cy = self.matrix.cell_center(p, q)
                cells.append(
                    {
                        "row": p,
                        "col": q,
                        "origin": ds.origins[self.row_order[p]].id,
                        "dest": ds.destinations[self.col_order[q]].id,
                        "value": self.cell_value(p, q),
                        "color": self.cell_colors[p][q],
                        "center": [cx, cy],
                    }
                )

        corners = self.matrix.corners
        doc = {
            "mode": self.mode,
            "canvas": {"width": self.canvas[0], "height": self.canvas[1]},
            "panels": {
                "origin": panel_entry(self.origin_panel),
                "dest": panel_entry(self.dest_panel),
            },
            "matrix": {
                "rows": [ds.origins[i].id for i in self.row_order],
                "cols": [ds.destinations[i].id for i in self.col_order],
                "left_corner": list(self.matrix.left_corner),
                "step": self.matrix.step,
                "cell_size": self.matrix.cell_size,
                "rotation": self.matrix.rotation,
                "center": list(self.matrix.center),
                "separator_every": self.matrix.separator_every,
                "corners": {
                    "left": list(corners[0]),
                    "top": list(corners[1]),
                    "right": list(corners[2]),
                    "bottom": list(corners[3]),
                },
                "row_ports": [list(p.position) for p in self.matrix.row_ports],
                "col_ports": [list(p.position) for p in self.matrix.col_ports],
            },
            "regions": {
                "origin": [
                    region_entry(
                        r,
                        origin_pos[i],
                        self.origin_leaders[origin_pos[i]].site,
                        self.glyph_radius_out[i],
                        self.label_shade_out[i],
                    )
                    for i, r in enumerate(self.origin_regions)
                ],
                "dest": [
                    region_entry(
                        r,
                        dest_pos[i],
                        self.dest_leaders[dest_pos[i]].site,
                        self.glyph_radius_in[i],
                        self.label_shade_in[i],
                    )
                    for i, r in enumerate(self.dest_regions)
                ],
            },
            "leaders": {
                "origin": [
                    leader_entry(route, ds.origins[self.row_order[p]].id, p)
                    for p, route in enumerate(self.origin_leaders)
                ],
                "dest": [
                    leader_entry(route, ds.destinations[self.col_order[q]].id, q)
                    for q, route in enumerate(self.dest_leaders)
                ],
            },
            "cells": cells,
            "max_flow": self.max_flow,
            "crossings": {"origin": self.crossings[0], "dest": self.crossings[1]},
            "refine_status": list(self.refine_status),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# ------------------------------------------------------------ helpers


def _bbox(regions) -> tuple[float, float, float, float]:
    xs = [x for r in regions for x, _ in r.boundary]
    ys = [y for r in regions for _, y in r.boundary]
    return min(xs), min(ys), max(xs), max(ys)


def _translate(region: Region, dx: float, dy: float) -> Region:
    return Region(
        id=region.id,
        name=region.name,
        boundary=tuple((x + dx, y + dy) for x, y in region.boundary),
        anchor=(region.anchor[0] + dx, region.anchor[1] + dy),
    )


def _invert(perm) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for site_idx, port_idx in enumerate(perm):
        inv[port_idx] = site_idx
    return tuple(inv)


def _direct_route(site: Point, port: Port, k: float) -> LeaderRoute:
    # route_leader minus the steepness guard: used only for the synthetic
    # refinement ports, whose feasibility follows from the real ports'
    # (up to one ulp, which the program's own fallback absorbs)
    sx, sy = site
    py = port.position[1]
    run = abs(py - sy) / k
    return LeaderRoute(
        site=(sx, sy),
        bend=(sx + run, py),
        port=port,
        gradient_sign="up" if sy <= py else "down",
    )


def _reroute_side(sites, ports, anchor_routes, lab):
    """Final leaders from refined sites, plus the crossing count.

    Falls back to the anchor routing when any leader fails to route or
    the routed side is not crossing-free; both are belt-and-braces, the
    separation program keeps sites route-safe by construction.
    """
    try:
        routes = [route_leader(s, ports[i], lab) for i, s in enumerate(sites)]
    except (SteepLeaderError, ValidationError):
        routes = None
    if routes is not None:
        clashes = verify_crossing_free(routes)
        if not clashes:
            return routes, False, 0
    return list(anchor_routes), True, len(verify_crossing_free(anchor_routes))


# ------------------------------------------------------------ assembly


def _assemble(ds: FlowDataset, cfg: AssemblyConfig, mode: str) -> MapTrixLayout:
    m_rows = len(ds.origins)
    n_cols = len(ds.destinations)
    if m_rows == 0 or n_cols == 0:
        raise ValidationError("layout needs at least one origin and one destination")

    ox0, oy0, ox1, oy1 = _bbox(ds.origins)
    if mode == SAME_COUNTRY:
        dx0, dy0, dx1, dy1 = ox0, oy0, ox1, oy1
    else:
        dx0, dy0, dx1, dy1 = _bbox(ds.destinations)
    w_o, h_o = ox1 - ox0, oy1 - oy0
    w_d, h_d = dx1 - dx0, dy1 - dy0

    # one port step per matrix row/column spans both panels plus both gaps
    t = (h_o + h_d + 2.0 * cfg.panel_gap) / (m_rows + n_cols)
    ly_rel = h_o / 2.0 + m_rows * t / 2.0
    row_off = [(m_rows - p - 0.5) * t for p in range(m_rows)]
    col_off = [(q + 0.5) * t for q in range(n_cols)]
    row_y = [ly_rel - off for off in row_off]
    col_y = [ly_rel + off for off in col_off]

    # destination content translation in the relative frame
    if mode == SAME_COUNTRY:
        dest_shift = n_cols * t  # equals h_o + panel_gap up to rounding
    else:
        dest_shift = h_o + cfg.panel_gap

    o_anchors = [(r.anchor[0] - ox0, r.anchor[1] - oy0) for r in ds.origins]
    if mode == SAME_COUNTRY:
        d_anchors = [(ax, ay + dest_shift) for ax, ay in o_anchors]
    else:
        d_anchors = [
            (r.anchor[0] - dx0, r.anchor[1] - dy0 + dest_shift)
            for r in ds.destinations
        ]

    # port assignment only compares y-order, so provisional ports at the
    # smallest legal x settle the orders before the corner is known
    content_right = max(w_o, w_d)
    lx0 = content_right + cfg.matrix_gap
    lab0 = LabellingConfig(k=cfg.k, port_spacing=t, port_line_x=lx0)
    prov_rows = [Port(p, (lx0, row_y[p]), ORIGIN_EDGE) for p in range(m_rows)]
    row_order = _invert(assign_ports(o_anchors, prov_rows, lab0))
    if mode == SAME_COUNTRY:
        col_order = row_order
    else:
        prov_cols = [Port(q, (lx0, col_y[q]), DEST_EDGE) for q in range(n_cols)]
        col_order = _invert(assign_ports(d_anchors, prov_cols, lab0))

    # the matrix corner must leave every leader room to bend before its port
    def bend_reqs(anchors_by_pos, ys, offs):
        reqs = []
        for pos, (ax, ay) in enumerate(anchors_by_pos):
            run = abs(ys[pos] - ay) / cfg.k
            reqs.append(ax + run - offs[pos])
        return reqs

    reqs = bend_reqs([o_anchors[i] for i in row_order], row_y, row_off)
    reqs += bend_reqs([d_anchors[i] for i in col_order], col_y, col_off)
    if cfg.width is None:
        lx_rel = max([content_right] + reqs) + cfg.matrix_gap
    else:
        lx_rel = cfg.width - 2.0 * cfg.margin - (m_rows + n_cols) * t

    # single shift from the relative frame onto the canvas
    min_x = min(0.0, lx_rel)
    max_x = max(content_right, lx_rel + (m_rows + n_cols) * t)
    dest_bottom = dest_shift + h_d
    min_y = min(0.0, ly_rel - m_rows * t)
    max_y = max(dest_bottom, ly_rel + n_cols * t)
    sx = cfg.margin - min_x
    sy = cfg.margin - min_y
    canvas = (max_x + sx + cfg.margin, max_y + sy + cfg.margin)

    lx = lx_rel + sx
    ly = ly_rel + sy
    origin_abs = [_translate(r, sx - ox0, sy - oy0) for r in ds.origins]
    if mode == SAME_COUNTRY:
        # translate the placed origin regions so the copy is exact pointwise
        dest_abs = [_translate(r, 0.0, dest_shift) for r in origin_abs]
        dest_panel = PanelBox(sx, sy + dest_shift, w_o, h_o)
    else:
        dest_abs = [
            _translate(r, sx - dx0, sy - dy0 + dest_shift) for r in ds.destinations
        ]
        dest_panel = PanelBox(sx, sy + dest_shift, w_d, h_d)
    origin_panel = PanelBox(sx, sy, w_o, h_o)

    row_ports = tuple(
        Port(p, (lx + row_off[p], row_y[p] + sy), ORIGIN_EDGE) for p in range(m_rows)
    )
    col_ports = tuple(
        Port(q, (lx + col_off[q], col_y[q] + sy), DEST_EDGE) for q in range(n_cols)
    )
    lab = LabellingConfig(k=cfg.k, port_spacing=t, port_line_x=lx)

    o_sites = [origin_abs[i].anchor for i in row_order]
    d_sites = [dest_abs[i].anchor for i in col_order]
    o_anchor_routes = [route_leader(s, row_ports[p], lab) for p, s in enumerate(o_sites)]
    d_anchor_routes = [route_leader(s, col_ports[q], lab) for q, s in enumerate(d_sites)]

    rc = RefinementConfig(
        w=cfg.w,
        d_b=min(6.0, 0.35 * t),
        d_lc=min(4.0, 0.25 * t),
        epsilon_order=min(0.5, 0.1 * t),
    )
    o_regions_by_pos = [origin_abs[i] for i in row_order]
    d_regions_by_pos = [dest_abs[i] for i in col_order]

    if mode == SAME_COUNTRY:
        # Shared order means position p names the same region on both
        # edges, so one program serves both sides — but the row port and
        # column port at position p sit at different x. Refining against
        # synthetic ports at the smaller of the two x's makes the reach
        # constraint valid for both, and the solved sites translate to
        # the destination side.
        syn_ports = [
            Port(p, (lx + min(row_off[p], col_off[p]), row_y[p] + sy), ORIGIN_EDGE)
            for p in range(m_rows)
        ]
        syn_routes = [_direct_route(s, syn_ports[p], cfg.k) for p, s in enumerate(o_sites)]
        delta = refine(syn_routes, o_regions_by_pos, rc, labelling=lab)
        o_final, o_fell, o_cross = _reroute_side(delta.sites, row_ports, o_anchor_routes, lab)
        d_refined = [(x, y + dest_shift) for x, y in delta.sites]
        d_final, d_fell, d_cross = _reroute_side(d_refined, col_ports, d_anchor_routes, lab)
        statuses = (
            delta.status + ("+anchors" if o_fell else ""),
            delta.status + ("+anchors" if d_fell else ""),
        )
    else:
        delta_o = refine(
            o_anchor_routes,
            o_regions_by_pos,
            rc,
            labelling=lab,
            extra_foreign_routes=d_anchor_routes,
        )
        delta_d = refine(
            d_anchor_routes,
            d_regions_by_pos,
            rc,
            labelling=lab,
            extra_foreign_routes=o_anchor_routes,
        )
        o_final, o_fell, o_cross = _reroute_side(delta_o.sites, row_ports, o_anchor_routes, lab)
        d_final, d_fell, d_cross = _reroute_side(delta_d.sites, col_ports, d_anchor_routes, lab)
        statuses = (
            delta_o.status + ("+anchors" if o_fell else ""),
            delta_d.status + ("+anchors" if d_fell else ""),
        )

    crossings = (o_cross, d_cross)

    out = ds.totals_out
    inn = ds.totals_in
    max_total = float(max(out.max(), inn.max()))
    glyph_out = tuple(
        radius_for_total(float(v), max_total, cfg.glyph_max_radius) for v in out
    )
    glyph_in = tuple(
        radius_for_total(float(v), max_total, cfg.glyph_max_radius) for v in inn
    )
    shade_out = tuple(float(v) / max_total if max_total > 0 else 0.0 for v in out)
    shade_in = tuple(float(v) / max_total if max_total > 0 else 0.0 for v in inn)

    vmax = float(ds.flows.max())
    ordered = ds.flows[np.ix_(row_order, col_order)]
    cell_colors = tuple(tuple(row) for row in colors_for_flows(ordered, vmax))

    matrix = MatrixGeometry(
        left_corner=(lx, ly),
        step=t,
        rows=m_rows,
        cols=n_cols,
        row_ports=row_ports,
        col_ports=col_ports,
        separator_every=cfg.separator_every,
    )
    return MapTrixLayout(
        dataset=ds,
        config=cfg,
        mode=mode,
        matrix=matrix,
        row_order=row_order,
        col_order=col_order,
        origin_regions=tuple(origin_abs),
        dest_regions=tuple(dest_abs),
        origin_leaders=tuple(o_final),
        dest_leaders=tuple(d_final),
        origin_panel=origin_panel,
        dest_panel=dest_panel,
        canvas=canvas,
        glyph_radius_out=glyph_out,
        glyph_radius_in=glyph_in,
        label_shade_out=shade_out,
        label_shade_in=shade_in,
        cell_colors=cell_colors,
        max_flow=vmax,
        crossings=crossings,
        refine_status=statuses,
    )


def layout(dataset: FlowDataset, config: AssemblyConfig | None = None) -> MapTrixLayout:
    """Lay out a dataset whose rows and columns list the same regions.

    The matrix keeps one shared region order on both axes and the
    destination map is an exact translated copy of the origin map.
    """
    cfg = config or AssemblyConfig()
    if not dataset.same_country:
        raise ModeError(
            "rows and columns list different regions; use layout_two_country"
        )
    if not dataset.origins:
        raise ValidationError("dataset has no regions")
    return _assemble(dataset, cfg, SAME_COUNTRY)


def layout_two_country(
    origin_dataset: FlowDataset,
    dest_dataset: FlowDataset | None = None,
    config: AssemblyConfig | None = None,
) -> MapTrixLayout:
    """Lay out flows between two different region sets.

    Flows and origin geometry come from origin_dataset; when a second
    dataset is given its regions replace the destination geometry,
    matched by id. Row and column orders are assigned independently.
    """
    cfg = config or AssemblyConfig()
    ds = origin_dataset
    if dest_dataset is not None and dest_dataset is not origin_dataset:
        lookup = {r.id: r for r in dest_dataset.origins}
        lookup.update({r.id: r for r in dest_dataset.destinations})
        missing = [i for i in ds.dest_ids if i not in lookup]
        if missing:
            raise ValidationError(
                f"destination regions missing from geometry dataset: {missing[:5]}"
            )
        ds = FlowDataset(
            origins=ds.origins,
            destinations=tuple(lookup[i] for i in ds.dest_ids),
            flows=ds.flows,
        )
    if not ds.origins or not ds.destinations:
        raise ValidationError("two-country layout needs regions on both sides")
    return _assemble(ds, cfg, TWO_COUNTRY)


def relayout(base: MapTrixLayout, selection: SelectionState) -> MapTrixLayout:
    """Recompute the layout for a filtered/aggregated view of a dataset.

    Only the flow range and region groups change geometry; highlights
    never do. An empty selection returns the layout unchanged.
    """
    ds = base.dataset
    if selection.range is not None:
        lo, hi = selection.range
        ds, _kept = filter_by_range(ds, float(lo), float(hi))
    if selection.groups:
        ds = aggregate(ds, tuple(selection.groups))
    if ds is base.dataset:
        return base
    if base.mode == TWO_COUNTRY:
        return layout_two_country(ds, config=base.config)
    return layout(ds, base.config)
