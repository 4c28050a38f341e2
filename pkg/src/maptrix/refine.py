"""Site placement refinement for leader-line layouts.

Given crossing-free leader routes and the region polygons their sites sit
in, this module works out how far each site may move (a maximal
axis-aligned rectangle inside its region, pruned against the other
leaders) and then solves one convex quadratic program that evens out the
spacing between parallel diagonal leader segments while keeping each site
close to its anchor. Every ordering requirement is encoded as a linear
row, so a solution of the program is crossing-free by construction; the
refined layout is still re-routed and re-verified before it is returned,
and the anchor layout is the fallback whenever the program cannot be
solved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, SteepLeaderError, ValidationError
from .geometry import (
    min_distance_to_boundary,
    point_in_polygon,
    point_segment_distance,
    segment_segment_distance,
    segments_intersect,
)
from .labelling import (
    LabellingConfig,
    partition_bands,
    route_leader,
    verify_crossing_free,
)
from .qp import QpProblem, solve

Point = tuple[float, float]

__all__ = [
    "RefinementConfig",
    "SiteRect",
    "VariableMap",
    "RefinedLayoutDelta",
    "grow_rectangle",
    "prune_rectangle",
    "build_program",
    "refine",
]

_GROW_SHRINK = 1.0 - 1e-9  # strict per-round backoff so edges never touch
_BISECT_ITERS = 24


@dataclass(frozen=True)
class RefinementConfig:
    """Weights and clearances for the separation program.

    w weighs evenness against anchor closeness, d_b is the body clearance
    a site keeps from foreign leaders, d_lc the clearance from band
    separator lines, and epsilon_order the floor under every adjacent
    leader separation (this floor is what preserves the leader order).
    """

    w: float = 1.0
    d_b: float = 6.0
    d_lc: float = 4.0
    epsilon_order: float = 0.5

    def __post_init__(self) -> None:
        if not self.w >= 0:
            raise ValidationError("separation weight w must be >= 0")
        if not self.d_b > 0:
            raise ValidationError("body clearance d_b must be > 0")
        if not self.d_lc > 0:
            raise ValidationError("line clearance d_lc must be > 0")
        if not self.epsilon_order > 0:
            raise ValidationError("order margin epsilon_order must be > 0")


@dataclass(frozen=True)
class SiteRect:
    """Where one site may move.

    An axis-aligned rectangle centred on the anchor, plus effective y
    bounds (clearance from foreign leaders already subtracted; +-inf when
    unconstrained). A degenerate rect pins the site to its anchor.
    """

    region_id: str
    top_left: Point
    bottom_right: Point
    y_lo: float
    y_hi: float
    margin: float
    degenerate: bool = False


@dataclass(frozen=True)
class VariableMap:
    """Index map for the program variables plus row labels for reporting."""

    lx: tuple[int, ...]
    ly: tuple[int, ...]
    d: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    pair_signs: tuple[str, ...]
    initial_d: tuple[float, ...]
    D: float
    k: float
    row_labels: tuple[str, ...]


@dataclass(frozen=True)
class RefinedLayoutDelta:
    """Outcome of a refinement pass.

    Sites/routes are index-aligned with the input. d holds the refined
    separation of each adjacent same-band pair, initial_d the anchor-time
    values, and D the evenness target (the largest initial separation).
    """

    region_ids: tuple[str, ...]
    sites: tuple[Point, ...]
    routes: tuple
    pairs: tuple[tuple[int, int], ...]
    d: tuple[float, ...]
    initial_d: tuple[float, ...]
    D: float
    pcentre: float
    psep: float
    objective: float
    status: str
    iterations: int
    used_fallback: bool
    damping: float
    clashed: tuple[str, ...]
    pinned: tuple[str, ...]


# --------------------------------------------------------------- grow


def _iter_edges(polygon) -> list[tuple[Point, Point]]:
    pts = list(polygon)
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    return [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]


def _half_extent(edges, anchor: Point, axis: int, other_half: float) -> float:
    """Largest half-extent along `axis` before any polygon edge enters the
    rect, given the fixed half-extent of the other axis."""
    ax, ay = anchor
    center = ax if axis == 0 else ay
    slab_mid = ay if axis == 0 else ax
    slab_lo, slab_hi = slab_mid - other_half, slab_mid + other_half
    best = math.inf
    for a, b in edges:
        if axis == 0:
            u1, v1, u2, v2 = a[0], a[1], b[0], b[1]
        else:
            u1, v1, u2, v2 = a[1], a[0], b[1], b[0]
        if v1 == v2:
            if not (slab_lo <= v1 <= slab_hi):
                continue
            u_min, u_max = min(u1, u2), max(u1, u2)
        else:
            t1 = (slab_lo - v1) / (v2 - v1)
            t2 = (slab_hi - v1) / (v2 - v1)
            t_lo, t_hi = min(t1, t2), max(t1, t2)
            t_lo, t_hi = max(t_lo, 0.0), min(t_hi, 1.0)
            if t_lo > t_hi:
                continue
            ua = u1 + t_lo * (u2 - u1)
            ub = u1 + t_hi * (u2 - u1)
            u_min, u_max = min(ua, ub), max(ua, ub)
        if u_min <= center <= u_max:
            return 0.0
        best = min(best, center - u_max if u_max < center else u_min - center)
    if best is math.inf:
        raise GeometryError("polygon does not bound rectangle growth")
    return best


def _rect_contained(edges, polygon, x_lo, y_lo, x_hi, y_hi) -> bool:
    corners = ((x_lo, y_lo), (x_hi, y_lo), (x_hi, y_hi), (x_lo, y_hi))
    mx, my = (x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0
    probes = corners + ((mx, y_lo), (mx, y_hi), (x_lo, my), (x_hi, my), (mx, my))
    if any(not point_in_polygon(p, polygon) for p in probes):
        return False
    for i in range(4):
        p, q = corners[i], corners[(i + 1) % 4]
        for a, b in edges:
            if segments_intersect(p, q, a, b):
                return False
    return True


def grow_rectangle(boundary, anchor: Point, tol: float = 1e-6):
    """Maximal axis-aligned rectangle centred on `anchor` inside the polygon.

    Alternates exact per-axis growth (width first) until the increments
    drop below `tol`; each step backs off fractionally so the rectangle
    never touches the boundary. Returns (x_lo, y_lo, x_hi, y_hi).
    """
    polygon = tuple((float(x), float(y)) for x, y in boundary)
    if len(polygon) < 3:
        raise GeometryError("region polygon needs at least 3 vertices")
    anchor = (float(anchor[0]), float(anchor[1]))
    if not point_in_polygon(anchor, polygon) or (
        min_distance_to_boundary(anchor, polygon) <= 0.0
    ):
        raise GeometryError("rectangle anchor must lie strictly inside the polygon")
    edges = _iter_edges(polygon)

    hw = hh = 0.0
    for round_no in range(100):
        new_hw = _half_extent(edges, anchor, 0, hh) * _GROW_SHRINK
        new_hh = _half_extent(edges, anchor, 1, new_hw) * _GROW_SHRINK
        done = abs(new_hw - hw) <= tol and abs(new_hh - hh) <= tol
        hw, hh = new_hw, new_hh
        if done and round_no > 0:
            break

    ax, ay = anchor
    for _ in range(200):
        if _rect_contained(edges, polygon, ax - hw, ay - hh, ax + hw, ay + hh):
            return (ax - hw, ay - hh, ax + hw, ay + hh)
        hw *= 1.0 - 1e-7
        hh *= 1.0 - 1e-7
    raise GeometryError("could not certify rectangle containment")


# --------------------------------------------------------------- prune


def _route_segments(route) -> list[tuple[Point, Point]]:
    return [(a, b) for a, b in route.segments if a != b]


def _rect_segment_distance(x_lo, y_lo, x_hi, y_hi, a: Point, b: Point) -> float:
    if x_lo <= a[0] <= x_hi and y_lo <= a[1] <= y_hi:
        return 0.0
    if x_lo <= b[0] <= x_hi and y_lo <= b[1] <= y_hi:
        return 0.0
    corners = ((x_lo, y_lo), (x_hi, y_lo), (x_hi, y_hi), (x_lo, y_hi))
    return min(
        segment_segment_distance(corners[i], corners[(i + 1) % 4], a, b)
        for i in range(4)
    )


def _seg_array(routes) -> np.ndarray:
    """All non-degenerate leader segments as rows (x1, y1, x2, y2), x1 <= x2."""
    rows = []
    for rt in routes:
        for a, b in _route_segments(rt):
            if a[0] <= b[0]:
                rows.append((a[0], a[1], b[0], b[1]))
            else:
                rows.append((b[0], b[1], a[0], a[1]))
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def _band_bounds(segs: np.ndarray, anchor_y: float, x_lo: float, x_hi: float, d_b: float):
    """Effective y bounds from the leader segments overlapping [x_lo, x_hi]."""
    y_lo, y_hi = -math.inf, math.inf
    if segs.size == 0:
        return y_lo, y_hi
    x1, y1, x2, y2 = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    overlap = (x2 >= x_lo) & (x1 <= x_hi)
    if not overlap.any():
        return y_lo, y_hi
    x1, y1, x2, y2 = x1[overlap], y1[overlap], x2[overlap], y2[overlap]
    dx = x2 - x1
    dx = np.where(dx == 0.0, 1.0, dx)
    ta = np.clip((x_lo - x1) / dx, 0.0, 1.0)
    tb = np.clip((x_hi - x1) / dx, 0.0, 1.0)
    ya = y1 + ta * (y2 - y1)
    yb = y1 + tb * (y2 - y1)
    mn = np.minimum(ya, yb)
    mx = np.maximum(ya, yb)
    above = mn > anchor_y
    below = mx < anchor_y
    straddle = ~(above | below)
    if above.any() or straddle.any():
        y_hi = float(np.min(mn[above | straddle])) - d_b
    if below.any() or straddle.any():
        y_lo = float(np.max(mx[below | straddle])) + d_b
    return y_lo, y_hi


def prune_rectangle(rect, own_route, foreign_routes, d_b: float, region_id: str = "") -> SiteRect:
    """Shrink a grown rectangle until it clears the other leaders.

    The rectangle is scaled about the anchor (binary search on the scale
    factor) until its body keeps distance d_b from every foreign leader
    and the y interval carved out by the leaders passing over its x span
    still strictly contains the anchor. If even the anchor itself fails,
    the rect degenerates to the anchor point and the site is pinned.
    """
    if not d_b > 0:
        raise ValidationError("clearance d_b must be > 0")
    ax, ay = own_route.site
    x_lo, y_lo_r, x_hi, y_hi_r = (float(v) for v in rect)
    hw = min(ax - x_lo, x_hi - ax)
    hh = min(ay - y_lo_r, y_hi_r - ay)
    if hw < 0 or hh < 0:
        raise ValidationError("rectangle does not contain the route site")

    segs = _seg_array(foreign_routes)
    # candidate segments: anything that could come within d_b of the full
    # rect (bbox distance lower-bounds true distance, so the rest can be
    # ignored at every scale)
    if segs.size:
        gx = np.maximum(0.0, np.maximum(segs[:, 0] - (ax + hw), (ax - hw) - segs[:, 2]))
        sy_lo = np.minimum(segs[:, 1], segs[:, 3])
        sy_hi = np.maximum(segs[:, 1], segs[:, 3])
        gy = np.maximum(0.0, np.maximum(sy_lo - (ay + hh), (ay - hh) - sy_hi))
        near = np.hypot(gx, gy) <= d_b + 1e-9
        cand = [((segs[i, 0], segs[i, 1]), (segs[i, 2], segs[i, 3])) for i in np.nonzero(near)[0]]
        cand_arr = segs[near]
    else:
        cand = []
        cand_arr = segs

    def ok(t: float) -> bool:
        hwt, hht = hw * t, hh * t
        if t == 0.0:
            if any(point_segment_distance((ax, ay), a, b) < d_b for a, b in cand):
                return False
        else:
            for a, b in cand:
                if _rect_segment_distance(ax - hwt, ay - hht, ax + hwt, ay + hht, a, b) < d_b:
                    return False
        lo, hi = _band_bounds(cand_arr, ay, ax - hwt, ax + hwt, d_b)
        return lo < ay < hi

    if ok(1.0):
        t = 1.0
    elif not ok(0.0):
        return SiteRect(
            region_id=region_id,
            top_left=(ax, ay),
            bottom_right=(ax, ay),
            y_lo=-math.inf,
            y_hi=math.inf,
            margin=d_b,
            degenerate=True,
        )
    else:
        lo_t, hi_t = 0.0, 1.0
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo_t + hi_t)
            if ok(mid):
                lo_t = mid
            else:
                hi_t = mid
        t = lo_t

    hwt, hht = hw * t, hh * t
    y_lo, y_hi = _band_bounds(segs, ay, ax - hwt, ax + hwt, d_b)
    return SiteRect(
        region_id=region_id,
        top_left=(ax - hwt, ay - hht),
        bottom_right=(ax + hwt, ay + hht),
        y_lo=y_lo,
        y_hi=y_hi,
        margin=d_b,
    )


def _prune_all(routes, base_rects, d_b: float, region_ids, extra_foreign=()):
    """prune_rectangle for every route at once, bisecting in lockstep.

    Same predicate and same bisection schedule as the scalar routine,
    evaluated for all (region, candidate-segment) pairs in one vectorized
    pass per step instead of one Python call per pair.
    """
    if not d_b > 0:
        raise ValidationError("clearance d_b must be > 0")
    n = len(routes)
    seg_rows: list[tuple[float, float, float, float]] = []
    seg_owner: list[int] = []
    for ridx, rt in enumerate(list(routes) + list(extra_foreign)):
        for a, b in _route_segments(rt):
            if a[0] <= b[0]:
                seg_rows.append((a[0], a[1], b[0], b[1]))
            else:
                seg_rows.append((b[0], b[1], a[0], a[1]))
            seg_owner.append(ridx if ridx < n else -1)
    segs = np.asarray(seg_rows, dtype=float).reshape(-1, 4)
    owner = np.asarray(seg_owner, dtype=int)

    anchors = np.asarray([rt.site for rt in routes], dtype=float).reshape(n, 2)
    ax, ay = anchors[:, 0], anchors[:, 1]
    rect_arr = np.asarray(base_rects, dtype=float).reshape(n, 4)
    hw = np.minimum(ax - rect_arr[:, 0], rect_arr[:, 2] - ax)
    hh = np.minimum(ay - rect_arr[:, 1], rect_arr[:, 3] - ay)
    if (hw < 0).any() or (hh < 0).any():
        raise ValidationError("rectangle does not contain the route site")

    # candidate pairs: segments that could come within d_b of the full
    # rect, own leader excluded (bbox gap lower-bounds true distance)
    sx1, sy1, sx2, sy2 = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    sylo = np.minimum(sy1, sy2)
    syhi = np.maximum(sy1, sy2)
    gx = np.maximum(
        0.0,
        np.maximum(sx1[None, :] - (ax + hw)[:, None], (ax - hw)[:, None] - sx2[None, :]),
    )
    gy = np.maximum(
        0.0,
        np.maximum(sylo[None, :] - (ay + hh)[:, None], (ay - hh)[:, None] - syhi[None, :]),
    )
    near = (np.hypot(gx, gy) <= d_b + 1e-9) & (owner[None, :] != np.arange(n)[:, None])
    reg_idx, seg_idx = np.nonzero(near)
    p_total = len(reg_idx)

    px1, py1 = sx1[seg_idx], sy1[seg_idx]
    px2, py2 = sx2[seg_idx], sy2[seg_idx]
    pdx, pdy = px2 - px1, py2 - py1
    plen2 = pdx * pdx + pdy * pdy
    pax, pay = ax[reg_idx], ay[reg_idx]
    phw, phh = hw[reg_idx], hh[reg_idx]
    dxs = np.where(pdx == 0.0, 1.0, pdx)
    dys = np.where(pdy == 0.0, 1.0, pdy)
    in_x1 = np.zeros(p_total, dtype=bool)  # scratch reused below

    starts = np.searchsorted(reg_idx, np.arange(n))
    counts = np.diff(np.append(starts, p_total))
    has = counts > 0
    red_at = np.minimum(starts, max(p_total - 1, 0))

    def group_min(values, empty):
        if p_total == 0:
            return np.full(n, empty)
        out = np.minimum.reduceat(values, red_at)
        out[~has] = empty
        return out

    def group_max(values, empty):
        if p_total == 0:
            return np.full(n, empty)
        out = np.maximum.reduceat(values, red_at)
        out[~has] = empty
        return out

    def group_any(flags):
        if p_total == 0:
            return np.zeros(n, dtype=bool)
        out = np.add.reduceat(flags.astype(np.int64), red_at) > 0
        out[~has] = False
        return out

    def ok_vec(t):
        tp = t[reg_idx]
        xl, xh = pax - phw * tp, pax + phw * tp
        yl, yh = pay - phh * tp, pay + phh * tp

        # rect/segment contact: endpoint inside, or slab-clip crossing
        in1 = (xl <= px1) & (px1 <= xh) & (yl <= py1) & (py1 <= yh)
        in2 = (xl <= px2) & (px2 <= xh) & (yl <= py2) & (py2 <= yh)
        np.logical_and((px1 >= xl), (px1 <= xh), out=in_x1)
        tx0 = np.where(pdx > 0, (xl - px1) / dxs, np.where(in_x1, -np.inf, np.inf))
        tx1 = np.where(pdx > 0, (xh - px1) / dxs, np.where(in_x1, np.inf, -np.inf))
        in_y1 = (py1 >= yl) & (py1 <= yh)
        tya = (yl - py1) / dys
        tyb = (yh - py1) / dys
        ty0 = np.where(pdy != 0, np.minimum(tya, tyb), np.where(in_y1, -np.inf, np.inf))
        ty1 = np.where(pdy != 0, np.maximum(tya, tyb), np.where(in_y1, np.inf, -np.inf))
        t0 = np.maximum(np.maximum(tx0, ty0), 0.0)
        t1 = np.minimum(np.minimum(tx1, ty1), 1.0)
        hit = in1 | in2 | (t0 <= t1)

        # distance elsewhere: min over rect corners to the segment and
        # segment endpoints to the rect (exact for disjoint convex pair)
        d2 = np.full(p_total, np.inf)
        for cx, cy in ((xl, yl), (xh, yl), (xh, yh), (xl, yh)):
            tt = np.clip(((cx - px1) * pdx + (cy - py1) * pdy) / plen2, 0.0, 1.0)
            qx = px1 + tt * pdx - cx
            qy = py1 + tt * pdy - cy
            d2 = np.minimum(d2, qx * qx + qy * qy)
        for ex, ey in ((px1, py1), (px2, py2)):
            ddx = np.maximum(0.0, np.maximum(xl - ex, ex - xh))
            ddy = np.maximum(0.0, np.maximum(yl - ey, ey - yh))
            d2 = np.minimum(d2, ddx * ddx + ddy * ddy)
        viol = hit | (d2 < d_b * d_b)

        # band bounds over the x-span, as in _band_bounds
        ovl = (px2 >= xl) & (px1 <= xh)
        ta = np.clip((xl - px1) / dxs, 0.0, 1.0)
        tb = np.clip((xh - px1) / dxs, 0.0, 1.0)
        ya = py1 + ta * pdy
        yb = py1 + tb * pdy
        mn = np.minimum(ya, yb)
        mx = np.maximum(ya, yb)
        above = mn > pay
        below = mx < pay
        strad = ~(above | below)
        hi_c = np.where(ovl & (above | strad), mn, np.inf)
        lo_c = np.where(ovl & (below | strad), mx, -np.inf)
        y_hi = group_min(hi_c, np.inf) - d_b
        y_lo = group_max(lo_c, -np.inf) + d_b
        return ~group_any(viol) & (y_lo < ay) & (ay < y_hi)

    ok1 = ok_vec(np.ones(n))
    ok0 = ok_vec(np.zeros(n))
    degenerate = ~ok0
    active = ~ok1 & ok0
    t_lo = np.zeros(n)
    if active.any():
        t_hi = np.ones(n)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (t_lo + t_hi)
            okm = ok_vec(mid)
            t_lo = np.where(active & okm, mid, t_lo)
            t_hi = np.where(active & ~okm, mid, t_hi)
    t_fin = np.where(ok1, 1.0, t_lo)

    out: list[SiteRect] = []
    for i in range(n):
        rid = region_ids[i]
        if degenerate[i]:
            out.append(
                SiteRect(
                    region_id=rid,
                    top_left=(float(ax[i]), float(ay[i])),
                    bottom_right=(float(ax[i]), float(ay[i])),
                    y_lo=-math.inf,
                    y_hi=math.inf,
                    margin=d_b,
                    degenerate=True,
                )
            )
            continue
        hwt = float(hw[i] * t_fin[i])
        hht = float(hh[i] * t_fin[i])
        axi, ayi = float(ax[i]), float(ay[i])
        y_lo, y_hi = _band_bounds(segs[owner != i], ayi, axi - hwt, axi + hwt, d_b)
        out.append(
            SiteRect(
                region_id=rid,
                top_left=(axi - hwt, ayi - hht),
                bottom_right=(axi + hwt, ayi + hht),
                y_lo=y_lo,
                y_hi=y_hi,
                margin=d_b,
            )
        )
    return out


# --------------------------------------------------------------- build


def _recover_k(routes) -> float:
    for r in routes:
        dx = r.bend[0] - r.site[0]
        dy = abs(r.bend[1] - r.site[1])
        if dx > 1e-12 and dy > 1e-12:
            return dy / dx
    return 1.0


def _eff_y_bounds(sr: SiteRect) -> tuple[float, float]:
    if sr.degenerate:
        return sr.top_left[1], sr.top_left[1]
    lo = max(sr.top_left[1], sr.y_lo)
    hi = min(sr.bottom_right[1], sr.y_hi)
    return lo, hi


def build_program(routes, rects, bands, separators, config: RefinementConfig, *, k: float | None = None):
    """Assemble the separation program.

    Variables are the site coordinates plus one separation variable per
    adjacent same-band leader pair. The objective pulls sites toward
    their anchors and separations toward the largest initial separation;
    the rows keep sites inside their rectangles and clearances, preserve
    each leader's gradient sign and reach, keep bands behind their
    separator lines, and pin the order of any cross-band pair that the
    interval analysis cannot prove safe.
    """
    routes = list(routes)
    rects = list(rects)
    if not routes:
        raise ValidationError("no routes to refine")
    if len(rects) != len(routes):
        raise ValidationError("one rectangle per route is required")
    kv = float(k) if k is not None else _recover_k(routes)
    if not kv > 0:
        raise ValidationError("leader gradient k must be > 0")

    n = len(routes)
    anchors = [r.site for r in routes]
    levels = [float(r.port.position[1]) for r in routes]
    signs = [r.gradient_sign for r in routes]
    s2 = math.hypot(kv, 1.0)

    lx = tuple(2 * i for i in range(n))
    ly = tuple(2 * i + 1 for i in range(n))

    def line_c(i: int, sign: str) -> float:
        x0, y0 = anchors[i]
        return y0 - kv * x0 if sign == "up" else y0 + kv * x0

    # adjacency within a band follows the order of the parallel diagonal
    # lines themselves (the line intercepts at the anchors), so every
    # initial separation is >= 0 and the floor genuinely means "preserve
    # the current order"; port order can disagree with line order when an
    # earlier leader flattens out before a later one is born
    pairs: list[tuple[int, int]] = []
    pair_signs: list[str] = []
    band_rank: dict[int, int] = {}
    for band in bands:
        idxs = sorted(
            band.route_indices,
            key=lambda i: (line_c(i, band.sign), routes[i].port.position[1]),
        )
        for rank, i in enumerate(idxs):
            band_rank[i] = rank
        for a, b in zip(idxs, idxs[1:]):
            pairs.append((a, b))
            pair_signs.append(band.sign)
    dvar = tuple(2 * n + p for p in range(len(pairs)))
    nv = 2 * n + len(pairs)

    initial_d = [
        (line_c(b, sgn) - line_c(a, sgn)) / s2 for (a, b), sgn in zip(pairs, pair_signs)
    ]
    D = max(initial_d) if initial_d else 0.0

    Q = np.zeros((nv, nv))
    cvec = np.zeros(nv)
    for i in range(n):
        Q[lx[i], lx[i]] = 2.0
        Q[ly[i], ly[i]] = 2.0
        cvec[lx[i]] = -2.0 * anchors[i][0]
        cvec[ly[i]] = -2.0 * anchors[i][1]
    for p in range(len(pairs)):
        Q[dvar[p], dvar[p]] = 2.0 * config.w
        cvec[dvar[p]] = -2.0 * config.w * D
    x0 = np.zeros(nv)
    for i in range(n):
        x0[lx[i]], x0[ly[i]] = anchors[i]
    for p, dv in enumerate(initial_d):
        x0[dvar[p]] = dv

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    labels: list[str] = []

    def add(coeffs: dict[int, float], bound: float, label: str) -> None:
        row = np.zeros(nv)
        for idx, val in coeffs.items():
            row[idx] += val
        rows.append(row)
        rhs.append(bound)
        labels.append(label)

    # separation definitions (opposing pair -> equality) and floors
    for p, ((a, b), sgn) in enumerate(zip(pairs, pair_signs)):
        kk = kv / s2
        if sgn == "up":
            co = {dvar[p]: 1.0, ly[b]: -1.0 / s2, lx[b]: kk, ly[a]: 1.0 / s2, lx[a]: -kk}
        else:
            co = {dvar[p]: 1.0, ly[b]: -1.0 / s2, lx[b]: -kk, ly[a]: 1.0 / s2, lx[a]: kk}
        add(co, 0.0, f"sep-def+:{a}-{b}")
        add({i: -v for i, v in co.items()}, 0.0, f"sep-def-:{a}-{b}")
        add({dvar[p]: -1.0}, -config.epsilon_order, f"sep-floor:{a}-{b}")

    # movement rectangles / pinning, clearance bands, gradient, reach
    for i in range(n):
        sr = rects[i]
        axv, ayv = anchors[i]
        if sr.degenerate:
            add({lx[i]: 1.0}, axv, f"pin-x+:{i}")
            add({lx[i]: -1.0}, -axv, f"pin-x-:{i}")
            add({ly[i]: 1.0}, ayv, f"pin-y+:{i}")
            add({ly[i]: -1.0}, -ayv, f"pin-y-:{i}")
        else:
            add({lx[i]: -1.0}, -sr.top_left[0], f"rect-x-lo:{i}")
            add({lx[i]: 1.0}, sr.bottom_right[0], f"rect-x-hi:{i}")
            add({ly[i]: -1.0}, -sr.top_left[1], f"rect-y-lo:{i}")
            add({ly[i]: 1.0}, sr.bottom_right[1], f"rect-y-hi:{i}")
            if math.isfinite(sr.y_lo):
                add({ly[i]: -1.0}, -sr.y_lo, f"clearance-y-lo:{i}")
            if math.isfinite(sr.y_hi):
                add({ly[i]: 1.0}, sr.y_hi, f"clearance-y-hi:{i}")
        lv = levels[i]
        px = float(routes[i].port.position[0])
        if signs[i] == "up":
            add({ly[i]: 1.0}, lv, f"gradient:{i}")
            add({ly[i]: -1.0, lx[i]: kv}, kv * px - lv, f"reach:{i}")
        else:
            add({ly[i]: -1.0}, -lv, f"gradient:{i}")
            add({ly[i]: 1.0, lx[i]: kv}, kv * px + lv, f"reach:{i}")

    # band separator lines
    for s_idx, y_c in enumerate(separators):
        lower = bands[s_idx].route_indices
        upper = bands[s_idx + 1].route_indices
        gap = min(anchors[j][1] for j in upper) - max(anchors[i][1] for i in lower)
        if gap <= 0:
            continue
        eff = min(config.d_lc, gap / 2.0)
        for i in lower:
            add({ly[i]: 1.0}, y_c - eff, f"band-line:{i}:{s_idx}")
        for j in upper:
            add({ly[j]: -1.0}, -(y_c + eff), f"band-line:{j}:{s_idx}")

    # every remaining pair must provably stay crossing-free: same-band
    # pairs whose level order matches the (floor-preserved) line order are
    # safe pointwise, as are cross-band pairs whose value ranges cannot
    # meet; everything else gets its anchor-time order pinned
    eff_bounds = [_eff_y_bounds(sr) for sr in rects]
    band_of: dict[int, int] = {}
    for bi, band in enumerate(bands):
        for i in band.route_indices:
            band_of[i] = bi
    for i in range(n):
        for j in range(i + 1, n):
            if band_of[i] == band_of[j]:
                a, b = (i, j) if band_rank[i] < band_rank[j] else (j, i)
                if levels[a] < levels[b]:
                    continue  # line order and level order agree
                _add_order_pin(add, kv, anchors, levels, signs, lx, ly, i, j, config)
                continue
            p, q = (i, j) if levels[i] < levels[j] else (j, i)
            sp, sq = signs[p], signs[q]
            if sp == "up" and sq == "down":
                continue  # ranges split by the two fixed levels
            if sp == "up" and sq == "up" and levels[p] < eff_bounds[q][0]:
                continue
            if sp == "down" and sq == "down" and eff_bounds[p][1] < levels[q]:
                continue
            if sp == "down" and sq == "up" and eff_bounds[p][1] < eff_bounds[q][0]:
                continue
            _add_order_pin(add, kv, anchors, levels, signs, lx, ly, p, q, config)

    A = np.vstack(rows) if rows else np.zeros((0, nv))
    prog = QpProblem(Q=Q, c=cvec, A=A, b=np.asarray(rhs), x0=x0)
    vmap = VariableMap(
        lx=lx,
        ly=ly,
        d=dvar,
        pairs=tuple(pairs),
        pair_signs=tuple(pair_signs),
        initial_d=tuple(initial_d),
        D=D,
        k=kv,
        row_labels=tuple(labels),
    )
    return prog, vmap


def _add_order_pin(add, kv, anchors, levels, signs, lx, ly, i, j, config) -> None:
    """Freeze the anchor-time vertical order of a cross-band pair.

    Three rows: the earlier-born site stays earlier, the later site's x
    stays on the anchor-time side of the earlier leader's bend, and the
    earlier leader's value at the later site's x (affine in the variables
    once the branch is fixed) stays a margin away from the later site on
    its anchor-time side.
    """
    if anchors[i][0] <= anchors[j][0]:
        e, l = i, j
    else:
        e, l = j, i
    xe, ye = anchors[e]
    xl, yl = anchors[l]
    lv_e = levels[e]
    se = signs[e]
    bend_e = xe + abs(lv_e - ye) / kv
    use_diag = xl < bend_e
    if use_diag:
        f0 = ye + kv * (xl - xe) if se == "up" else ye - kv * (xl - xe)
    else:
        f0 = lv_e
    g0 = f0 - yl
    if g0 == 0.0:
        raise ValidationError(f"leaders {i} and {j} touch at the anchors")
    delta = min(config.epsilon_order, abs(g0) / 2.0)
    tag = f"{i}-{j}"

    add({lx[e]: 1.0, lx[l]: -1.0}, 0.0, f"pin-order:{tag}")
    if use_diag:
        if se == "up":
            add({lx[l]: 1.0, lx[e]: -1.0, ly[e]: 1.0 / kv}, lv_e / kv, f"pin-branch:{tag}")
            f_co, f_const = {ly[e]: 1.0, lx[l]: kv, lx[e]: -kv}, 0.0
        else:
            add({lx[l]: 1.0, lx[e]: -1.0, ly[e]: -1.0 / kv}, -lv_e / kv, f"pin-branch:{tag}")
            f_co, f_const = {ly[e]: 1.0, lx[l]: -kv, lx[e]: kv}, 0.0
    else:
        if se == "up":
            add({lx[l]: -1.0, lx[e]: 1.0, ly[e]: -1.0 / kv}, -lv_e / kv, f"pin-branch:{tag}")
        else:
            add({lx[l]: -1.0, lx[e]: 1.0, ly[e]: 1.0 / kv}, lv_e / kv, f"pin-branch:{tag}")
        f_co, f_const = {}, lv_e
    if g0 < 0:
        co = dict(f_co)
        co[ly[l]] = co.get(ly[l], 0.0) - 1.0
        add(co, -delta - f_const, f"pin-value:{tag}")
    else:
        co = {idx: -v for idx, v in f_co.items()}
        co[ly[l]] = co.get(ly[l], 0.0) + 1.0
        add(co, -delta + f_const, f"pin-value:{tag}")


# --------------------------------------------------------------- refine


def _pair_separation(site_a: Point, site_b: Point, sign: str, kv: float) -> float:
    if sign == "up":
        ca = site_a[1] - kv * site_a[0]
        cb = site_b[1] - kv * site_b[0]
    else:
        ca = site_a[1] + kv * site_a[0]
        cb = site_b[1] + kv * site_b[0]
    return (cb - ca) / math.hypot(kv, 1.0)


def refine(
    routes,
    regions,
    config: RefinementConfig,
    *,
    labelling: LabellingConfig | None = None,
    k: float | None = None,
    tol: float = 1e-8,
    diagnostics=None,
    extra_foreign_routes=(),
) -> RefinedLayoutDelta:
    """Nudge sites to even out leader separations, provably crossing-free.

    Routes and regions are index-aligned; the current route sites are the
    anchors. Returns the refined sites with re-routed leaders; when the
    program is infeasible (or exceeds its iteration budget) the anchor
    layout is returned with used_fallback set and the clashing row named.
    `extra_foreign_routes` are leaders from another edge of the same figure
    that sites must keep clear of but that are not themselves refined.
    `diagnostics`, when given, receives one JSON line describing the pass.
    """
    routes = list(routes)
    regions = list(regions)
    extra_foreign = list(extra_foreign_routes)
    if not routes:
        raise ValidationError("nothing to refine")
    if len(regions) != len(routes):
        raise ValidationError("routes and regions must be index-aligned")
    clashes = verify_crossing_free(routes)
    if clashes:
        raise ValidationError(f"input layout has crossing leaders: {clashes[:3]}")

    if labelling is not None:
        kv = labelling.k
        lab = labelling
    else:
        kv = float(k) if k is not None else _recover_k(routes)
        lab = LabellingConfig(k=kv)

    bases = [grow_rectangle(rg.boundary, rt.site) for rt, rg in zip(routes, regions)]
    rects = _prune_all(
        routes,
        bases,
        config.d_b,
        [rg.id for rg in regions],
        extra_foreign=extra_foreign,
    )

    bands, separators = partition_bands(routes)
    prog, vmap = build_program(routes, rects, bands, separators, config, k=kv)
    res = solve(prog, tol=tol)

    anchors = tuple(r.site for r in routes)
    pinned = tuple(sr.region_id for sr in rects if sr.degenerate)
    region_ids = tuple(rg.id for rg in regions)

    def finish(sites, out_routes, status, used_fallback, damping, clashed):
        dvals = tuple(
            _pair_separation(sites[a], sites[b], sgn, kv)
            for (a, b), sgn in zip(vmap.pairs, vmap.pair_signs)
        )
        pcentre = sum(
            (s[0] - a[0]) ** 2 + (s[1] - a[1]) ** 2 for s, a in zip(sites, anchors)
        )
        psep = sum((dv - vmap.D) ** 2 for dv in dvals)
        delta = RefinedLayoutDelta(
            region_ids=region_ids,
            sites=tuple(sites),
            routes=tuple(out_routes),
            pairs=vmap.pairs,
            d=dvals,
            initial_d=vmap.initial_d,
            D=vmap.D,
            pcentre=pcentre,
            psep=psep,
            objective=pcentre + config.w * psep,
            status=status,
            iterations=res.iterations,
            used_fallback=used_fallback,
            damping=damping,
            clashed=tuple(clashed),
            pinned=pinned,
        )
        if diagnostics is not None:
            diagnostics.write(
                json.dumps(
                    {
                        "status": delta.status,
                        "used_fallback": delta.used_fallback,
                        "damping": delta.damping,
                        "iterations": delta.iterations,
                        "pcentre": delta.pcentre,
                        "psep": delta.psep,
                        "objective": delta.objective,
                        "D": delta.D,
                        "d": list(delta.d),
                        "initial_d": list(delta.initial_d),
                        "pinned": list(delta.pinned),
                        "clashed": list(delta.clashed),
                    }
                )
                + "\n"
            )
        return delta

    if res.status != "optimal":
        if res.certificate_row is not None:
            clashed = [vmap.row_labels[res.certificate_row]]
        else:
            clashed = ["unresolved constraint set"]
        return finish(anchors, routes, res.status, True, 0.0, clashed)

    target = [
        (float(res.x[vmap.lx[i]]), float(res.x[vmap.ly[i]])) for i in range(len(routes))
    ]
    lam = 1.0
    for _ in range(40):
        if lam <= 1e-9:
            break
        sites = [
            (a[0] + lam * (t[0] - a[0]), a[1] + lam * (t[1] - a[1]))
            for a, t in zip(anchors, target)
        ]
        try:
            new_routes = [route_leader(site, routes[i].port, lab) for i, site in enumerate(sites)]
        except (SteepLeaderError, ValidationError):
            lam *= 0.5
            continue
        if not verify_crossing_free(new_routes):
            return finish(sites, new_routes, "optimal", lam < 1.0, lam, [])
        lam *= 0.5
    return finish(anchors, routes, "optimal", True, 0.0, ["damping exhausted"])
