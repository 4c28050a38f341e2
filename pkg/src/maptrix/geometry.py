"""Plain 2D primitives used throughout the layout pipeline.

Points are (x, y) tuples, polygons are lists of (x, y) vertices without a
repeated closing vertex. Everything here is exact in the sense of using
orientation predicates on float arithmetic directly; no tolerance is applied
unless a function takes one explicitly.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

Point = tuple[float, float]

__all__ = [
    "orientation",
    "on_segment",
    "segments_intersect",
    "segment_intersection_excl_shared_endpoint",
    "point_segment_distance",
    "segment_segment_distance",
    "point_in_polygon",
    "polygon_area",
    "polygon_centroid",
    "polygon_is_simple",
    "polygon_bbox",
    "min_distance_to_boundary",
    "pole_of_inaccessibility",
    "clip_segment_to_band",
]


def orientation(a: Point, b: Point, c: Point) -> int:
    """Sign of the cross product (b-a) x (c-a): 1 ccw, -1 cw, 0 collinear."""
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def on_segment(p: Point, a: Point, b: Point) -> bool:
    """True if p lies on segment ab, assuming a, b, p collinear."""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Exact segment-segment intersection test, endpoints included."""
    d1 = orientation(q1, q2, p1)
    d2 = orientation(q1, q2, p2)
    d3 = orientation(p1, p2, q1)
    d4 = orientation(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and on_segment(p1, q1, q2):
        return True
    if d2 == 0 and on_segment(p2, q1, q2):
        return True
    if d3 == 0 and on_segment(q1, p1, p2):
        return True
    if d4 == 0 and on_segment(q2, p1, p2):
        return True
    return False


def _is_zero_length(a: Point, b: Point) -> bool:
    return a[0] == b[0] and a[1] == b[1]


def segment_intersection_excl_shared_endpoint(
    p1: Point, p2: Point, q1: Point, q2: Point
) -> bool:
    """Intersection test that ignores contact at a shared endpoint.

    A touch that is exactly one endpoint of each segment at identical
    coordinates does not count; any other contact (proper crossing, T-contact,
    collinear overlap) does. Zero-length segments never intersect anything.
    """
    if _is_zero_length(p1, p2) or _is_zero_length(q1, q2):
        return False
    if not segments_intersect(p1, p2, q1, q2):
        return False
    shared = [
        p for p in (p1, p2) for q in (q1, q2) if p[0] == q[0] and p[1] == q[1]
    ]
    if len(shared) != 1:
        # no shared endpoint, or segments are identical: count as crossing
        return len(shared) == 0
    s = shared[0]
    # contact only at the shared endpoint? check the other three endpoints
    # are strictly off the opposite segment
    others_p = [p for p in (p1, p2) if p != s]
    others_q = [q for q in (q1, q2) if q != s]
    for p in others_p:
        if orientation(q1, q2, p) == 0 and on_segment(p, q1, q2):
            return True
    for q in others_q:
        if orientation(p1, p2, q) == 0 and on_segment(q, p1, p2):
            return True
    return False


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Euclidean distance from p to segment ab."""
    vx, vy = b[0] - a[0], b[1] - a[1]
    wx, wy = p[0] - a[0], p[1] - a[1]
    seg_len2 = vx * vx + vy * vy
    if seg_len2 <= 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / seg_len2
    t = max(0.0, min(1.0, t))
    return math.hypot(wx - t * vx, wy - t * vy)


def segment_segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> float:
    """Euclidean distance between two segments (0 if they intersect)."""
    if segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        point_segment_distance(p1, q1, q2),
        point_segment_distance(p2, q1, q2),
        point_segment_distance(q1, p1, p2),
        point_segment_distance(q2, p1, p2),
    )


def point_in_polygon(p: Point, polygon: Sequence[Point]) -> bool:
    """Crossing-number test. Points exactly on the boundary count as inside."""
    x, y = p
    inside = False
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if orientation((ax, ay), (bx, by), p) == 0 and on_segment(
            p, (ax, ay), (bx, by)
        ):
            return True
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x_cross > x:
                inside = not inside
    return inside


def polygon_area(polygon: Sequence[Point]) -> float:
    """Signed shoelace area (positive for counter-clockwise vertex order)."""
    total = 0.0
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        total += ax * by - bx * ay
    return total / 2.0


def polygon_centroid(polygon: Sequence[Point]) -> Point:
    """Area-weighted centroid; falls back to vertex mean for zero area."""
    a = polygon_area(polygon)
    if abs(a) < 1e-12:
        xs = sum(p[0] for p in polygon) / len(polygon)
        ys = sum(p[1] for p in polygon) / len(polygon)
        return (xs, ys)
    cx = cy = 0.0
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    return (cx / (6.0 * a), cy / (6.0 * a))


def polygon_is_simple(polygon: Sequence[Point]) -> bool:
    """True when no two non-adjacent edges intersect and no edge degenerates."""
    n = len(polygon)
    if n < 3:
        return False
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for a, b in edges:
        if _is_zero_length(a, b):
            return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex by construction
            if segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_bbox(polygon: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    return (min(xs), min(ys), max(xs), max(ys))


def min_distance_to_boundary(p: Point, polygon: Sequence[Point]) -> float:
    n = len(polygon)
    return min(
        point_segment_distance(p, polygon[i], polygon[(i + 1) % n])
        for i in range(n)
    )


def pole_of_inaccessibility(polygon: Sequence[Point]) -> Point:
    """Grid-sampled interior point farthest from the boundary.

    Samples a regular grid at 1% of the bounding-box diagonal and returns the
    inside sample with maximal clearance; ties broken by (y, x) so the result
    is deterministic.
    """
    x0, y0, x1, y1 = polygon_bbox(polygon)
    diag = math.hypot(x1 - x0, y1 - y0)
    step = diag * 0.01
    if step <= 0.0:
        return polygon[0]
    best: Point | None = None
    best_clear = -1.0
    ny = int((y1 - y0) / step) + 1
    nx = int((x1 - x0) / step) + 1
    for iy in range(ny + 1):
        y = y0 + iy * step
        for ix in range(nx + 1):
            x = x0 + ix * step
            if not point_in_polygon((x, y), polygon):
                continue
            clear = min_distance_to_boundary((x, y), polygon)
            if clear > best_clear:
                best_clear = clear
                best = (x, y)
    if best is None:
        # extremely thin polygon: fall back to the midpoint of the first edge
        a, b = polygon[0], polygon[1]
        return ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    return best


def clip_segment_to_band(
    a: Point, b: Point, lo: float, hi: float, axis: int
) -> tuple[Point, Point] | None:
    """Clip segment ab to lo <= coord[axis] <= hi; None if disjoint."""
    ca, cb = a[axis], b[axis]
    if ca > cb:
        a, b = b, a
        ca, cb = cb, ca
    if cb < lo or ca > hi:
        return None
    def lerp(t: float) -> Point:
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    t0 = 0.0 if ca >= lo else (lo - ca) / (cb - ca)
    t1 = 1.0 if cb <= hi else (hi - ca) / (cb - ca)
    return (lerp(t0), lerp(t1))


def iter_edges(polygon: Sequence[Point]) -> Iterable[tuple[Point, Point]]:
    n = len(polygon)
    for i in range(n):
        yield polygon[i], polygon[(i + 1) % n]
