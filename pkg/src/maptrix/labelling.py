"""One-sided boundary labelling: match map sites to matrix ports and
route each leader as a fixed-gradient diagonal followed by a horizontal
run into the port.

The port assignment is computed against a conservative crossing test
that treats every horizontal run as a ray extending right to infinity.
An assignment that is crossing-free under this test stays crossing-free
for any actual port x placed at or beyond each leader's bend, which is
what lets the matrix later be positioned (or widened) freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSiteError,
    LayoutError,
    SteepLeaderError,
    ValidationError,
)
from .geometry import segment_intersection_excl_shared_endpoint, segments_intersect

Point = tuple[float, float]

ORIGIN_EDGE = "origin-edge"
DEST_EDGE = "destination-edge"


@dataclass(frozen=True)
class Port:
    """A leader endpoint on one of the matrix's left-facing edges."""

    index: int
    position: Point
    side: str = ORIGIN_EDGE


@dataclass(frozen=True)
class LabellingConfig:
    k: float = 1.0
    port_spacing: float = 12.0
    port_line_x: float = 480.0

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValidationError("leader gradient k must be > 0")
        if not self.port_spacing > 0:
            raise ValidationError("port spacing must be > 0")


@dataclass(frozen=True)
class LeaderRoute:
    """site --diagonal(slope +-k)--> bend --horizontal--> port."""

    site: Point
    bend: Point
    port: Port
    gradient_sign: str  # "up" | "down"

    @property
    def segments(self) -> tuple[tuple[Point, Point], tuple[Point, Point]]:
        return ((self.site, self.bend), (self.bend, self.port.position))

    @property
    def polyline(self) -> tuple[Point, Point, Point]:
        return (self.site, self.bend, self.port.position)


@dataclass(frozen=True)
class Band:
    """A maximal run of consecutive ports whose leaders share a sign."""

    sign: str
    route_indices: tuple[int, ...]


def route_leader(site: Point, port: Port, config: LabellingConfig) -> LeaderRoute:
    """Route one leader; horizontal sites collapse to a straight run."""
    sx, sy = float(site[0]), float(site[1])
    px, py = port.position
    dx = px - sx
    if dx <= 0:
        raise ValidationError(
            f"site x={sx} must lie strictly left of port x={px}"
        )
    dy = py - sy
    if dy == 0.0:
        return LeaderRoute(site=(sx, sy), bend=(px, py), port=port, gradient_sign="up")
    run = abs(dy) / config.k
    if run > dx:
        raise SteepLeaderError(
            f"leader from ({sx}, {sy}) to port at ({px}, {py}) needs "
            f"gradient >= {abs(dy) / dx:.6g} (configured k={config.k:g})",
            min_feasible_k=abs(dy) / dx,
        )
    return LeaderRoute(
        site=(sx, sy),
        bend=(sx + run, py),
        port=port,
        gradient_sign="up" if sy < py else "down",
    )


def verify_crossing_free(routes) -> list[tuple[int, int]]:
    """All pairs whose polylines intersect (shared endpoints excluded).

    Segment pairs are screened with vectorized orientation tests; a pair
    with a strict interior crossing is recorded directly, and only pairs
    with a degenerate contact (some orientation exactly zero, meaning an
    endpoint touch or collinear overlap is possible) fall back to the
    exact scalar test with its shared-endpoint exclusion.
    """
    routes = list(routes)
    if len(routes) < 2:
        return []
    rid_list: list[int] = []
    seg_list: list[tuple[float, float, float, float]] = []
    for idx, rt in enumerate(routes):
        for a, b in rt.segments:
            if a != b:
                rid_list.append(idx)
                seg_list.append((a[0], a[1], b[0], b[1]))
    if len(seg_list) < 2:
        return []
    rid = np.asarray(rid_list)
    segs = np.asarray(seg_list, dtype=float)
    ii, jj = np.triu_indices(len(seg_list), 1)
    keep = rid[ii] != rid[jj]
    ii, jj = ii[keep], jj[keep]
    p1, p2 = segs[ii, 0:2], segs[ii, 2:4]
    q1, q2 = segs[jj, 0:2], segs[jj, 2:4]

    def _orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
            c[:, 0] - a[:, 0]
        )

    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (
        ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
    )
    touchy = ~proper & ((d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0))

    found: set[tuple[int, int]] = set()
    for pos in np.nonzero(proper)[0]:
        a, b = int(rid[ii[pos]]), int(rid[jj[pos]])
        found.add((a, b) if a < b else (b, a))
    for pos in np.nonzero(touchy)[0]:
        sa = seg_list[int(ii[pos])]
        sb = seg_list[int(jj[pos])]
        if segment_intersection_excl_shared_endpoint(
            (sa[0], sa[1]), (sa[2], sa[3]), (sb[0], sb[1]), (sb[2], sb[3])
        ):
            a, b = int(rid[ii[pos]]), int(rid[jj[pos]])
            found.add((a, b) if a < b else (b, a))
    return sorted(found)


def _routes_cross(a: LeaderRoute, b: LeaderRoute) -> bool:
    for sa1, sa2 in a.segments:
        for sb1, sb2 in b.segments:
            if segment_intersection_excl_shared_endpoint(sa1, sa2, sb1, sb2):
                return True
    return False


def _virtual_bend(site: Point, port_y: float, k: float) -> Point:
    return (site[0] + abs(port_y - site[1]) / k, port_y)


def _diag_hits_ray(site: Point, bend: Point, ray_start: Point) -> bool:
    """Does the diagonal cross the rightward ray from ray_start?"""
    yr = ray_start[1]
    lo, hi = min(site[1], bend[1]), max(site[1], bend[1])
    if not lo <= yr <= hi:
        return False
    if bend[1] == site[1]:
        return site[0] >= ray_start[0]
    x_at = site[0] + (bend[0] - site[0]) * (yr - site[1]) / (bend[1] - site[1])
    return x_at >= ray_start[0]


def conservative_cross(
    site_a: Point, port_y_a: float, site_b: Point, port_y_b: float, k: float
) -> bool:
    """Crossing test with horizontal runs widened to infinite rays.

    A superset of real crossings for every valid port x, so a zero count
    here implies crossing-freeness of the routed leaders.
    """
    bend_a = _virtual_bend(site_a, port_y_a, k)
    bend_b = _virtual_bend(site_b, port_y_b, k)
    if segments_intersect(site_a, bend_a, site_b, bend_b):
        return True
    return _diag_hits_ray(site_b, bend_b, bend_a) or _diag_hits_ray(
        site_a, bend_a, bend_b
    )


def _level_cross(
    site_a: Point, port_y_a: float, site_b: Point, port_y_b: float, k: float
) -> bool:
    """O(1) equivalent of conservative_cross for distinct port levels.

    The vertical difference of two paths (one diagonal, then flat) is
    weakly monotone in x, so they meet somewhere iff the difference at the
    later site's x is zero or disagrees in sign with the level difference.
    """
    if site_a[0] < site_b[0]:
        d0 = _path_y(site_a, port_y_a, k, site_b[0]) - site_b[1]
    else:
        d0 = site_a[1] - _path_y(site_b, port_y_b, k, site_a[0])
    if d0 == 0.0:
        return True
    return (d0 > 0.0) != (port_y_a > port_y_b)


def assign_ports(sites, ports, config: LabellingConfig) -> list[int]:
    """Match each site to a port so the routed leaders cannot cross.

    Returns result[i] = index into ports for sites[i]. Starts from the
    y-sorted matching and repairs with adjacent swaps; if the swap repair
    stalls, falls back to a recursive leftmost-site splitting construction
    that always yields a crossing-free matching.
    """
    sites = [(float(x), float(y)) for x, y in sites]
    ports = list(ports)
    if len(sites) != len(ports):
        raise ValidationError(f"{len(sites)} sites vs {len(ports)} ports")
    n = len(sites)
    if n == 0:
        return []
    if len(set(sites)) != n:
        dupes = sorted({s for s in sites if sites.count(s) > 1})
        raise DegenerateSiteError(f"coincident sites: {dupes}")
    min_port_x = min(p.position[0] for p in ports)
    if any(s[0] >= min_port_x for s in sites):
        raise ValidationError("every site must lie strictly left of the ports")

    port_rank = sorted(range(n), key=lambda j: ports[j].position[1])
    port_y = [ports[j].position[1] for j in port_rank]
    if any(port_y[r] >= port_y[r + 1] for r in range(n - 1)):
        raise ValidationError("ports must be strictly monotone in y")

    site_order = sorted(range(n), key=lambda i: (sites[i][1], sites[i][0], i))

    def try_assignment(occupant: list[int]) -> list[int] | None:
        k = config.k
        sx = np.array([sites[i][0] for i in occupant])
        sy = np.array([sites[i][1] for i in occupant])
        lv = np.asarray(port_y, dtype=float)

        def cross_row(r: int) -> np.ndarray:
            # _level_cross of leader at rank r against every rank, vectorized
            dx_fwd = np.maximum(sx - sx[r], 0.0)
            if lv[r] >= sy[r]:
                f_self = np.minimum(sy[r] + k * dx_fwd, lv[r])
            else:
                f_self = np.maximum(sy[r] - k * dx_fwd, lv[r])
            dx_back = np.maximum(sx[r] - sx, 0.0)
            f_other = np.where(
                lv >= sy,
                np.minimum(sy + k * dx_back, lv),
                np.maximum(sy - k * dx_back, lv),
            )
            d0 = np.where(sx >= sx[r], f_self - sy, sy[r] - f_other)
            row = (d0 == 0.0) | ((d0 > 0.0) != (lv[r] > lv))
            row[r] = False
            return row

        crossing = np.zeros((n, n), dtype=bool)
        for r in range(n):
            crossing[r] = cross_row(r)
        count = int(crossing.sum()) // 2

        def swap_delta_and_rows(r: int, t: int):
            before = int(crossing[r].sum()) + int(crossing[t].sum())
            before -= int(crossing[r, t])
            sx[r], sx[t] = sx[t], sx[r]
            sy[r], sy[t] = sy[t], sy[r]
            row_r, row_t = cross_row(r), cross_row(t)
            after = int(row_r.sum()) + int(row_t.sum()) - int(row_r[t])
            return after - before, row_r, row_t

        def revert(r: int, t: int) -> None:
            sx[r], sx[t] = sx[t], sx[r]
            sy[r], sy[t] = sy[t], sy[r]

        # adjacent-swap repair: each applied swap strictly reduces count
        for _ in range(n * n + 1):
            if count == 0:
                return occupant
            improved = False
            for r in range(n - 1):
                delta, row_r, row_t = swap_delta_and_rows(r, r + 1)
                if delta < 0:
                    occupant[r], occupant[r + 1] = occupant[r + 1], occupant[r]
                    crossing[r] = row_r
                    crossing[:, r] = row_r
                    crossing[r + 1] = row_t
                    crossing[:, r + 1] = row_t
                    crossing[r, r + 1] = crossing[r + 1, r] = row_r[r + 1]
                    count += delta
                    improved = True
                else:
                    revert(r, r + 1)
            if not improved:
                break
        return occupant if count == 0 else None

    occupant = try_assignment(list(site_order))
    if occupant is None:
        # The swap repair can stall in a local minimum; fall back to the
        # leftmost-site splitting construction, which always succeeds.
        occupant = _split_assignment(sites, port_y, config.k)
    if occupant is None:
        raise LayoutError("could not find a crossing-free port assignment")

    result = [0] * n
    for rank, site_idx in enumerate(occupant):
        result[site_idx] = port_rank[rank]
    return result


def _path_y(site: Point, level: float, k: float, x: float) -> float:
    """Height of the leader path from site toward a port level, at x."""
    sx, sy = site
    if level >= sy:
        return min(sy + k * (x - sx), level)
    return max(sy - k * (x - sx), level)


def _split_assignment(
    sites: list[Point], port_y: list[float], k: float
) -> list[int] | None:
    """Always-succeeding crossing-free assignment by recursive splitting.

    Two leaders' vertical difference is weakly monotone in x (both paths
    are one +-k diagonal then horizontal), so a pair crosses exactly when
    the vertical order at the later site's start disagrees with the port
    order. Route the leftmost site to the port rank r that has exactly r
    sites strictly above the resulting path; everything above recurses
    onto the ports above, everything below onto the ports below, and no
    pair across the split can ever cross.
    """

    def solve(site_idx: list[int], level_idx: list[int]) -> dict[int, int] | None:
        if not site_idx:
            return {}
        first = min(site_idx, key=lambda i: (sites[i][0], sites[i][1], i))
        rest = [i for i in site_idx if i != first]

        def above_set(rank: int) -> list[int] | None:
            level = port_y[level_idx[rank]]
            out = []
            for i in rest:
                py = _path_y(sites[first], level, k, sites[i][0])
                if sites[i][1] == py:
                    return None  # site exactly on the path: try another rank
                if sites[i][1] < py:
                    out.append(i)
            return out

        for rank in range(len(level_idx)):
            above = above_set(rank)
            if above is None or len(above) != rank:
                continue
            above_s = set(above)
            below = [i for i in rest if i not in above_s]
            top = solve(above, level_idx[:rank])
            if top is None:
                continue
            bottom = solve(below, level_idx[rank + 1:])
            if bottom is None:
                continue
            out = {first: level_idx[rank]}
            out.update(top)
            out.update(bottom)
            return out
        return None

    mapping = solve(list(range(len(sites))), list(range(len(port_y))))
    if mapping is None:
        return None
    occupant = [0] * len(sites)
    for site_i, rank in mapping.items():
        occupant[rank] = site_i
    return occupant


def partition_bands(routes) -> tuple[list[Band], list[float]]:
    """Group port-ordered routes into sign runs, with separating lines.

    The separating y between two adjacent bands is the midpoint of their
    facing extreme site y values (the earlier band's lowest site vs the
    later band's highest site, in screen coordinates).
    """
    routes = list(routes)
    order = sorted(range(len(routes)), key=lambda i: routes[i].port.position[1])
    bands: list[Band] = []
    run: list[int] = []
    sign = None
    for idx in order:
        s = routes[idx].gradient_sign
        if sign is None or s == sign:
            run.append(idx)
            sign = s
        else:
            bands.append(Band(sign=sign, route_indices=tuple(run)))
            run = [idx]
            sign = s
    if run:
        bands.append(Band(sign=sign, route_indices=tuple(run)))

    separators: list[float] = []
    for prev, nxt in zip(bands, bands[1:]):
        low = max(routes[i].site[1] for i in prev.route_indices)
        high = min(routes[i].site[1] for i in nxt.route_indices)
        separators.append((low + high) / 2.0)
    return bands, separators
