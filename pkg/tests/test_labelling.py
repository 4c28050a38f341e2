"""Tests for port assignment and leader routing."""

from __future__ import annotations

import numpy as np
import pytest

from maptrix.errors import (
    DegenerateSiteError,
    SteepLeaderError,
    ValidationError,
)
from maptrix.labelling import (
    Band,
    LabellingConfig,
    LeaderRoute,
    Port,
    _level_cross,
    assign_ports,
    conservative_cross,
    partition_bands,
    route_leader,
    verify_crossing_free,
)

CFG = LabellingConfig(k=1.0, port_spacing=10.0, port_line_x=1000.0)


def make_ports(ys, x=1000.0, side="origin-edge"):
    return [Port(index=i, position=(x, float(y)), side=side) for i, y in enumerate(ys)]


def route_all(sites, ports, perm, config=CFG):
    return [route_leader(site, ports[perm[i]], config) for i, site in enumerate(sites)]


def test_route_leader_up_bend():
    port = Port(index=0, position=(10.0, 4.0))
    route = route_leader((0.0, 0.0), port, CFG)
    assert route.bend == (4.0, 4.0)
    assert route.gradient_sign == "up"
    # slope site->bend re-derived from the emitted bend
    (sx, sy), (bx, by) = route.site, route.bend
    assert abs((by - sy) / (bx - sx) - 1.0) < 1e-9


def test_route_leader_down_bend():
    port = Port(index=0, position=(10.0, 4.0))
    route = route_leader((0.0, 10.0), port, CFG)
    assert route.bend == (6.0, 4.0)
    assert route.gradient_sign == "down"
    (sx, sy), (bx, by) = route.site, route.bend
    assert abs((by - sy) / (bx - sx) + 1.0) < 1e-9


def test_route_leader_collinear_degenerates_to_horizontal():
    port = Port(index=0, position=(10.0, 0.0))
    route = route_leader((0.0, 0.0), port, CFG)
    assert route.bend == (10.0, 0.0)  # bend collapses onto the port
    assert route.gradient_sign == "up"


def test_route_leader_steepness_error():
    port = Port(index=0, position=(10.0, 20.0))
    with pytest.raises(SteepLeaderError) as err:
        route_leader((0.0, 0.0), port, CFG)
    assert err.value.min_feasible_k == pytest.approx(2.0)


def test_route_leader_requires_site_left_of_port():
    port = Port(index=0, position=(10.0, 0.0))
    with pytest.raises(ValidationError):
        route_leader((10.0, 5.0), port, CFG)


def test_route_leader_respects_gradient_config():
    cfg = LabellingConfig(k=2.0, port_spacing=10.0, port_line_x=100.0)
    port = Port(index=0, position=(10.0, 8.0))
    route = route_leader((0.0, 0.0), port, cfg)
    assert route.bend == (4.0, 8.0)  # |dy|/k = 8/2


def test_config_validation():
    with pytest.raises(ValidationError):
        LabellingConfig(k=0.0)
    with pytest.raises(ValidationError):
        LabellingConfig(port_spacing=-1.0)


def test_verify_crossing_free_cases():
    ports = make_ports([0.0, 10.0])
    parallel = [
        route_leader((-20.0, 0.0), ports[0], CFG),
        route_leader((-20.0, 10.0), ports[1], CFG),
    ]
    assert verify_crossing_free(parallel) == []
    assert verify_crossing_free(parallel[:1]) == []
    # Force an X crossing by swapping the natural assignment.
    crossing = [
        route_leader((-20.0, 0.0), ports[1], CFG),
        route_leader((-20.0, 10.0), ports[0], CFG),
    ]
    assert verify_crossing_free(crossing) == [(0, 1)]


def test_assign_single_site():
    assert assign_ports([(0.0, 0.0)], make_ports([5.0]), CFG) == [0]


def test_assign_sorted_sites_identity():
    sites = [(0.0, 0.0), (5.0, 40.0), (-3.0, 90.0)]
    assert assign_ports(sites, make_ports([10.0, 50.0, 100.0]), CFG) == [0, 1, 2]


def test_assign_duplicate_sites_rejected():
    with pytest.raises(DegenerateSiteError):
        assign_ports([(0.0, 0.0), (0.0, 0.0)], make_ports([0.0, 10.0]), CFG)


def test_assign_count_mismatch():
    with pytest.raises(ValidationError):
        assign_ports([(0.0, 0.0)], make_ports([0.0, 10.0]), CFG)


def test_assign_site_right_of_ports():
    with pytest.raises(ValidationError):
        assign_ports([(1000.0, 0.0)], make_ports([5.0]), CFG)


def test_assignment_routes_crossing_free_randomized():
    rng = np.random.default_rng(515)
    for trial in range(60):
        n = int(rng.integers(2, 52))
        sites = [
            (float(x), float(y))
            for x, y in zip(rng.uniform(0, 300, n), rng.uniform(0, 600, n))
        ]
        if len(set(sites)) != n:
            continue
        spacing = 12.0
        ys = [100.0 + spacing * i for i in range(n)]
        # port x chosen right of every possible bend
        port_x = 300.0 + max(abs(y - py) for y in ys for _, py in sites) + 1.0
        ports = make_ports(ys, x=port_x)
        perm = assign_ports(sites, ports, CFG)
        assert sorted(perm) == list(range(n))
        routes = route_all(sites, ports, perm)
        assert verify_crossing_free(routes) == []
        # conservative test agrees (and is what makes port x free to move)
        for i in range(n):
            for j in range(i + 1, n):
                assert not conservative_cross(
                    sites[i],
                    ports[perm[i]].position[1],
                    sites[j],
                    ports[perm[j]].position[1],
                    CFG.k,
                )


def test_level_cross_matches_geometric_test():
    # the O(1) comparison used during repair equals the geometric widened
    # test whenever port levels are distinct (the only case assignment uses)
    rng = np.random.default_rng(4242)
    checked = 0
    for _ in range(4000):
        sa = (float(rng.uniform(-50, 50)), float(rng.uniform(-50, 50)))
        sb = (float(rng.uniform(-50, 50)), float(rng.uniform(-50, 50)))
        ya, yb = (float(v) for v in rng.uniform(-60, 60, 2))
        if ya == yb or sa == sb:
            continue
        k = float(rng.choice([0.5, 1.0, 2.0]))
        assert _level_cross(sa, ya, sb, yb, k) == conservative_cross(sa, ya, sb, yb, k)
        checked += 1
    # grid cases force exact touches/collinearity, not just generic position
    grid = [-2.0, -1.0, 0.0, 1.0, 2.0]
    for sax in grid:
        for say in grid:
            for sbx in grid:
                for sby in grid:
                    for ya in grid:
                        for yb in grid:
                            if ya == yb or (sax, say) == (sbx, sby):
                                continue
                            got = _level_cross((sax, say), ya, (sbx, sby), yb, 1.0)
                            want = conservative_cross((sax, say), ya, (sbx, sby), yb, 1.0)
                            assert got == want, ((sax, say), ya, (sbx, sby), yb)
                            checked += 1
    assert checked > 10000


def test_band_ordering_disjunction_randomized():
    # Within a band, crossing-freeness forces either diagonal-intercept
    # order to match port order, or the out-of-order leader to start
    # beyond its neighbour's port level (so its diagonal never reaches).
    rng = np.random.default_rng(99)
    for _ in range(40):
        n = int(rng.integers(2, 30))
        sites = [
            (float(x), float(y))
            for x, y in zip(rng.uniform(0, 200, n), rng.uniform(0, 500, n))
        ]
        if len(set(sites)) != n:
            continue
        ys = [150.0 + 12.0 * i for i in range(n)]
        port_x = 200.0 + max(abs(y - py) for y in ys for _, py in sites) + 1.0
        ports = make_ports(ys, x=port_x)
        perm = assign_ports(sites, ports, CFG)
        routes = route_all(sites, ports, perm)
        bands, _ = partition_bands(routes)
        for band in bands:
            idx = list(band.route_indices)
            for a, b in zip(idx, idx[1:]):
                ra, rb = routes[a], routes[b]
                if band.sign == "up":
                    ca = ra.site[1] - CFG.k * ra.site[0]
                    cb = rb.site[1] - CFG.k * rb.site[0]
                    ok = ca <= cb + 1e-9 or rb.site[1] > ra.port.position[1]
                else:
                    ca = ra.site[1] + CFG.k * ra.site[0]
                    cb = rb.site[1] + CFG.k * rb.site[0]
                    ok = ca <= cb + 1e-9 or ra.site[1] < rb.port.position[1]
                assert ok


def test_partition_single_band():
    ports = make_ports([10.0, 20.0, 30.0])
    sites = [(-50.0, 5.0), (-50.0, 15.0), (-50.0, 25.0)]
    routes = route_all(sites, ports, [0, 1, 2])
    assert all(r.gradient_sign == "up" for r in routes)
    bands, seps = partition_bands(routes)
    assert len(bands) == 1 and seps == []
    assert bands[0].route_indices == (0, 1, 2)


def test_partition_two_bands_midpoint():
    # Sites at y 5,10 route upward, site at 20 routes downward; the
    # separating line between the bands is midway between 10 and 20.
    ports = make_ports([12.0, 14.0, 16.0], x=100.0)
    routes = [
        route_leader((0.0, 5.0), ports[0], CFG),
        route_leader((10.0, 10.0), ports[1], CFG),
        route_leader((5.0, 20.0), ports[2], CFG),
    ]
    assert [r.gradient_sign for r in routes] == ["up", "up", "down"]
    bands, seps = partition_bands(routes)
    assert [b.sign for b in bands] == ["up", "down"]
    assert seps == [15.0]


def test_partition_orders_by_port_y():
    # Input order should not matter; bands follow port order.
    ports = make_ports([12.0, 14.0, 16.0], x=100.0)
    routes = [
        route_leader((5.0, 20.0), ports[2], CFG),
        route_leader((0.0, 5.0), ports[0], CFG),
        route_leader((10.0, 10.0), ports[1], CFG),
    ]
    bands, seps = partition_bands(routes)
    assert [b.sign for b in bands] == ["up", "down"]
    assert bands[0].route_indices == (1, 2)
    assert bands[1].route_indices == (0,)
    assert seps == [15.0]
