"""Tests for dataset ingestion, aggregation, and range filtering."""

from __future__ import annotations

import importlib.resources as resources
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maptrix.errors import (
    AggregationError,
    ContiguityError,
    GeometryError,
    IngestError,
    RangeError,
    ValidationError,
)
from maptrix.geometry import min_distance_to_boundary, point_in_polygon
from maptrix.model import (
    FlowDataset,
    ProjectionSpec,
    RegionGroup,
    aggregate,
    filter_by_range,
    load_dataset,
    make_region,
)


def data_bytes(name: str) -> bytes:
    return resources.files("maptrix.data").joinpath(name).read_bytes()


def box(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def geojson(shapes: dict[str, list]) -> bytes:
    feats = []
    for rid, ring in shapes.items():
        coords = [[list(p) for p in ring] + [list(ring[0])]]
        feats.append(
            {
                "type": "Feature",
                "id": rid,
                "properties": {"name": rid},
                "geometry": {"type": "Polygon", "coordinates": coords},
            }
        )
    return json.dumps({"type": "FeatureCollection", "features": feats}).encode()


def csv_bytes(rows: list[str], cols: list[str], flows) -> bytes:
    lines = ["id," + ",".join(cols)]
    for rid, row in zip(rows, flows):
        lines.append(rid + "," + ",".join(str(v) for v in row))
    return "\n".join(lines).encode()


TWO_BOXES = {"A": box(0, 0, 2, 2), "B": box(2, 0, 4, 2)}
IDENT = ProjectionSpec(kind="identity")


def make_two_region(flows):
    return load_dataset(
        csv_bytes(["A", "B"], ["A", "B"], flows), geojson(TWO_BOXES), IDENT
    )


def test_load_au_fixture():
    ds = load_dataset(data_bytes("au_flows.csv"), data_bytes("au_boundaries.geojson"))
    assert len(ds.origins) == 8 and len(ds.destinations) == 8
    assert ds.same_country
    assert ds.origins[0] is ds.destinations[0]  # shared region objects
    assert ds.origin_ids == ("WA", "NT", "SA", "QLD", "NSW", "ACT", "VIC", "TAS")
    assert np.all(ds.totals_out == ds.flows.sum(axis=1))
    for region in ds.origins:
        assert point_in_polygon(region.anchor, region.boundary)
        assert min_distance_to_boundary(region.anchor, region.boundary) > 0


def test_load_deterministic():
    a = load_dataset(data_bytes("au_flows.csv"), data_bytes("au_boundaries.geojson"))
    b = load_dataset(data_bytes("au_flows.csv"), data_bytes("au_boundaries.geojson"))
    assert np.array_equal(a.flows, b.flows)
    assert a.origin_ids == b.origin_ids
    assert all(x.boundary == y.boundary for x, y in zip(a.origins, b.origins))


def test_zero_matrix_rejected():
    with pytest.raises(ValidationError):
        load_dataset(
            csv_bytes(["A"], ["A"], [[0]]), geojson({"A": box(0, 0, 1, 1)}), IDENT
        )


def test_unknown_column_id():
    with pytest.raises(IngestError, match="XX"):
        load_dataset(
            csv_bytes(["A"], ["XX"], [[3]]), geojson({"A": box(0, 0, 1, 1)}), IDENT
        )


def test_negative_flow_rejected():
    with pytest.raises(ValidationError):
        make_two_region([[1, -2], [3, 4]])


def test_ragged_csv_rejected():
    bad = b"id,A,B\nA,1,2\nB,3\n"
    with pytest.raises(IngestError):
        load_dataset(bad, geojson(TWO_BOXES), IDENT)


def test_column_order_normalized():
    # Rows A,B with columns B,A: columns get reordered to the row order.
    ds = load_dataset(
        csv_bytes(["A", "B"], ["B", "A"], [[1, 2], [3, 4]]),
        geojson(TWO_BOXES),
        IDENT,
    )
    assert ds.same_country
    assert ds.dest_ids == ("A", "B")
    # A->B was 1, A->A was 2, B->B was 3, B->A was 4.
    assert ds.flows.tolist() == [[2, 1], [4, 3]]


def test_make_region_validation():
    with pytest.raises(GeometryError):
        make_region("X", "X", [(0, 0), (1, 1)])
    with pytest.raises(GeometryError):
        make_region("X", "X", [(0, 0), (2, 2), (2, 0), (0, 2)])  # bowtie
    with pytest.raises(GeometryError):
        make_region("X", "X", [(0, 0), (1, 0), (2, 0)])  # zero area
    with pytest.raises(GeometryError):
        make_region("X", "X", box(0, 0, 1, 1), anchor=(5.0, 5.0))
    region = make_region("X", "X", box(0, 0, 2, 2) + [box(0, 0, 2, 2)[0]])
    assert region.anchor == (1.0, 1.0)  # closed ring tolerated


def test_aggregate_empty_is_identity():
    ds = make_two_region([[1, 2], [3, 4]])
    assert aggregate(ds, []) is ds


def test_aggregate_two_into_one():
    ds = make_two_region([[1, 2], [3, 4]])
    out = aggregate(ds, [RegionGroup("AB", frozenset({"A", "B"}))])
    assert out.flows.tolist() == [[10]]
    assert out.origin_ids == ("AB",)
    assert out.same_country


def test_aggregate_overlapping_groups():
    ds = make_two_region([[1, 2], [3, 4]])
    with pytest.raises(AggregationError):
        aggregate(
            ds,
            [RegionGroup("G1", frozenset({"A"})), RegionGroup("G2", frozenset({"A", "B"}))],
        )


def test_aggregate_unknown_member():
    ds = make_two_region([[1, 2], [3, 4]])
    with pytest.raises(AggregationError, match="ZZ"):
        aggregate(ds, [RegionGroup("G", frozenset({"ZZ"}))])


def test_aggregate_noncontiguous():
    shapes = {"A": box(0, 0, 1, 1), "B": box(5, 0, 6, 1)}
    ds = load_dataset(
        csv_bytes(["A", "B"], ["A", "B"], [[1, 2], [3, 4]]), geojson(shapes), IDENT
    )
    with pytest.raises(ContiguityError):
        aggregate(ds, [RegionGroup("G", frozenset({"A", "B"}))])


def test_aggregate_corner_touch_not_contiguous():
    shapes = {"A": box(0, 0, 1, 1), "B": box(1, 1, 2, 2)}
    ds = load_dataset(
        csv_bytes(["A", "B"], ["A", "B"], [[1, 2], [3, 4]]), geojson(shapes), IDENT
    )
    with pytest.raises(ContiguityError):
        aggregate(ds, [RegionGroup("G", frozenset({"A", "B"}))])


def test_aggregate_au_groups():
    ds = load_dataset(data_bytes("au_flows.csv"), data_bytes("au_boundaries.geojson"))
    with pytest.raises(ContiguityError):
        aggregate(ds, [RegionGroup("G", frozenset({"WA", "QLD"}))])
    out = aggregate(ds, [RegionGroup("SE", frozenset({"NSW", "ACT", "VIC"}))])
    assert len(out.origins) == 6
    assert out.grand_total == pytest.approx(ds.grand_total)
    merged = next(r for r in out.origins if r.id == "SE")
    assert point_in_polygon(merged.anchor, merged.boundary)


def test_filter_examples():
    ds = make_two_region([[5, 0], [0, 9]])
    out, retained = filter_by_range(ds, 6, 10)
    assert out.flows.tolist() == [[9]]
    assert retained == frozenset({"B"})
    # Full range is the identity.
    full, kept = filter_by_range(ds, 0, ds.flows.max())
    assert np.array_equal(full.flows, ds.flows)
    assert kept == frozenset({"A", "B"})
    # A range above the maximum empties the dataset without error.
    empty, none_kept = filter_by_range(ds, ds.flows.max() + 1, ds.flows.max() + 2)
    assert len(empty.origins) == 0 and none_kept == frozenset()


def test_filter_bad_range():
    ds = make_two_region([[5, 0], [0, 9]])
    with pytest.raises(RangeError):
        filter_by_range(ds, 10, 5)
    with pytest.raises(RangeError):
        filter_by_range(ds, -1, 5)


def test_filter_two_country_drops_sides_independently():
    shapes = {"A": box(0, 0, 1, 1), "B": box(1, 0, 2, 1), "C": box(0, 2, 1, 3), "D": box(1, 2, 2, 3)}
    ds = load_dataset(
        csv_bytes(["A", "B"], ["C", "D"], [[5, 0], [0, 9]]), geojson(shapes), IDENT
    )
    assert not ds.same_country
    out, retained = filter_by_range(ds, 6, 10)
    assert out.origin_ids == ("B",) and out.dest_ids == ("D",)
    assert retained == frozenset({"B", "D"})


def test_filter_then_singleton_aggregate_is_identity_on_flows():
    ds = load_dataset(data_bytes("au_flows.csv"), data_bytes("au_boundaries.geojson"))
    filtered, _ = filter_by_range(ds, 0, float(ds.flows.max()))
    groups = [RegionGroup(r.id, frozenset({r.id})) for r in filtered.origins]
    out = aggregate(filtered, groups)
    assert np.array_equal(out.flows, filtered.flows)
    assert out.origin_ids == filtered.origin_ids


@settings(max_examples=40, deadline=None)
@given(
    data=st.data(),
    size=st.integers(2, 6),
)
def test_aggregate_conservation_property(data, size):
    ids = [f"R{i}" for i in range(size)]
    shapes = {rid: box(i, 0, i + 1, 1) for i, rid in enumerate(ids)}
    flows = data.draw(
        st.lists(
            st.lists(st.integers(0, 50), min_size=size, max_size=size),
            min_size=size,
            max_size=size,
        )
    )
    if not any(v > 0 for row in flows for v in row):
        flows[0][0] = 1
    ds = load_dataset(csv_bytes(ids, ids, flows), geojson(shapes), IDENT)
    # A contiguous prefix of the strip is always a valid group.
    cut = data.draw(st.integers(1, size))
    out = aggregate(ds, [RegionGroup("G", frozenset(ids[:cut]))])
    assert out.grand_total == pytest.approx(ds.grand_total)
    assert float(out.totals_out.sum()) == pytest.approx(ds.grand_total)
    assert float(out.totals_in.sum()) == pytest.approx(ds.grand_total)
    assert len(out.origins) == size - cut + 1


def test_empty_dataset_allowed():
    ds = FlowDataset(origins=(), destinations=(), flows=np.zeros((0, 0)))
    assert ds.grand_total == 0.0
