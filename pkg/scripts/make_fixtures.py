"""Regenerate the sample datasets shipped in src/maptrix/data/.

Boundaries are schematic (axis-aligned lon/lat boxes arranged like the
real geography, not survey-accurate shapes); flows are synthetic but
deterministic. Region counts match the scales the engine is exercised
at: AU 8, NZ 16, DE 16, US 51.
"""

from __future__ import annotations

import json
import pathlib

import numpy as np

DATA = pathlib.Path(__file__).resolve().parent.parent / "src" / "maptrix" / "data"

AU_NAMES = {
    "WA": "Western Australia",
    "NT": "Northern Territory",
    "SA": "South Australia",
    "QLD": "Queensland",
    "NSW": "New South Wales",
    "ACT": "Australian Capital Territory",
    "VIC": "Victoria",
    "TAS": "Tasmania",
}

# Lon/lat rings, counterclockwise, unclosed.
AU_SHAPES = {
    "WA": [(112, -35), (129, -35), (129, -14), (112, -14)],
    "NT": [(129, -26), (138, -26), (138, -11), (129, -11)],
    "SA": [(129, -38), (141, -38), (141, -26), (129, -26)],
    "QLD": [(141, -29), (154, -29), (154, -10), (138, -10), (138, -26), (141, -26)],
    "NSW": [
        (141, -37),
        (147, -37),
        (147, -35),
        (149, -35),
        (149, -37),
        (154, -37),
        (154, -29),
        (141, -29),
    ],
    "ACT": [(147, -37), (149, -37), (149, -35), (147, -35)],
    "VIC": [(141, -39), (150, -39), (150, -37), (141, -37)],
    "TAS": [(144.5, -43.8), (148.5, -43.8), (148.5, -40.2), (144.5, -40.2)],
}
AU_ORDER = ["WA", "NT", "SA", "QLD", "NSW", "ACT", "VIC", "TAS"]

NZ_IDS = [
    "NTL", "AKL", "WKO", "BOP", "GIS", "HKB", "TKI", "MWT", "WGN",
    "NSN", "MBH", "WTC", "CAN", "OTA", "STL", "TSM",
]
DE_IDS = [
    "SH", "HH", "MV", "HB", "NI", "BE", "BB", "ST",
    "NW", "HE", "TH", "SN", "RP", "SL", "BW", "BY",
]
US_IDS = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE",
    "DC", "FL", "GA", "HI", "ID", "IL", "IN", "IA",
    "KS", "KY", "LA", "ME", "MD", "MA", "MI", "MN",
    "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM",
    "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI",
    "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA",
    "WV", "WI", "WY",
]


def grid_country(ids, lon0, lon1, lat0, lat1, cols):
    """Lay region boxes row-major on a grid spanning the given extent."""
    rows = (len(ids) + cols - 1) // cols
    dlon = (lon1 - lon0) / cols
    dlat = (lat1 - lat0) / rows
    shapes = {}
    for idx, rid in enumerate(ids):
        r, c = divmod(idx, cols)
        x0 = lon0 + c * dlon
        y0 = lat0 + r * dlat
        shapes[rid] = [
            (x0, y0),
            (x0 + dlon, y0),
            (x0 + dlon, y0 + dlat),
            (x0, y0 + dlat),
        ]
    return shapes


def feature_collection(order, shapes, names=None):
    feats = []
    for rid in order:
        ring = [[float(x), float(y)] for x, y in shapes[rid]]
        ring.append(ring[0])
        feats.append(
            {
                "type": "Feature",
                "id": rid,
                "properties": {"name": (names or {}).get(rid, rid)},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    return {"type": "FeatureCollection", "features": feats}


def synth_flows(ids, seed, cross_ids=None):
    """Deterministic synthetic OD matrix with zeros and a heavy diagonal."""
    rng = np.random.default_rng(seed)
    rows = ids
    cols = cross_ids if cross_ids is not None else ids
    size_r = rng.uniform(1.0, 10.0, len(rows))
    size_c = rng.uniform(1.0, 10.0, len(cols))
    base = np.outer(size_r, size_c) * rng.uniform(0.2, 1.8, (len(rows), len(cols)))
    flows = np.round(base * 10.0)
    flows[flows < 15.0] = 0.0
    if cross_ids is None:
        flows[np.diag_indices(len(rows))] *= 3.0
    return flows.astype(int)


def write_csv(path, row_ids, col_ids, flows):
    lines = ["id," + ",".join(col_ids)]
    for rid, row in zip(row_ids, flows):
        lines.append(rid + "," + ",".join(str(int(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    DATA.mkdir(parents=True, exist_ok=True)

    au_geo = feature_collection(AU_ORDER, AU_SHAPES, AU_NAMES)
    (DATA / "au_boundaries.geojson").write_text(
        json.dumps(au_geo, indent=1), encoding="utf-8"
    )
    write_csv(DATA / "au_flows.csv", AU_ORDER, AU_ORDER, synth_flows(AU_ORDER, 42))

    nz_shapes = grid_country(NZ_IDS, 166.0, 179.0, -47.5, -34.0, 4)
    (DATA / "nz_boundaries.geojson").write_text(
        json.dumps(feature_collection(NZ_IDS, nz_shapes), indent=1), encoding="utf-8"
    )
    write_csv(DATA / "nz_flows.csv", NZ_IDS, NZ_IDS, synth_flows(NZ_IDS, 7))

    de_shapes = grid_country(DE_IDS, 6.0, 15.0, 47.2, 55.0, 4)
    (DATA / "de_boundaries.geojson").write_text(
        json.dumps(feature_collection(DE_IDS, de_shapes), indent=1), encoding="utf-8"
    )
    write_csv(DATA / "de_flows.csv", DE_IDS, DE_IDS, synth_flows(DE_IDS, 11))

    us_shapes = grid_country(US_IDS, -125.0, -67.0, 25.0, 49.3, 8)
    (DATA / "us_boundaries.geojson").write_text(
        json.dumps(feature_collection(US_IDS, us_shapes), indent=1), encoding="utf-8"
    )
    write_csv(DATA / "us_flows.csv", US_IDS, US_IDS, synth_flows(US_IDS, 23))

    # NZ -> US cross-country matrix for the two-country mode demos.
    write_csv(
        DATA / "nz_us_flows.csv",
        NZ_IDS,
        US_IDS,
        synth_flows(NZ_IDS, 99, cross_ids=US_IDS),
    )
    combined = feature_collection(NZ_IDS, nz_shapes) | {}
    combined["features"] = (
        feature_collection(NZ_IDS, nz_shapes)["features"]
        + feature_collection(US_IDS, us_shapes)["features"]
    )
    (DATA / "nz_us_boundaries.geojson").write_text(
        json.dumps(combined, indent=1), encoding="utf-8"
    )
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
