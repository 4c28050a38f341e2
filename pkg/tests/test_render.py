"""SVG renderer tests.

Color oracles re-evaluate the ramp with numpy.interp (an independent
piecewise-linear path); document structure is checked by parsing the
output and counting elements by id scheme, never by regex on markup.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
import importlib.resources as resources

import numpy as np
import pytest

from maptrix.assemble import AssemblyConfig, layout, layout_two_country
from maptrix.errors import ValidationError
from maptrix.model import load_dataset
from maptrix.render import (
    StyleSpec,
    circle_radius,
    color_for_flow,
    ramp_position,
    render,
)
from maptrix.selection import SelectionState
from maptrix.style import YLORRD_9, grey_shade, hex_to_rgb


def _data(name: str) -> bytes:
    return resources.files("maptrix.data").joinpath(name).read_bytes()


@pytest.fixture(scope="module")
def au_layout():
    ds = load_dataset(_data("au_flows.csv"), _data("au_boundaries.geojson"))
    return layout(ds, AssemblyConfig())


@pytest.fixture(scope="module")
def au_svg(au_layout):
    return render(au_layout)


def _elements(svg: bytes) -> list[ET.Element]:
    return list(ET.fromstring(svg).iter())


def _tag(el: ET.Element) -> str:
    return el.tag.rsplit("}", 1)[-1]


def _with_id_prefix(els, prefix: str) -> list[ET.Element]:
    return [e for e in els if e.get("id", "").startswith(prefix)]


def _highlighted(els) -> list[ET.Element]:
    return [e for e in els if "highlight" in e.get("class", "").split()]


# --- color ramp ------------------------------------------------------------

def interp_oracle(frac: float, anchors=YLORRD_9) -> tuple[int, int, int]:
    """Independent piecewise-linear evaluation via numpy.interp."""
    xs = np.linspace(0.0, 1.0, len(anchors))
    chans = np.array([hex_to_rgb(c) for c in anchors], dtype=float)
    f = min(max(frac, 0.0), 1.0)
    return tuple(round(float(np.interp(f, xs, chans[:, i]))) for i in range(3))


def test_color_endpoints_match_colorbrewer():
    style = StyleSpec()
    assert color_for_flow(0.0, 100.0, style) == "#FFFFCC"
    assert color_for_flow(100.0, 100.0, style) == "#800026"


def test_color_midpoint_matches_independent_interpolation():
    got = color_for_flow(50.0, 100.0, StyleSpec())
    assert hex_to_rgb(got) == interp_oracle(0.5)
    assert got == YLORRD_9[4]  # 0.5 of 9 anchors lands exactly on the middle one


def test_color_sweep_matches_independent_interpolation():
    style = StyleSpec()
    for v in np.linspace(0.0, 73.0, 50):
        got = hex_to_rgb(color_for_flow(float(v), 73.0, style))
        want = interp_oracle(float(v) / 73.0)
        assert all(abs(g - w) <= 1 for g, w in zip(got, want)), (v, got, want)


def test_color_rejects_nonpositive_max():
    with pytest.raises(ValidationError):
        color_for_flow(1.0, 0.0, StyleSpec())
    with pytest.raises(ValidationError):
        color_for_flow(1.0, -5.0, StyleSpec())


def test_ramp_position_linear_is_value_ratio():
    style = StyleSpec()
    assert ramp_position(0.0, 80.0, style) == 0.0
    assert ramp_position(80.0, 80.0, style) == 1.0
    assert ramp_position(20.0, 80.0, style) == 0.25
    assert ramp_position(120.0, 80.0, style) == 1.0  # clamped


def test_ramp_position_strictly_monotone():
    rng = np.random.default_rng(7)
    values = np.unique(rng.uniform(0.0, 500.0, size=60))
    for style in (StyleSpec(), StyleSpec(log_scale=True)):
        pos = [ramp_position(float(v), 500.0, style) for v in values]
        assert all(a < b for a, b in zip(pos, pos[1:]))


def test_ramp_position_log_flag():
    style = StyleSpec(log_scale=True)
    for v in (0.0, 1.0, 37.0, 500.0):
        assert ramp_position(v, 500.0, style) == math.log1p(v) / math.log1p(500.0)


# --- circles ----------------------------------------------------------------

def test_circle_radius_endpoints_and_quarter():
    style = StyleSpec(circle_max_radius=20.0)
    assert circle_radius(100.0, 100.0, style) == 20.0
    assert circle_radius(0.0, 100.0, style) == 0.0
    assert circle_radius(25.0, 100.0, style) == 10.0


def test_circle_area_proportional_property():
    style = StyleSpec()
    rng = np.random.default_rng(11)
    max_total = 937.0
    for total in rng.uniform(0.0, max_total, size=40):
        r = circle_radius(float(total), max_total, style)
        got = (r / style.circle_max_radius) ** 2
        assert got == pytest.approx(total / max_total, rel=1e-6, abs=1e-12)


# --- style validation --------------------------------------------------------

def _luminance(color: str) -> float:
    r, g, b = hex_to_rgb(color)
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def test_default_ramp_luminance_strictly_decreasing():
    lum = [_luminance(c) for c in StyleSpec().cell_scale]
    assert all(a > b for a, b in zip(lum, lum[1:]))


def test_style_rejects_nondecreasing_luminance():
    with pytest.raises(ValidationError):
        StyleSpec(cell_scale=tuple(reversed(YLORRD_9)))
    with pytest.raises(ValidationError):
        StyleSpec(cell_scale=("#888888", "#888888"))


def test_style_rejects_bad_fields():
    with pytest.raises(ValidationError):
        StyleSpec(cell_scale=("#FFFFCC",))
    with pytest.raises(ValidationError):
        StyleSpec(cell_scale=("#FFFFCC", "oops"))
    with pytest.raises(ValidationError):
        StyleSpec(circle_max_radius=0.0)
    with pytest.raises(ValidationError):
        StyleSpec(label_font_size=0.0)
    with pytest.raises(ValidationError):
        StyleSpec(legend_font_size=-1.0)
    with pytest.raises(ValidationError):
        StyleSpec(grey_range=(0.9, 0.2))
    with pytest.raises(ValidationError):
        StyleSpec(grey_range=(-0.1, 1.0))


# --- document structure -------------------------------------------------------

def test_au_svg_parses_and_counts_match_layout(au_layout, au_svg):
    els = _elements(au_svg)
    leaders = _with_id_prefix(els, "leader-")
    cells = _with_id_prefix(els, "cell-")
    assert len(leaders) == 16
    assert all(_tag(e) == "path" for e in leaders)
    assert len(cells) == 64
    assert all(_tag(e) == "rect" for e in cells)
    assert len(_with_id_prefix(els, "region-o-")) == 8
    assert len(_with_id_prefix(els, "region-d-")) == 8
    assert len(_with_id_prefix(els, "glyph-o-")) == 8
    assert len(_with_id_prefix(els, "glyph-d-")) == 8
    assert len(_with_id_prefix(els, "label-o-")) == 8
    assert len(_with_id_prefix(els, "label-d-")) == 8


def test_au_svg_stable_id_scheme(au_layout, au_svg):
    els = _elements(au_svg)
    ids = {e.get("id") for e in els if e.get("id")}
    ds = au_layout.dataset
    for region in ds.origins:
        assert f"region-o-{region.id}" in ids
        assert f"leader-o-{region.id}" in ids
    for region in ds.destinations:
        assert f"region-d-{region.id}" in ids
        assert f"leader-d-{region.id}" in ids
    o0 = ds.origins[0].id
    d0 = ds.destinations[0].id
    assert f"cell-{o0}-{d0}" in ids


def test_au_svg_byte_stable(au_layout, au_svg):
    assert render(au_layout) == au_svg
    ds = load_dataset(_data("au_flows.csv"), _data("au_boundaries.geojson"))
    assert render(layout(ds, AssemblyConfig())) == au_svg


def test_au_svg_contains_ramp_endpoints(au_svg):
    assert b"#FFFFCC" in au_svg
    assert b"#800026" in au_svg


def test_legend_swatches_cover_full_ramp(au_layout, au_svg):
    els = _elements(au_svg)
    swatches = [e for e in els if "legend-swatch" in e.get("class", "").split()]
    assert [e.get("fill") for e in swatches] == list(YLORRD_9)
    texts = [e.text for e in els if _tag(e) == "text"]
    assert "0" in texts
    assert str(int(au_layout.max_flow)) in texts


def test_destination_icon_present_once(au_svg):
    els = _elements(au_svg)
    assert len([e for e in els if e.get("id") == "dest-icon"]) == 1


def test_separator_lines_every_fifth_grid_line(au_layout, au_svg):
    els = _elements(au_svg)
    separators = [e for e in els if "separator" in e.get("class", "").split()]
    rows, cols = len(au_layout.row_order), len(au_layout.col_order)
    every = au_layout.matrix.separator_every
    want = len(range(every, rows, every)) + len(range(every, cols, every))
    assert len(separators) == want == 2


def test_cell_fill_matches_color_oracle(au_layout, au_svg):
    els = _elements(au_svg)
    by_id = {e.get("id"): e for e in els if e.get("id")}
    for p in (0, 3, 7):
        for q in (0, 5):
            oid = au_layout.dataset.origins[au_layout.row_order[p]].id
            did = au_layout.dataset.destinations[au_layout.col_order[q]].id
            cell = by_id[f"cell-{oid}-{did}"]
            value = au_layout.cell_value(p, q)
            want = interp_oracle(value / au_layout.max_flow)
            assert hex_to_rgb(cell.get("fill")) == want


def test_leader_stroke_uses_grey_shading(au_layout, au_svg):
    els = _elements(au_svg)
    by_id = {e.get("id"): e for e in els if e.get("id")}
    style = StyleSpec()
    lo, hi = style.grey_range
    shades = au_layout.label_shade_out
    heavy = max(range(len(shades)), key=lambda i: shades[i])
    rid = au_layout.dataset.origins[heavy].id
    assert shades[heavy] == 1.0 or max(au_layout.label_shade_in) == 1.0
    want = grey_shade(lo + (hi - lo) * shades[heavy])
    assert by_id[f"leader-o-{rid}"].get("stroke") == want
    assert by_id[f"label-o-{rid}"].get("fill") == want


# --- highlights ----------------------------------------------------------------

def test_no_highlights_means_no_highlight_classes(au_svg):
    assert _highlighted(_elements(au_svg)) == []


def test_highlight_origin_marks_full_row(au_layout):
    ds = au_layout.dataset
    oid = ds.origins[0].id
    svg = render(au_layout, highlights=SelectionState(highlights={("origin", oid)}))
    marked = _highlighted(_elements(svg))
    ids = sorted(e.get("id") for e in marked)
    want_cells = sorted(f"cell-{oid}-{d.id}" for d in ds.destinations)
    assert ids == sorted([f"region-o-{oid}", f"leader-o-{oid}"] + want_cells)
    assert len(want_cells) == 8


def test_highlight_dest_marks_full_column(au_layout):
    ds = au_layout.dataset
    did = ds.destinations[3].id
    svg = render(au_layout, highlights=SelectionState(highlights={("dest", did)}))
    marked = _highlighted(_elements(svg))
    ids = sorted(e.get("id") for e in marked)
    want_cells = sorted(f"cell-{o.id}-{did}" for o in ds.origins)
    assert ids == sorted([f"region-d-{did}", f"leader-d-{did}"] + want_cells)


def test_highlight_cell_marks_both_end_paths(au_layout):
    ds = au_layout.dataset
    oid, did = ds.origins[2].id, ds.destinations[5].id
    svg = render(au_layout, highlights=SelectionState(highlights={("cell", oid, did)}))
    ids = sorted(e.get("id") for e in _highlighted(_elements(svg)))
    assert ids == sorted(
        [
            f"cell-{oid}-{did}",
            f"region-o-{oid}",
            f"region-d-{did}",
            f"leader-o-{oid}",
            f"leader-d-{did}",
        ]
    )


def test_highlight_rendering_is_order_independent(au_layout):
    ds = au_layout.dataset
    a, b = ds.origins[0].id, ds.destinations[1].id
    one = SelectionState(highlights=[("origin", a), ("dest", b), ("cell", a, b)])
    two = SelectionState(highlights=[("cell", a, b), ("dest", b), ("origin", a)])
    assert render(au_layout, highlights=one) == render(au_layout, highlights=two)


# --- optional encodings -----------------------------------------------------------

def test_legacy_bar_charts_flag(au_layout):
    plain = render(au_layout)
    assert _with_id_prefix(_elements(plain), "bar-") == []
    barred = render(au_layout, style=StyleSpec(legacy_bar_charts=True))
    els = _elements(barred)
    bars_o = _with_id_prefix(els, "bar-o-")
    bars_d = _with_id_prefix(els, "bar-d-")
    assert len(bars_o) == 8 and len(bars_d) == 8
    assert all(_tag(e) == "rect" for e in bars_o + bars_d)
    widths = {e.get("id"): float(e.get("width")) for e in bars_o}
    shades = au_layout.label_shade_out
    heavy = max(range(len(shades)), key=lambda i: shades[i])
    rid = au_layout.dataset.origins[heavy].id
    assert widths[f"bar-o-{rid}"] == max(widths.values())


def test_custom_ramp_changes_cell_fills(au_layout):
    style = StyleSpec(cell_scale=("#FFFFFF", "#FF0000", "#000000"))
    els = _elements(render(au_layout, style=style))
    fills = {e.get("fill") for e in _with_id_prefix(els, "cell-")}
    assert fills  # parsed
    for f in fills:
        got = hex_to_rgb(f)
        # every fill must lie on the custom ramp, not the default one
        assert got[1] == got[2]  # white->red->black keeps G == B throughout


def test_two_country_render_counts():
    ds = load_dataset(_data("nz_us_flows.csv"), _data("nz_us_boundaries.geojson"))
    lay = layout_two_country(ds)
    els = _elements(render(lay))
    assert len(_with_id_prefix(els, "leader-o-")) == 16
    assert len(_with_id_prefix(els, "leader-d-")) == 51
    assert len(_with_id_prefix(els, "cell-")) == 16 * 51
    assert len([e for e in els if e.get("id") == "dest-icon"]) == 1
