"""Standalone SVG rendering of an assembled flow view.

The document is assembled from f-strings in a fixed traversal order with a
fixed number format, so a given (layout, style, highlights) triple always
produces identical bytes. Element ids follow a stable scheme consumed by
interactive clients and golden tests:

    region-o-<id> / region-d-<id>   map region polygons
    glyph-o-<id>  / glyph-d-<id>    proportional flow circles
    leader-o-<id> / leader-d-<id>   leader polylines (path elements)
    label-o-<id>  / label-d-<id>    edge labels at the matrix ports
    cell-<origin-id>-<dest-id>      matrix cells (rect elements)

Highlighted elements carry a `highlight` class on top of their base class;
all visual styling lives in one embedded stylesheet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .assemble import MapTrixLayout
from .errors import ValidationError
from .selection import SelectionState
from .style import YLORRD_9, grey_shade, hex_to_rgb, interpolate_ramp, radius_for_total

__all__ = ["StyleSpec", "ramp_position", "color_for_flow", "circle_radius", "render"]

_LEGEND_HEIGHT = 40.0
_LEGEND_SWATCH_W = 18.0
_LEGEND_SWATCH_H = 12.0

_STYLESHEET = (
    "text{font-family:Helvetica,Arial,sans-serif;}"
    ".region{fill:#F1F1ED;stroke:#FFFFFF;stroke-width:1;}"
    ".panel-frame{fill:none;stroke:#D8D8D8;stroke-width:1;}"
    ".glyph{fill:#4D4D4D;fill-opacity:0.35;stroke:#4D4D4D;stroke-width:0.8;}"
    ".leader{fill:none;stroke-width:1.5;}"
    ".cell{stroke:#FFFFFF;stroke-width:1;}"
    ".separator{fill:none;stroke:#333333;stroke-width:2.5;}"
    ".matrix-border{fill:none;stroke:#333333;stroke-width:1.2;}"
    ".bar{fill:#8C8C8C;}"
    ".legend-swatch{stroke:#999999;stroke-width:0.5;}"
    ".highlight{stroke:#1F77B4;stroke-width:2;}"
)


def _luminance(color: str) -> float:
    r, g, b = hex_to_rgb(color)
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def _check_hex(color: str) -> None:
    if len(color) != 7 or not color.startswith("#"):
        raise ValidationError(f"bad color {color!r}: expected #RRGGBB")
    try:
        int(color[1:], 16)
    except ValueError:
        raise ValidationError(f"bad color {color!r}: expected #RRGGBB") from None


@dataclass(frozen=True)
class StyleSpec:
    """Visual encoding parameters for the rendered view.

    cell_scale is a light-to-dark sequential ramp; anchors must strictly
    lose luminance so that larger flows always read as darker cells.
    grey_range maps a 0..1 flow fraction into grey_shade's domain — the
    lower bound keeps the faintest labels and leaders visible on white.
    """

    cell_scale: tuple[str, ...] = YLORRD_9
    circle_max_radius: float = 14.0
    label_font_size: float = 11.0
    legend_font_size: float = 10.0
    grey_range: tuple[float, float] = (0.3, 1.0)
    log_scale: bool = False
    legacy_bar_charts: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "cell_scale", tuple(self.cell_scale))
        if len(self.cell_scale) < 2:
            raise ValidationError("cell_scale needs at least two anchors")
        for color in self.cell_scale:
            _check_hex(color)
        lum = [_luminance(c) for c in self.cell_scale]
        if not all(a > b for a, b in zip(lum, lum[1:])):
            raise ValidationError(
                "cell_scale anchors must strictly decrease in luminance"
            )
        if not self.circle_max_radius > 0:
            raise ValidationError("circle_max_radius must be > 0")
        if not self.label_font_size > 0 or not self.legend_font_size > 0:
            raise ValidationError("font sizes must be > 0")
        lo, hi = self.grey_range
        if not (0.0 <= lo < hi <= 1.0):
            raise ValidationError("grey_range must satisfy 0 <= lo < hi <= 1")


def ramp_position(value: float, max_flow: float, style: StyleSpec) -> float:
    """Fraction of the ramp a flow value occupies, in [0, 1].

    Linear in the value by default; the log_scale flag switches to
    log1p(value)/log1p(max), which keeps 0 -> 0 and max -> 1.
    """
    if max_flow <= 0:
        raise ValidationError("max_flow must be > 0 to position values on a ramp")
    v = max(float(value), 0.0)
    if style.log_scale:
        pos = math.log1p(v) / math.log1p(max_flow)
    else:
        pos = v / max_flow
    return min(pos, 1.0)


def color_for_flow(value: float, max_flow: float, style: StyleSpec) -> str:
    """Cell fill for a flow magnitude; zero maps to the lightest anchor."""
    return interpolate_ramp(style.cell_scale, ramp_position(value, max_flow, style))


def circle_radius(total: float, max_total: float, style: StyleSpec) -> float:
    """Glyph radius whose AREA is proportional to the region's total flow."""
    return radius_for_total(total, max_total, style.circle_max_radius)


def _n(v: float) -> str:
    s = f"{float(v):.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _attr(v: str) -> str:
    return escape(str(v), {'"': "&quot;"})


def _points(ring) -> str:
    return " ".join(f"{_n(x)},{_n(y)}" for x, y in ring)


def _cls(base: str, lit: bool) -> str:
    return f"{base} highlight" if lit else base


def _grey(fraction: float, style: StyleSpec) -> str:
    lo, hi = style.grey_range
    return grey_shade(lo + (hi - lo) * min(max(fraction, 0.0), 1.0))


def render(
    layout: MapTrixLayout,
    style: StyleSpec | None = None,
    highlights: SelectionState | None = None,
) -> bytes:
    """Serialize a layout (optionally with highlights) to SVG 1.1 bytes."""
    st = style if style is not None else StyleSpec()

    hl_origin: set[str] = set()
    hl_dest: set[str] = set()
    hl_cells: set[tuple[str, str]] = set()
    if highlights is not None:
        for h in highlights.highlights:
            if h[0] == "origin":
                hl_origin.add(h[1])
            elif h[0] == "dest":
                hl_dest.add(h[1])
            else:
                hl_cells.add((h[1], h[2]))
    # A lit cell pulls in both of its end regions and leaders; a lit region
    # pulls in its whole matrix row/column but not the opposite map.
    lit_o = hl_origin | {o for o, _ in hl_cells}
    lit_d = hl_dest | {d for _, d in hl_cells}

    ds = layout.dataset
    mx = layout.matrix
    width, height = layout.canvas
    doc_h = height + _LEGEND_HEIGHT
    out: list[str] = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_n(width)}" height="{_n(doc_h)}" '
        f'viewBox="0 0 {_n(width)} {_n(doc_h)}">\n',
        f"<style>{_STYLESHEET}</style>\n",
    ]

    def panel(tag: str, box, regions, sites, shades, lit_ids) -> None:
        out.append(f'<g id="panel-{tag}">\n')
        out.append(
            f'<rect class="panel-frame" x="{_n(box.x)}" y="{_n(box.y)}" '
            f'width="{_n(box.width)}" height="{_n(box.height)}"/>\n'
        )
        side = "o" if tag == "origin" else "d"
        for rg in regions:
            out.append(
                f'<polygon id="region-{side}-{_attr(rg.id)}" '
                f'class="{_cls("region", rg.id in lit_ids)}" '
                f'points="{_points(rg.boundary)}">'
                f"<title>{escape(rg.name)}</title></polygon>\n"
            )
        for rg, site, shade in zip(regions, sites, shades):
            r = st.circle_max_radius * math.sqrt(min(max(shade, 0.0), 1.0))
            out.append(
                f'<circle id="glyph-{side}-{_attr(rg.id)}" class="glyph" '
                f'cx="{_n(site[0])}" cy="{_n(site[1])}" r="{_n(r)}"/>\n'
            )
        if tag == "dest":
            ix, iy = box.x + 6.0, box.y + 6.0
            out.append(
                f'<g id="dest-icon" transform="translate({_n(ix)},{_n(iy)})" '
                f'fill="none" stroke="#333333" stroke-width="1.5">'
                f'<rect x="9" y="2" width="9" height="9"/>'
                f'<path d="M0 6.5 L8 6.5 M5 3.5 L8 6.5 L5 9.5"/></g>\n'
            )
        out.append("</g>\n")

    # Map panels. Glyph at each leader's connection site: circles for totals
    # sit where the leader meets the map, regions in dataset order.
    o_by_pos = [ds.origins[i] for i in layout.row_order]
    d_by_pos = [ds.destinations[j] for j in layout.col_order]
    o_sites = {rg.id: route.site for rg, route in zip(o_by_pos, layout.origin_leaders)}
    d_sites = {rg.id: route.site for rg, route in zip(d_by_pos, layout.dest_leaders)}
    panel(
        "origin",
        layout.origin_panel,
        ds.origins,
        [o_sites[rg.id] for rg in ds.origins],
        layout.label_shade_out,
        lit_o,
    )
    panel(
        "dest",
        layout.dest_panel,
        ds.destinations,
        [d_sites[rg.id] for rg in ds.destinations],
        layout.label_shade_in,
        lit_d,
    )

    # Leaders, grey-shaded by the region's share of the heaviest total.
    shade_o = dict(zip((rg.id for rg in ds.origins), layout.label_shade_out))
    shade_d = dict(zip((rg.id for rg in ds.destinations), layout.label_shade_in))
    out.append('<g id="leaders">\n')
    for side, regions, leaders, shades, lit in (
        ("o", o_by_pos, layout.origin_leaders, shade_o, lit_o),
        ("d", d_by_pos, layout.dest_leaders, shade_d, lit_d),
    ):
        for rg, route in zip(regions, leaders):
            (x0, y0), (x1, y1), (x2, y2) = route.polyline
            out.append(
                f'<path id="leader-{side}-{_attr(rg.id)}" '
                f'class="{_cls("leader", rg.id in lit)}" '
                f'stroke="{_grey(shades[rg.id], st)}" '
                f'd="M{_n(x0)} {_n(y0)} L{_n(x1)} {_n(y1)} L{_n(x2)} {_n(y2)}"/>\n'
            )
    out.append("</g>\n")

    # Edge labels: abbreviated region names just outside the port edges,
    # running parallel to the matrix edge they annotate.
    out.append('<g id="labels">\n')
    for side, regions, leaders, shades, nudge, angle in (
        ("o", o_by_pos, layout.origin_leaders, shade_o, -7.0, -45),
        ("d", d_by_pos, layout.dest_leaders, shade_d, 7.0, 45),
    ):
        for rg, route in zip(regions, leaders):
            px, py = route.port.position
            x, y = px - 7.0, py + nudge
            out.append(
                f'<text id="label-{side}-{_attr(rg.id)}" x="{_n(x)}" y="{_n(y)}" '
                f'font-size="{_n(st.label_font_size)}" '
                f'fill="{_grey(shades[rg.id], st)}" '
                f'transform="rotate({angle} {_n(x)} {_n(y)})">'
                f"{escape(rg.id)}</text>\n"
            )
    out.append("</g>\n")

    # Optional legacy total-flow bar charts beside the edge labels.
    if st.legacy_bar_charts:
        out.append('<g id="bars">\n')
        for side, regions, leaders, shades, ny in (
            ("o", o_by_pos, layout.origin_leaders, shade_o, -28.0),
            ("d", d_by_pos, layout.dest_leaders, shade_d, 28.0),
        ):
            for rg, route in zip(regions, leaders):
                px, py = route.port.position
                w = 24.0 * min(max(shades[rg.id], 0.0), 1.0)
                out.append(
                    f'<rect id="bar-{side}-{_attr(rg.id)}" class="bar" '
                    f'x="{_n(px - 28.0 - w)}" y="{_n(py + ny - 1.5)}" '
                    f'width="{_n(w)}" height="3"/>\n'
                )
        out.append("</g>\n")

    # The rotated matrix: square cells drawn in row-major position order.
    out.append('<g id="matrix">\n')
    vmax = layout.max_flow
    size = mx.cell_size
    for p, o_rg in enumerate(o_by_pos):
        for q, d_rg in enumerate(d_by_pos):
            cx, cy = mx.cell_center(p, q)
            value = layout.cell_value(p, q)
            fill = (
                color_for_flow(value, vmax, st) if vmax > 0 else st.cell_scale[0]
            )
            lit = (
                o_rg.id in hl_origin
                or d_rg.id in hl_dest
                or (o_rg.id, d_rg.id) in hl_cells
            )
            out.append(
                f'<rect id="cell-{_attr(o_rg.id)}-{_attr(d_rg.id)}" '
                f'class="{_cls("cell", lit)}" '
                f'x="{_n(cx - size / 2)}" y="{_n(cy - size / 2)}" '
                f'width="{_n(size)}" height="{_n(size)}" fill="{fill}" '
                f'transform="rotate(45 {_n(cx)} {_n(cy)})"/>\n'
            )
    lx, ly = mx.left_corner
    m, n, t, every = mx.rows, mx.cols, mx.step, mx.separator_every
    for i in range(every, m, every):
        a = (m - i) * t
        out.append(
            f'<line class="separator" x1="{_n(lx + a)}" y1="{_n(ly - a)}" '
            f'x2="{_n(lx + a + n * t)}" y2="{_n(ly - a + n * t)}"/>\n'
        )
    for j in range(every, n, every):
        b = j * t
        out.append(
            f'<line class="separator" x1="{_n(lx + b)}" y1="{_n(ly + b)}" '
            f'x2="{_n(lx + b + m * t)}" y2="{_n(ly + b - m * t)}"/>\n'
        )
    out.append(f'<polygon class="matrix-border" points="{_points(mx.corners)}"/>\n')
    out.append("</g>\n")

    # Color key: the full ramp with its value endpoints, below the content.
    # Guarantees both ramp extremes appear in every document even when no
    # cell sits exactly at zero or at the maximum.
    gx = layout.config.margin
    gy = height + 6.0
    out.append('<g id="legend">\n')
    for i, color in enumerate(st.cell_scale):
        out.append(
            f'<rect class="legend-swatch" x="{_n(gx + i * _LEGEND_SWATCH_W)}" '
            f'y="{_n(gy)}" width="{_n(_LEGEND_SWATCH_W)}" '
            f'height="{_n(_LEGEND_SWATCH_H)}" fill="{color}"/>\n'
        )
    label_y = gy + _LEGEND_SWATCH_H + st.legend_font_size + 2.0
    ramp_w = len(st.cell_scale) * _LEGEND_SWATCH_W
    out.append(
        f'<text x="{_n(gx)}" y="{_n(label_y)}" '
        f'font-size="{_n(st.legend_font_size)}" fill="#333333">0</text>\n'
    )
    out.append(
        f'<text x="{_n(gx + ramp_w)}" y="{_n(label_y)}" text-anchor="end" '
        f'font-size="{_n(st.legend_font_size)}" fill="#333333">'
        f"{_n(vmax)}</text>\n"
    )
    out.append("</g>\n")

    out.append("</svg>\n")
    return "".join(out).encode("utf-8")
