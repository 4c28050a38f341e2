"""Visual encoding helpers: sequential color ramp, glyph sizing, greys.

Kept free of project imports so both the assembler and the SVG renderer
can share one source of truth for color and size encodings.
"""

from __future__ import annotations

import math

import numpy as np

# 9-class yellow-orange-red sequential ramp, lightest to darkest.
YLORRD_9: tuple[str, ...] = (
    "#FFFFCC",
    "#FFEDA0",
    "#FED976",
    "#FEB24C",
    "#FD8D3C",
    "#FC4E2A",
    "#E31A1C",
    "#BD0026",
    "#800026",
)


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    c = color.lstrip("#")
    return (int(c[0:2], 16), int(c[2:4], 16), int(c[4:6], 16))


def rgb_to_hex(r: int, g: int, b: int) -> str:
    return f"#{r:02X}{g:02X}{b:02X}"


def interpolate_ramp(anchors, frac: float) -> str:
    """Piecewise-linear color between evenly spaced hex anchors.

    frac is clamped to [0, 1]; 0 yields the first anchor, 1 the last.
    """
    anchors = list(anchors)
    if not anchors:
        raise ValueError("need at least one color anchor")
    if len(anchors) == 1:
        return anchors[0]
    pos = min(max(float(frac), 0.0), 1.0) * (len(anchors) - 1)
    lo = min(int(math.floor(pos)), len(anchors) - 2)
    t = pos - lo
    a = hex_to_rgb(anchors[lo])
    b = hex_to_rgb(anchors[lo + 1])
    return rgb_to_hex(*(round(x + (y - x) * t) for x, y in zip(a, b)))


def color_for_flow(value: float, max_value: float) -> str:
    """Map a flow magnitude onto the ramp; zero maps to the lightest."""
    if max_value <= 0:
        return YLORRD_9[0]
    return interpolate_ramp(YLORRD_9, value / max_value)


_RAMP_RGB = np.array([hex_to_rgb(c) for c in YLORRD_9], dtype=float)


def colors_for_flows(values, max_value: float) -> list[list[str]]:
    """color_for_flow over a whole matrix in one vectorized pass.

    Channel arithmetic matches the scalar path bit for bit (same lerp
    expression, round-half-even), so mixed use stays byte-stable.
    """
    vals = np.asarray(values, dtype=float)
    if max_value <= 0:
        return [[YLORRD_9[0]] * vals.shape[1] for _ in range(vals.shape[0])]
    pos = np.clip(vals / max_value, 0.0, 1.0) * (len(YLORRD_9) - 1)
    lo = np.minimum(np.floor(pos).astype(int), len(YLORRD_9) - 2)
    t = pos - lo
    a = _RAMP_RGB[lo]
    b = _RAMP_RGB[lo + 1]
    rgb = np.rint(a + (b - a) * t[..., None]).astype(int)
    return [
        [f"#{r:02X}{g:02X}{bl:02X}" for r, g, bl in row]
        for row in rgb
    ]


def radius_for_total(total: float, max_total: float, max_radius: float) -> float:
    """Circle radius so that glyph AREA is proportional to the total."""
    if max_total <= 0:
        return 0.0
    return max_radius * math.sqrt(max(total, 0.0) / max_total)


def grey_shade(fraction: float) -> str:
    """Grey from white (0) to black (1), for text emphasis by magnitude."""
    f = min(max(float(fraction), 0.0), 1.0)
    v = round(255 * (1.0 - f))
    return rgb_to_hex(v, v, v)
