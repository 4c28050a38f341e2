/** Build an SVG DOM from a layout document, mirroring the server
 * renderer's element-id scheme 1:1 (`region-o-…`, `leader-d-…`,
 * `cell-<origin>-<dest>`, …) so hover/selection logic and exported SVG
 * address the same elements. Rendering from JSON (rather than injecting
 * the server SVG) is what makes position animation possible. */

import { cellId, glyphId, labelId, leaderId, regionId, type Side } from "./ids.js";
import type { LayoutDoc, Pt } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

/** Default sequential ramp, darkest last, used only for the color key
 * strip (cells carry their own computed colors). */
export const KEY_RAMP = [
  "#FFFFCC", "#FFEDA0", "#FED976", "#FEB24C", "#FD8D3C",
  "#FC4E2A", "#E31A1C", "#BD0026", "#800026",
];

const KEY_SWATCH_W = 18;
const KEY_SWATCH_H = 12;

function el(
  doc: Document,
  tag: string,
  attrs: Record<string, string | number>,
  text?: string,
): SVGElement {
  const node = doc.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  if (text !== undefined) node.textContent = text;
  return node;
}

const fmt = (v: number): string => String(Math.round(v * 1000) / 1000);

const pointsAttr = (pts: Pt[]): string => pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");

export function leaderPath(points: Pt[]): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`)
    .join(" ");
}

function grey(shade: number): string {
  // match the server's label/leader grey: 0 -> white, 1 -> black,
  // remapped onto the visible part of the range
  const s = 0.3 + 0.7 * Math.min(Math.max(shade, 0), 1);
  const v = Math.round(255 * (1 - s));
  const hex = v.toString(16).padStart(2, "0").toUpperCase();
  return `#${hex}${hex}${hex}`;
}

function renderSide(doc: Document, layout: LayoutDoc, side: "origin" | "dest"): SVGElement {
  const s: Side = side === "origin" ? "o" : "d";
  const g = el(doc, "g", { id: `panel-${side}` });
  const box = layout.panels[side];
  g.appendChild(
    el(doc, "rect", {
      class: "panel-frame",
      x: fmt(box.x),
      y: fmt(box.y),
      width: fmt(box.width),
      height: fmt(box.height),
    }),
  );
  for (const rg of layout.regions[side]) {
    const poly = el(doc, "polygon", {
      id: regionId(s, rg.id),
      class: "region",
      points: pointsAttr(rg.polygon),
      "data-kind": side,
      "data-region": rg.id,
    });
    poly.appendChild(el(doc, "title", {}, rg.name));
    g.appendChild(poly);
  }
  for (const rg of layout.regions[side]) {
    g.appendChild(
      el(doc, "circle", {
        id: glyphId(s, rg.id),
        class: "glyph",
        cx: fmt(rg.site[0]),
        cy: fmt(rg.site[1]),
        r: fmt(rg.glyph_radius),
        "data-kind": side,
        "data-region": rg.id,
      }),
    );
  }
  return g;
}

function renderLeaders(doc: Document, layout: LayoutDoc, side: "origin" | "dest"): SVGElement {
  const s: Side = side === "origin" ? "o" : "d";
  const g = el(doc, "g", { id: `leaders-${side}` });
  const shadeOf = new Map(layout.regions[side].map((r) => [r.id, r.label_shade]));
  const byPosition = [...layout.leaders[side]].sort((a, b) => a.position - b.position);
  for (const leader of byPosition) {
    g.appendChild(
      el(doc, "path", {
        id: leaderId(s, leader.region_id),
        class: "leader",
        d: leaderPath(leader.points),
        stroke: grey(shadeOf.get(leader.region_id) ?? 1),
        "data-kind": side,
        "data-region": leader.region_id,
      }),
    );
  }
  return g;
}

/** Text anchor for a row/column label, offset from the leader's port and
 * rotated to run parallel to the matrix edge (same placement the server
 * renderer uses). */
export function labelPlacement(
  side: "origin" | "dest",
  port: Pt,
): { x: number; y: number; angle: number } {
  return {
    x: port[0] - 7,
    y: port[1] + (side === "origin" ? -7 : 7),
    angle: side === "origin" ? -45 : 45,
  };
}

function renderLabels(doc: Document, layout: LayoutDoc, side: "origin" | "dest"): SVGElement {
  const s: Side = side === "origin" ? "o" : "d";
  const g = el(doc, "g", { id: `labels-${side}` });
  const shadeOf = new Map(layout.regions[side].map((r) => [r.id, r.label_shade]));
  for (const leader of layout.leaders[side]) {
    const port = leader.points[leader.points.length - 1];
    const { x, y, angle } = labelPlacement(side, port);
    g.appendChild(
      el(
        doc,
        "text",
        {
          id: labelId(s, leader.region_id),
          class: "label",
          x: fmt(x),
          y: fmt(y),
          fill: grey(shadeOf.get(leader.region_id) ?? 1),
          transform: `rotate(${angle} ${fmt(x)} ${fmt(y)})`,
          "data-kind": side,
          "data-region": leader.region_id,
        },
        leader.region_id,
      ),
    );
  }
  return g;
}

function renderMatrix(doc: Document, layout: LayoutDoc): SVGElement {
  const g = el(doc, "g", { id: "matrix" });
  const size = layout.matrix.cell_size;
  for (const c of layout.cells) {
    const [cx, cy] = c.center;
    const rect = el(doc, "rect", {
      id: cellId(c.origin, c.dest),
      class: "cell",
      x: fmt(cx - size / 2),
      y: fmt(cy - size / 2),
      width: fmt(size),
      height: fmt(size),
      fill: c.color,
      transform: `rotate(45 ${fmt(cx)} ${fmt(cy)})`,
      "data-kind": "cell",
      "data-origin": c.origin,
      "data-dest": c.dest,
    });
    rect.appendChild(el(doc, "title", {}, `${c.origin} -> ${c.dest}: ${c.value}`));
    g.appendChild(rect);
  }
  const m = layout.matrix;
  const [lx, ly] = m.left_corner;
  const nRows = m.rows.length;
  const nCols = m.cols.length;
  if (m.separator_every) {
    const t = m.step;
    for (let i = m.separator_every; i < nRows; i += m.separator_every) {
      const a = (nRows - i) * t;
      g.appendChild(
        el(doc, "line", {
          class: "separator",
          x1: fmt(lx + a), y1: fmt(ly - a),
          x2: fmt(lx + a + nCols * t), y2: fmt(ly - a + nCols * t),
        }),
      );
    }
    for (let j = m.separator_every; j < nCols; j += m.separator_every) {
      const b = j * t;
      g.appendChild(
        el(doc, "line", {
          class: "separator",
          x1: fmt(lx + b), y1: fmt(ly + b),
          x2: fmt(lx + b + nRows * t), y2: fmt(ly + b - nRows * t),
        }),
      );
    }
  }
  const c = m.corners;
  g.appendChild(
    el(doc, "polygon", {
      class: "matrix-border",
      points: pointsAttr([c.left, c.top, c.right, c.bottom]),
    }),
  );
  return g;
}

export interface KeyScale {
  x0: number;
  x1: number;
  y: number;
  max: number;
}

/** Geometry of the color key strip: where it sits and what value range
 * it spans. The brush converts pointer x back through this scale. */
export function keyScale(layout: LayoutDoc): KeyScale {
  return {
    x0: 24,
    x1: 24 + KEY_RAMP.length * KEY_SWATCH_W,
    y: layout.canvas.height + 6,
    max: layout.max_flow,
  };
}

function renderKey(doc: Document, layout: LayoutDoc): SVGElement {
  const g = el(doc, "g", { id: "color-key" });
  const scale = keyScale(layout);
  KEY_RAMP.forEach((color, i) => {
    g.appendChild(
      el(doc, "rect", {
        class: "legend-swatch",
        x: fmt(scale.x0 + i * KEY_SWATCH_W),
        y: fmt(scale.y),
        width: KEY_SWATCH_W,
        height: KEY_SWATCH_H,
        fill: color,
      }),
    );
  });
  g.appendChild(
    el(doc, "text", { class: "legend", x: fmt(scale.x0), y: fmt(scale.y + KEY_SWATCH_H + 11) }, "0"),
  );
  g.appendChild(
    el(
      doc,
      "text",
      { class: "legend", x: fmt(scale.x1), y: fmt(scale.y + KEY_SWATCH_H + 11), "text-anchor": "end" },
      String(layout.max_flow),
    ),
  );
  // transparent hit area on top of the swatches for range brushing
  g.appendChild(
    el(doc, "rect", {
      id: "key-brush-target",
      x: fmt(scale.x0),
      y: fmt(scale.y - 4),
      width: fmt(scale.x1 - scale.x0),
      height: KEY_SWATCH_H + 8,
      fill: "transparent",
    }),
  );
  return g;
}

/** Render a layout document into a fresh `<svg>` element. */
export function renderDoc(layout: LayoutDoc, doc: Document = document): SVGSVGElement {
  const keyHeight = 40;
  const width = layout.canvas.width;
  const height = layout.canvas.height + keyHeight;
  const svg = el(doc, "svg", {
    xmlns: SVG_NS,
    viewBox: `0 0 ${fmt(width)} ${fmt(height)}`,
    width: fmt(width),
    height: fmt(height),
  }) as SVGSVGElement;
  svg.appendChild(renderSide(doc, layout, "origin"));
  svg.appendChild(renderSide(doc, layout, "dest"));
  svg.appendChild(renderLeaders(doc, layout, "origin"));
  svg.appendChild(renderLeaders(doc, layout, "dest"));
  svg.appendChild(renderLabels(doc, layout, "origin"));
  svg.appendChild(renderLabels(doc, layout, "dest"));
  svg.appendChild(renderMatrix(doc, layout));
  svg.appendChild(renderKey(doc, layout));
  return svg;
}
