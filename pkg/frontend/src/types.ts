/** Shapes of the layout documents served by the maptrix HTTP API. */

export type Pt = [number, number];

export interface RegionOut {
  id: string;
  name: string;
  polygon: Pt[];
  site: Pt;
  /** Matrix row (origins) or column (destinations) this region occupies. */
  position: number;
  glyph_radius: number;
  label_shade: number;
}

export interface LeaderOut {
  region_id: string;
  position: number;
  /** site -> bend -> port */
  points: Pt[];
}

export interface CellOut {
  origin: string;
  dest: string;
  row: number;
  col: number;
  value: number;
  color: string;
  center: Pt;
}

export interface MatrixOut {
  /** Region ids in row order (top-left edge) and column order. */
  rows: string[];
  cols: string[];
  step: number;
  cell_size: number;
  rotation: number;
  left_corner: Pt;
  center: Pt;
  corners: { left: Pt; top: Pt; right: Pt; bottom: Pt };
  row_ports: Pt[];
  col_ports: Pt[];
  separator_every: number | null;
}

export interface PanelOut {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface LayoutDoc {
  canvas: { width: number; height: number };
  mode: "same-country" | "two-country";
  max_flow: number;
  crossings: { origin: number; dest: number };
  refine_status: string[];
  regions: { origin: RegionOut[]; dest: RegionOut[] };
  leaders: { origin: LeaderOut[]; dest: LeaderOut[] };
  cells: CellOut[];
  matrix: MatrixOut;
  panels: { origin: PanelOut; dest: PanelOut };
}

export interface RegionGroupInput {
  id: string;
  members: string[];
}

/** Highlight descriptors as the server validates them. */
export type Highlight = ["origin", string] | ["dest", string] | ["cell", string, string];

export interface SelectionInput {
  range: [number, number] | null;
  groups: RegionGroupInput[];
  highlights: Highlight[];
}

export const emptySelection = (): SelectionInput => ({
  range: null,
  groups: [],
  highlights: [],
});
