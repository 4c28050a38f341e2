/** Range brushing over the color key: convert pointer positions on the
 * key strip into a [lo, hi] flow-value window. */

import type { KeyScale } from "./renderDoc.js";

const clamp = (v: number, lo: number, hi: number): number => Math.min(Math.max(v, lo), hi);

/** Map a pointer x coordinate on the key strip to a flow value. */
export function valueAt(scale: KeyScale, px: number): number {
  const frac = (clamp(px, scale.x0, scale.x1) - scale.x0) / (scale.x1 - scale.x0);
  return frac * scale.max;
}

/** Turn a drag (down at xa, up at xb) into a sorted value range, or null
 * for a degenerate click (no horizontal movement worth filtering on). */
export function brushRange(scale: KeyScale, xa: number, xb: number): [number, number] | null {
  if (Math.abs(xa - xb) < 2) return null;
  const a = valueAt(scale, xa);
  const b = valueAt(scale, xb);
  return a <= b ? [a, b] : [b, a];
}
