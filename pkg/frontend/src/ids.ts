/** The server renderer's stable element-id scheme, mirrored 1:1. */

export type Side = "o" | "d";

export const regionId = (side: Side, id: string): string => `region-${side}-${id}`;
export const glyphId = (side: Side, id: string): string => `glyph-${side}-${id}`;
export const leaderId = (side: Side, id: string): string => `leader-${side}-${id}`;
export const labelId = (side: Side, id: string): string => `label-${side}-${id}`;
export const cellId = (origin: string, dest: string): string => `cell-${origin}-${dest}`;
