/** Position interpolation between two consecutive layout versions.
 *
 * The DOM always shows the *new* layout; an animation is a set of tracks,
 * one per element present in both versions, that replay the element's
 * attributes from its old position (t=0) to its new one (t=1). Elements
 * that only exist in the new layout fade in. Elements that only existed
 * in the old layout are simply gone - the new DOM never contained them.
 * Interpolation is linear so that positions at any t are exactly the
 * weighted average of the endpoints.
 */

import { cellId, glyphId, labelId, leaderId, regionId, type Side } from "./ids.js";
import { labelPlacement, leaderPath } from "./renderDoc.js";
import type { LayoutDoc, Pt } from "./types.js";

export const ANIMATION_MS = 300;

export type AttrFrame = Record<string, string>;

export interface Track {
  id: string;
  /** Attribute values at progress t in [0, 1]. */
  at(t: number): AttrFrame;
}

const lerp = (a: number, b: number, t: number): number => a + (b - a) * t;

const lerpPt = (a: Pt, b: Pt, t: number): Pt => [lerp(a[0], b[0], t), lerp(a[1], b[1], t)];

const fmt = (v: number): string => String(Math.round(v * 1000) / 1000);

function leaderTrack(id: string, from: Pt[], to: Pt[]): Track {
  return {
    id,
    at: (t) => ({ d: leaderPath(to.map((p, i) => lerpPt(from[i] ?? p, p, t))) }),
  };
}

function cellTrack(id: string, from: { center: Pt; size: number }, to: { center: Pt; size: number }): Track {
  return {
    id,
    at: (t) => {
      const [cx, cy] = lerpPt(from.center, to.center, t);
      const size = lerp(from.size, to.size, t);
      return {
        x: fmt(cx - size / 2),
        y: fmt(cy - size / 2),
        width: fmt(size),
        height: fmt(size),
        transform: `rotate(45 ${fmt(cx)} ${fmt(cy)})`,
      };
    },
  };
}

function glyphTrack(id: string, from: { site: Pt; r: number }, to: { site: Pt; r: number }): Track {
  return {
    id,
    at: (t) => {
      const [cx, cy] = lerpPt(from.site, to.site, t);
      return { cx: fmt(cx), cy: fmt(cy), r: fmt(lerp(from.r, to.r, t)) };
    },
  };
}

function labelTrack(id: string, side: "origin" | "dest", from: Pt, to: Pt): Track {
  return {
    id,
    at: (t) => {
      const { x, y, angle } = labelPlacement(side, lerpPt(from, to, t));
      return { x: fmt(x), y: fmt(y), transform: `rotate(${angle} ${fmt(x)} ${fmt(y)})` };
    },
  };
}

const fadeTrack = (id: string): Track => ({ id, at: (t) => ({ opacity: fmt(t) }) });

/** Compare two consecutive layouts and build the animation tracks. */
export function diffDocs(prev: LayoutDoc, next: LayoutDoc): Track[] {
  const tracks: Track[] = [];
  for (const side of ["origin", "dest"] as const) {
    const s: Side = side === "origin" ? "o" : "d";
    const prevLeaders = new Map(prev.leaders[side].map((l) => [l.region_id, l]));
    for (const leader of next.leaders[side]) {
      const old = prevLeaders.get(leader.region_id);
      if (old) {
        tracks.push(leaderTrack(leaderId(s, leader.region_id), old.points, leader.points));
        const oldPort = old.points[old.points.length - 1];
        const newPort = leader.points[leader.points.length - 1];
        tracks.push(labelTrack(labelId(s, leader.region_id), side, oldPort, newPort));
      } else {
        tracks.push(fadeTrack(leaderId(s, leader.region_id)));
        tracks.push(fadeTrack(labelId(s, leader.region_id)));
      }
    }
    const prevRegions = new Map(prev.regions[side].map((r) => [r.id, r]));
    for (const rg of next.regions[side]) {
      const old = prevRegions.get(rg.id);
      if (old) {
        if (
          old.site[0] !== rg.site[0] ||
          old.site[1] !== rg.site[1] ||
          old.glyph_radius !== rg.glyph_radius
        ) {
          tracks.push(
            glyphTrack(
              glyphId(s, rg.id),
              { site: old.site, r: old.glyph_radius },
              { site: rg.site, r: rg.glyph_radius },
            ),
          );
        }
      } else {
        tracks.push(fadeTrack(glyphId(s, rg.id)));
        tracks.push(fadeTrack(regionId(s, rg.id)));
      }
    }
  }
  const prevCells = new Map(prev.cells.map((c) => [cellId(c.origin, c.dest), c]));
  const size0 = prev.matrix.cell_size;
  const size1 = next.matrix.cell_size;
  for (const c of next.cells) {
    const id = cellId(c.origin, c.dest);
    const old = prevCells.get(id);
    if (old) {
      tracks.push(cellTrack(id, { center: old.center, size: size0 }, { center: c.center, size: size1 }));
    } else {
      tracks.push(fadeTrack(id));
    }
  }
  return tracks;
}

/** Write one frame's attributes onto the live elements. Missing ids are
 * skipped (the element may have been removed by a newer render). */
export function applyFrame(root: ParentNode, tracks: Track[], t: number): void {
  for (const track of tracks) {
    const node = root.querySelector(`[id="${track.id}"]`);
    if (!node) continue;
    for (const [name, value] of Object.entries(track.at(t))) {
      node.setAttribute(name, value);
    }
  }
}

export interface Clock {
  now(): number;
  /** Schedule cb for the next frame; returns nothing. */
  schedule(cb: () => void): void;
}

export const browserClock: Clock = {
  now: () => performance.now(),
  schedule: (cb) => requestAnimationFrame(() => cb()),
};

/** Drive the tracks from t=0 to t=1 over `duration` ms. Returns a cancel
 * function; cancelling leaves the elements at their final attributes. */
export function runAnimation(
  root: ParentNode,
  tracks: Track[],
  duration: number,
  clock: Clock = browserClock,
  done?: () => void,
): () => void {
  let cancelled = false;
  const start = clock.now();
  const step = (): void => {
    if (cancelled) return;
    const t = duration <= 0 ? 1 : Math.min(1, (clock.now() - start) / duration);
    applyFrame(root, tracks, t);
    if (t < 1) clock.schedule(step);
    else done?.();
  };
  step();
  return () => {
    if (!cancelled) {
      cancelled = true;
      applyFrame(root, tracks, 1);
    }
  };
}
