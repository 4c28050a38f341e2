/** Pure hover logic: a target resolves to the element ids of its full
 * origin/destination path. No network is involved anywhere here — hover
 * is a strictly client-side decoration. The sets mirror the server
 * renderer's highlight semantics so an SVG export matches the screen. */

import { cellId, leaderId, regionId } from "./ids.js";
import type { LayoutDoc } from "./types.js";

export type HoverTarget =
  | { kind: "origin"; region: string }
  | { kind: "dest"; region: string }
  | { kind: "cell"; origin: string; dest: string };

/** Read the hover target off a rendered element's data- attributes. */
export function targetOf(el: Element | null): HoverTarget | null {
  while (el) {
    const kind = (el as HTMLElement).getAttribute?.("data-kind");
    if (kind === "origin" || kind === "dest") {
      const region = el.getAttribute("data-region");
      if (region) return { kind, region };
    }
    if (kind === "cell") {
      const origin = el.getAttribute("data-origin");
      const dest = el.getAttribute("data-dest");
      if (origin && dest) return { kind, origin, dest };
    }
    el = el.parentElement;
  }
  return null;
}

/** Element ids lit by hovering `target`: an origin region lights its
 * leader and its entire matrix row; a destination region its column; a
 * cell lights itself plus both end regions and their leaders. */
export function hoverSet(doc: LayoutDoc, target: HoverTarget | null): Set<string> {
  const out = new Set<string>();
  if (!target) return out;
  if (target.kind === "origin") {
    out.add(regionId("o", target.region));
    out.add(leaderId("o", target.region));
    for (const c of doc.cells) {
      if (c.origin === target.region) out.add(cellId(c.origin, c.dest));
    }
  } else if (target.kind === "dest") {
    out.add(regionId("d", target.region));
    out.add(leaderId("d", target.region));
    for (const c of doc.cells) {
      if (c.dest === target.region) out.add(cellId(c.origin, c.dest));
    }
  } else {
    out.add(cellId(target.origin, target.dest));
    out.add(regionId("o", target.origin));
    out.add(leaderId("o", target.origin));
    out.add(regionId("d", target.dest));
    out.add(leaderId("d", target.dest));
  }
  return out;
}

/** Toggle the highlight class so exactly `ids` are lit under `root`. */
export function applyHover(root: ParentNode, ids: Set<string>): void {
  for (const el of Array.from(root.querySelectorAll(".highlight"))) {
    const id = el.getAttribute("id");
    if (!id || !ids.has(id)) el.classList.remove("highlight");
  }
  for (const id of ids) {
    const el = root.querySelector(`[id="${id}"]`);
    if (el) el.classList.add("highlight");
  }
}
