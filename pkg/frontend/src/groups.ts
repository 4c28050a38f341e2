/** Click-to-accumulate region grouping. Two drafts (A and B) collect
 * region ids; a region belongs to at most one draft - clicking it under
 * the other slot moves it, clicking it again under its own slot removes
 * it. Contiguity is the server's call: the drafts are submitted as-is
 * and a rejection is surfaced to the caller. */

import type { RegionGroupInput } from "./types.js";

export type Slot = "A" | "B";

export class GroupDraft {
  readonly members: Record<Slot, Set<string>> = { A: new Set(), B: new Set() };

  toggle(slot: Slot, regionId: string): void {
    const mine = this.members[slot];
    const other = this.members[slot === "A" ? "B" : "A"];
    if (mine.has(regionId)) {
      mine.delete(regionId);
      return;
    }
    other.delete(regionId);
    mine.add(regionId);
  }

  clear(): void {
    this.members.A.clear();
    this.members.B.clear();
  }

  /** Groups ready to submit; empty drafts are omitted, and a draft with a
   * single member is still a group (the server treats it as a rename-free
   * merge of one). */
  toGroups(): RegionGroupInput[] {
    const out: RegionGroupInput[] = [];
    for (const slot of ["A", "B"] as const) {
      const ids = [...this.members[slot]].sort();
      if (ids.length > 0) out.push({ id: `group-${slot}`, members: ids });
    }
    return out;
  }
}
