/** View state: the current layout, the selection being edited, and the
 * guards that keep a single-threaded UI consistent against an async
 * server — version monotonicity and in-flight request tokens. A response
 * that was superseded (a newer request left afterwards) or that would
 * move the version backwards is discarded, never applied. */

import type { ApiClient } from "./api.js";
import type { LayoutDoc, SelectionInput } from "./types.js";
import { emptySelection } from "./types.js";

export type ApplyOutcome = "applied" | "discarded" | "rejected" | "resynced";

export class ExplorerStore {
  layout: LayoutDoc | null = null;
  /** Previous layout, kept only while it is one version behind `layout`
   * (animations interpolate only between consecutive versions). */
  previous: LayoutDoc | null = null;
  previousVersion = -1;
  version = 0;
  sessionId: string | null = null;
  selection: SelectionInput = emptySelection();
  /** Inline error surfaced from the last rejected mutation, if any. */
  error: string | null = null;

  private inflight = 0;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ApiClient) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  async open(flows: Blob, boundaries: Blob, mode?: string): Promise<void> {
    const started = await this.api.ingest(flows, boundaries, mode);
    const current = await this.api.layout(started.sessionId);
    this.sessionId = started.sessionId;
    this.selection = emptySelection();
    this.layout = current.layout;
    this.version = current.version;
    this.previous = null;
    this.previousVersion = -1;
    this.error = null;
    this.notify();
  }

  /** Send a selection change. Resolves to what happened to the response:
   * applied, rejected (server refused; error surfaced inline), resynced
   * (our version was stale; adopted the server's current layout), or
   * discarded (a newer request superseded this one, or the response
   * arrived out of order). */
  async apply(change: Partial<SelectionInput>): Promise<ApplyOutcome> {
    if (!this.sessionId) throw new Error("no open session");
    const next: SelectionInput = { ...this.selection, ...change };
    const token = ++this.inflight;
    const res = await this.api.putSelection(this.sessionId, this.version, next);
    if (token !== this.inflight) return "discarded";
    if (!res.ok) {
      if (res.error === "StaleVersion") {
        const current = await this.api.layout(this.sessionId);
        if (token !== this.inflight) return "discarded";
        this.adopt(current.layout, current.version, false);
        return "resynced";
      }
      this.error = res.detail ?? res.error;
      this.notify();
      return "rejected";
    }
    if (res.version <= this.version) return "discarded";
    this.selection = next;
    this.error = null;
    this.adopt(res.layout, res.version, res.relayout);
    return "applied";
  }

  private adopt(doc: LayoutDoc, version: number, relayout: boolean): void {
    this.previous = relayout ? this.layout : null;
    this.previousVersion = this.version;
    this.layout = doc;
    this.version = version;
    this.notify();
  }

  /** True when the last adopted layout may be animated from `previous`. */
  canAnimate(): boolean {
    return this.previous !== null && this.version === this.previousVersion + 1;
  }
}
