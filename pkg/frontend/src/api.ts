/** Thin REST client for the maptrix service. Every method speaks only
 * HTTP+JSON; the fetch implementation is injectable for tests. */

import type { LayoutDoc, SelectionInput } from "./types.js";

export interface IngestResult {
  sessionId: string;
  version: number;
  mode: string;
  rows: number;
  cols: number;
}

export interface LayoutResult {
  version: number;
  layout: LayoutDoc;
}

export type PutResult =
  | { ok: true; version: number; relayout: boolean; layout: LayoutDoc }
  | { ok: false; status: number; error: string; detail?: string; current?: number };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly base: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  async ingest(flows: Blob, boundaries: Blob, mode?: string): Promise<IngestResult> {
    const form = new FormData();
    form.append("flows", flows, "flows.csv");
    form.append("boundaries", boundaries, "boundaries.geojson");
    if (mode) form.append("mode", mode);
    const resp = await this.fetchFn(`${this.base}/datasets`, { method: "POST", body: form });
    const body = await resp.json();
    if (resp.status !== 201) {
      throw new Error(`${body.error ?? resp.status}: ${body.detail ?? "ingest failed"}`);
    }
    return {
      sessionId: body.session_id,
      version: body.version,
      mode: body.mode,
      rows: body.rows,
      cols: body.cols,
    };
  }

  async layout(sessionId: string): Promise<LayoutResult> {
    const resp = await this.fetchFn(`${this.base}/sessions/${sessionId}/layout`);
    const body = await resp.json();
    if (!resp.ok) {
      throw new Error(`${body.error ?? resp.status}: ${body.detail ?? "layout fetch failed"}`);
    }
    return { version: body.version, layout: body.layout };
  }

  async putSelection(
    sessionId: string,
    version: number,
    selection: SelectionInput,
  ): Promise<PutResult> {
    const resp = await this.fetchFn(`${this.base}/sessions/${sessionId}/selection`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        version,
        range: selection.range,
        groups: selection.groups,
        highlights: selection.highlights,
      }),
    });
    const body = await resp.json();
    if (resp.ok) {
      return { ok: true, version: body.version, relayout: body.relayout, layout: body.layout };
    }
    return {
      ok: false,
      status: resp.status,
      error: body.error ?? String(resp.status),
      detail: body.detail,
      // on a version conflict the body's "version" is the server's current
      current: body.version,
    };
  }

  svgUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/svg`;
  }
}
