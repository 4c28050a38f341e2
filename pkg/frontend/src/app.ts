/** Page wiring: file upload, hover decoration, persistent highlights,
 * range brushing on the color key, group drafting, and animated
 * relayouts. All server interaction goes through ExplorerStore; hover
 * never touches the network. */

import { ANIMATION_MS, diffDocs, runAnimation } from "./animate.js";
import { ApiClient } from "./api.js";
import { brushRange } from "./brush.js";
import { GroupDraft, type Slot } from "./groups.js";
import { applyHover, hoverSet, targetOf, type HoverTarget } from "./hover.js";
import { keyScale, renderDoc } from "./renderDoc.js";
import { ExplorerStore } from "./store.js";
import type { Highlight } from "./types.js";

type Tool = "highlight" | "A" | "B";

const asTarget = (h: Highlight): HoverTarget =>
  h[0] === "cell"
    ? { kind: "cell", origin: h[1], dest: h[2] }
    : { kind: h[0], region: h[1] };

const sameHighlight = (a: Highlight, b: Highlight): boolean =>
  JSON.stringify(a) === JSON.stringify(b);

const toHighlight = (t: HoverTarget): Highlight =>
  t.kind === "cell" ? ["cell", t.origin, t.dest] : [t.kind, t.region];

function must<T extends Element>(sel: string): T {
  const node = document.querySelector(sel);
  if (!node) throw new Error(`missing element ${sel}`);
  return node as T;
}

/** Wire the page. The API client is injectable so tests can script the
 * transport; the returned store is exposed for the same reason. */
export function boot(api: ApiClient = new ApiClient("")): ExplorerStore {
  const store = new ExplorerStore(api);
  const draft = new GroupDraft();

  const canvas = must<HTMLDivElement>("#canvas");
  const statusBar = must<HTMLDivElement>("#status");
  const errorBox = must<HTMLDivElement>("#error");
  const toolbar = must<HTMLDivElement>("#toolbar");
  const exportLink = must<HTMLAnchorElement>("#export-svg");

  let tool: Tool = "highlight";
  let hovered: HoverTarget | null = null;
  let cancelAnim: (() => void) | null = null;

  const showError = (msg: string | null): void => {
    errorBox.textContent = msg ?? "";
    errorBox.hidden = !msg;
  };

  /** Ids lit right now: the hovered path plus every persisted highlight. */
  const litIds = (): Set<string> => {
    const doc = store.layout;
    const out = new Set<string>();
    if (!doc) return out;
    for (const id of hoverSet(doc, hovered)) out.add(id);
    for (const h of store.selection.highlights) {
      for (const id of hoverSet(doc, asTarget(h))) out.add(id);
    }
    return out;
  };

  const paintDraft = (): void => {
    for (const el of Array.from(canvas.querySelectorAll(".group-a, .group-b"))) {
      el.classList.remove("group-a", "group-b");
    }
    for (const slot of ["A", "B"] as const) {
      for (const rid of draft.members[slot]) {
        for (const el of Array.from(canvas.querySelectorAll(`[data-region="${rid}"]`))) {
          el.classList.add(slot === "A" ? "group-a" : "group-b");
        }
      }
    }
  };

  const render = (): void => {
    const doc = store.layout;
    showError(store.error);
    if (!doc) return;
    cancelAnim?.();
    cancelAnim = null;
    const svg = renderDoc(doc);
    canvas.replaceChildren(svg);
    toolbar.hidden = false;
    if (store.sessionId) exportLink.setAttribute("href", api.svgUrl(store.sessionId));
    const rows = doc.regions.origin.length;
    const cols = doc.regions.dest.length;
    statusBar.textContent = `${doc.mode} · ${rows} origins × ${cols} destinations · version ${store.version}`;
    applyHover(svg, litIds());
    paintDraft();
    if (store.canAnimate() && store.previous) {
      cancelAnim = runAnimation(svg, diffDocs(store.previous, doc), ANIMATION_MS);
    }
  };

  store.onChange(render);

  // --- dataset upload -----------------------------------------------------
  const form = must<HTMLFormElement>("#open-form");
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const flows = must<HTMLInputElement>("#flows-file").files?.[0];
    const boundaries = must<HTMLInputElement>("#boundaries-file").files?.[0];
    const mode = must<HTMLSelectElement>("#mode-select").value || undefined;
    if (!flows || !boundaries) return;
    showError(null);
    store.open(flows, boundaries, mode).catch((err: unknown) => {
      showError(err instanceof Error ? err.message : String(err));
    });
  });

  // --- hover (client-side only) --------------------------------------------
  canvas.addEventListener("mousemove", (ev) => {
    const target = targetOf(ev.target as Element | null);
    const changed =
      JSON.stringify(target) !== JSON.stringify(hovered);
    if (!changed) return;
    hovered = target;
    applyHover(canvas, litIds());
  });
  canvas.addEventListener("mouseleave", () => {
    hovered = null;
    applyHover(canvas, litIds());
  });

  // --- clicks: persistent highlights or group drafting ---------------------
  canvas.addEventListener("click", (ev) => {
    const target = targetOf(ev.target as Element | null);
    if (!target) return;
    if (tool === "highlight") {
      const h = toHighlight(target);
      const current = store.selection.highlights;
      const next = current.some((x) => sameHighlight(x, h))
        ? current.filter((x) => !sameHighlight(x, h))
        : [...current, h];
      void store.apply({ highlights: next });
    } else if (target.kind !== "cell") {
      draft.toggle(tool, target.region);
      paintDraft();
    }
  });

  // --- toolbar --------------------------------------------------------------
  const toolButtons: Array<[string, Tool]> = [
    ["#mode-highlight", "highlight"],
    ["#mode-group-A", "A"],
    ["#mode-group-B", "B"],
  ];
  for (const [sel, value] of toolButtons) {
    must<HTMLButtonElement>(sel).addEventListener("click", () => {
      tool = value;
      for (const [other] of toolButtons) {
        must<HTMLButtonElement>(other).classList.toggle("active", other === sel);
      }
    });
  }

  must<HTMLButtonElement>("#apply-groups").addEventListener("click", () => {
    void store.apply({ groups: draft.toGroups() }).then((outcome) => {
      // a rejection (e.g. non-contiguous members) leaves the draft intact
      // so the user can fix it; the server error is already shown inline
      if (outcome === "applied") paintDraft();
    });
  });

  must<HTMLButtonElement>("#clear-selection").addEventListener("click", () => {
    draft.clear();
    void store.apply({ range: null, groups: [], highlights: [] });
  });

  // --- range brush over the color key ---------------------------------------
  let brushStart: number | null = null;
  const keyX = (ev: MouseEvent): number | null => {
    const svg = canvas.querySelector("svg");
    if (!svg) return null;
    const box = svg.getBoundingClientRect();
    return ev.clientX - box.left;
  };
  canvas.addEventListener("mousedown", (ev) => {
    const el = ev.target as Element | null;
    if (el?.getAttribute("id") === "key-brush-target") brushStart = keyX(ev);
  });
  canvas.addEventListener("mouseup", (ev) => {
    if (brushStart === null || !store.layout) return;
    const end = keyX(ev);
    const start = brushStart;
    brushStart = null;
    if (end === null) return;
    const range = brushRange(keyScale(store.layout), start, end);
    void store.apply({ range });
  });

  return store;
}
