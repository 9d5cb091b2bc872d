import { ApiError, ServiceClient } from "./api.js";
import { renderHistogram, renderPointTimeline } from "./charts.js";
import { clear, el } from "./dom.js";
import type { DocumentStore } from "./store.js";
import type { DecisionPointDoc } from "./types.js";

/**
 * Decision-point view: sends the selected flow trace to the service
 * annotator and renders the returned points as a timeline plus a per-kind
 * histogram. Detection happens server-side; this view never re-derives it.
 */
export class DecisionAnalyzer {
  private root!: HTMLElement;
  private lastPoints: DecisionPointDoc[] = [];

  /** In-flight annotate request; tests await this after a store change. */
  pending: Promise<void> | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly store: DocumentStore,
  ) {
    store.onChange(() => {
      this.pending = this.render();
    });
  }

  init(root: HTMLElement): void {
    this.root = root;
    clear(root);
    root.append(
      el("h2", {}, "Decision points"),
      el("div", { id: "annotate-error", class: "error-text" }),
      el("div", { id: "point-count" }),
      el("section", { id: "point-timeline", class: "chart-box" }),
      el("section", { id: "point-histogram", class: "chart-box" }),
      el("ul", { id: "point-list" }),
    );
    this.pending = this.render();
  }

  private byId(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!(node instanceof HTMLElement)) throw new Error(`missing #${id}`);
    return node;
  }

  async render(): Promise<void> {
    if (!this.root) return;
    const errBox = this.byId("annotate-error");
    const countBox = this.byId("point-count");
    const timeline = this.byId("point-timeline");
    const histogram = this.byId("point-histogram");
    const list = this.byId("point-list");
    errBox.textContent = "";
    clear(timeline);
    clear(histogram);
    clear(list);

    const doc = this.store.selected;
    if (doc === null) {
      countBox.textContent = "no document loaded";
      this.lastPoints = [];
      return;
    }
    if (doc.kind !== "trace") {
      countBox.textContent = "decision analysis applies to flow traces";
      this.lastPoints = [];
      return;
    }

    let points: DecisionPointDoc[];
    try {
      const resp = await this.client.annotate(doc.text);
      points = resp.points;
    } catch (exc) {
      errBox.textContent = exc instanceof ApiError ? exc.detail : String(exc);
      this.lastPoints = [];
      return;
    }
    this.lastPoints = points;
    countBox.textContent = `${points.length} decision points in ${doc.label}`;

    const t0 = doc.records[0]?.time_s ?? 0;
    const t1 = doc.records[doc.records.length - 1]?.time_s ?? 1;
    timeline.append(
      renderPointTimeline(
        points.map((p) => ({ x: p.time_s, kind: p.kind, title: p.detail })),
        { x0: t0, x1: t1 },
      ),
    );

    const counts: Record<string, number> = {};
    for (const p of points) {
      counts[p.kind] = (counts[p.kind] ?? 0) + 1;
    }
    histogram.append(renderHistogram(counts));

    for (const p of points) {
      list.append(el("li", { class: `point-item point-${p.kind}` },
        `t=${p.time_s}s [${p.kind}] ${p.detail}`));
    }
  }

  points(): DecisionPointDoc[] {
    return this.lastPoints;
  }
}
