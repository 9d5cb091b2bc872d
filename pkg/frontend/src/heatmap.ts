import { renderHeatmap, type HeatmapBand } from "./charts.js";
import { clear, el } from "./dom.js";
import type { DocumentStore } from "./store.js";
import { handoverIndices } from "./trace.js";

/**
 * Per-UAV latency heatmap. Each loaded flow trace documents one UAV's
 * journey (its serving cell travels with it), so every trace becomes one
 * band; cells where the serving gNB just changed carry a handover outline,
 * which makes handover-induced latency spikes stand out.
 */
export class UavHeatmap {
  private root!: HTMLElement;

  constructor(private readonly store: DocumentStore) {
    store.onChange(() => this.render());
  }

  init(root: HTMLElement): void {
    this.root = root;
    clear(root);
    root.append(
      el("h2", {}, "Per-UAV latency"),
      el("div", { id: "heatmap-note" }),
      el("section", { id: "heatmap-chart", class: "chart-box" }),
    );
    this.render();
  }

  render(): void {
    if (!this.root) return;
    const note = this.root.querySelector("#heatmap-note") as HTMLElement;
    const box = this.root.querySelector("#heatmap-chart") as HTMLElement;
    clear(box);
    const traces = this.store.traces;
    if (traces.length === 0) {
      note.textContent = "load one flow trace per UAV to compare latency";
      return;
    }
    const bands: HeatmapBand[] = traces.map((trace) => {
      const handovers = new Set(handoverIndices(trace.records));
      return {
        label: trace.label,
        cells: trace.records.map((rec, i) => ({
          x: rec.time_s,
          value: rec.latency_ms,
          marker: handovers.has(i),
        })),
      };
    });
    note.textContent = `${bands.length} UAV band${bands.length === 1 ? "" : "s"}`;
    box.append(renderHeatmap(bands, { valueLabel: "latency (ms)" }));
  }
}
