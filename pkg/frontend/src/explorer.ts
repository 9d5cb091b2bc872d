import { renderMetricPanels, type BoundSpec, type PanelSpec, type RegionMark,
  type VerticalMark } from "./charts.js";
import { clear, el } from "./dom.js";
import { DEFAULT_SLA } from "./sla.js";
import type { DocumentStore, LoadedDocument, LoadedTrace,
  LoadedTrajectory } from "./store.js";
import { handoverIndices, violationRegions, type TraceRecord } from "./trace.js";
import { handoverSteps } from "./trajectory.js";
import type { MetricDim, NetworkStateDoc, SliceName } from "./types.js";
import { METRIC_DIMS } from "./types.js";

const SLICE_LEVEL: Record<SliceName, number> = { EMBB: 0, URLLC: 1, MMTC: 2 };

const PANEL_LABELS: Record<MetricDim, string> = {
  latency_ms: "latency (ms)",
  jitter_ms: "jitter (ms)",
  loss_rate: "loss rate",
  throughput_mbps: "throughput (Mbps)",
  edge_load: "edge load",
};

function boundsForDim(dim: MetricDim, slices: SliceName[]): BoundSpec[] {
  const specs: BoundSpec[] = [];
  for (const slc of slices) {
    const b = DEFAULT_SLA[slc];
    const [value, kind]: [number, "max" | "min"] =
      dim === "latency_ms" ? [b.max_latency_ms, "max"]
      : dim === "jitter_ms" ? [b.max_jitter_ms, "max"]
      : dim === "loss_rate" ? [b.max_loss_rate, "max"]
      : dim === "throughput_mbps" ? [b.min_throughput_mbps, "min"]
      : [b.max_edge_load, "max"];
    const sign = kind === "max" ? "≤" : "≥";
    const existing = specs.find((s) => s.value === value && s.kind === kind);
    if (existing) {
      existing.label = `${sign} ${value}`;
    } else {
      specs.push({ value, kind, label: `${slc} ${sign} ${value}` });
    }
  }
  return specs;
}

function slicesPresent(samples: { slice: SliceName }[]): SliceName[] {
  const seen = new Set<SliceName>();
  for (const s of samples) seen.add(s.slice);
  return [...seen];
}

function tracePanels(records: TraceRecord[]): PanelSpec[] {
  const slices = slicesPresent(records);
  const panels: PanelSpec[] = [
    {
      dim: "slice",
      label: "slice",
      step: true,
      points: records.map((r) => ({ x: r.time_s, y: SLICE_LEVEL[r.slice] })),
      yTicks: (["EMBB", "URLLC", "MMTC"] as const).map((s) => ({
        value: SLICE_LEVEL[s],
        label: s,
      })),
    },
  ];
  for (const dim of METRIC_DIMS) {
    panels.push({
      dim,
      label: PANEL_LABELS[dim],
      points: records.map((r) => ({ x: r.time_s, y: r[dim] })),
      bounds: boundsForDim(dim, slices),
    });
  }
  return panels;
}

function trajectoryPanels(states: NetworkStateDoc[]): PanelSpec[] {
  const slices = slicesPresent(states);
  const panels: PanelSpec[] = [
    {
      dim: "slice",
      label: "slice",
      step: true,
      points: states.map((s, i) => ({ x: i, y: SLICE_LEVEL[s.slice] })),
      yTicks: (["EMBB", "URLLC", "MMTC"] as const).map((s) => ({
        value: SLICE_LEVEL[s],
        label: s,
      })),
    },
  ];
  for (const dim of METRIC_DIMS) {
    panels.push({
      dim,
      label: PANEL_LABELS[dim],
      points: states.map((s, i) => ({ x: i, y: s[dim] })),
      bounds: boundsForDim(dim, slices),
    });
  }
  return panels;
}

/**
 * Loads trace and trajectory documents and renders the six metric series
 * with SLA bound overlays, violation regions, and handover markers.
 */
export class TraceExplorer {
  private root!: HTMLElement;
  private counter = 0;

  constructor(private readonly store: DocumentStore) {
    store.onChange(() => {
      this.refreshPicker();
      this.render();
    });
  }

  init(root: HTMLElement): void {
    this.root = root;
    clear(root);
    root.append(
      el("section", { class: "load-box" },
        el("h2", {}, "Load a document"),
        el("input", { id: "trace-file", type: "file" }),
        el("textarea", { id: "trace-text", rows: "5",
          placeholder: "paste a flow-trace CSV or trajectory JSONL" }),
        el("button", { id: "load-trace", type: "button" }, "load"),
        el("div", { id: "load-error", class: "error-text" }),
      ),
      el("section", { class: "picker-box" },
        el("label", {}, "document ", el("select", { id: "doc-picker" })),
        el("span", { id: "doc-summary" }),
      ),
      el("section", { id: "explorer-chart", class: "chart-box" }),
    );

    this.byId("load-trace").addEventListener("click", () => {
      const text = (this.byId("trace-text") as HTMLTextAreaElement).value;
      this.loadText(text, `pasted-${++this.counter}`);
    });
    const fileInput = this.byId("trace-file") as HTMLInputElement;
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (!file) return;
      void file.text().then((text) => this.loadText(text, file.name));
    });
    (this.byId("doc-picker") as HTMLSelectElement).addEventListener("change", (ev) => {
      this.store.select(Number((ev.target as HTMLSelectElement).value));
    });
    this.render();
  }

  private byId(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!(node instanceof HTMLElement)) throw new Error(`missing #${id}`);
    return node;
  }

  /** Parse and add a document; parse failures surface in #load-error. */
  loadText(text: string, label: string): boolean {
    const errBox = this.byId("load-error");
    errBox.textContent = "";
    try {
      this.store.load(text, label);
      return true;
    } catch (exc) {
      errBox.textContent = (exc as Error).message;
      return false;
    }
  }

  private refreshPicker(): void {
    const picker = this.byId("doc-picker") as HTMLSelectElement;
    clear(picker);
    this.store.documents.forEach((doc, i) => {
      picker.append(el("option", { value: String(i) },
        `${doc.label} (${doc.kind})`));
    });
    picker.value = String(this.store.selectedIndex);
  }

  render(): void {
    const box = this.byId("explorer-chart");
    clear(box);
    const doc = this.store.selected;
    const summary = this.byId("doc-summary");
    if (doc === null) {
      summary.textContent = "";
      box.append(el("p", { class: "idle-note" }, "no document loaded"));
      return;
    }
    if (doc.kind === "trace") {
      this.renderTrace(doc, box, summary);
    } else {
      this.renderTrajectory(doc, box, summary);
    }
  }

  private renderTrace(doc: LoadedTrace, box: HTMLElement, summary: HTMLElement): void {
    const records = doc.records;
    const regions = violationRegions(records);
    const dt = records.length > 1
      ? (records[1]!.time_s - records[0]!.time_s) || 1
      : 1;
    const regionMarks: RegionMark[] = regions.map((r) => ({
      start: r.startTime,
      end: r.endTime + dt,
    }));
    const verticals: VerticalMark[] = handoverIndices(records).map((i) => ({
      x: records[i]!.time_s,
      cls: "handover-marker",
      label: "HO",
    }));
    summary.textContent =
      `${records.length} records, ${regions.length} violation region` +
      `${regions.length === 1 ? "" : "s"}, ${verticals.length} handovers`;
    box.append(
      renderMetricPanels(tracePanels(records), regionMarks, verticals,
        { xLabel: "time (s)" }),
    );
  }

  private renderTrajectory(doc: LoadedTrajectory, box: HTMLElement,
      summary: HTMLElement): void {
    const states = doc.doc.entries.map((e) => e.state_after);
    const regionMarks = stateRegions(states);
    const verticals: VerticalMark[] = handoverSteps(doc.doc).map((step) => ({
      x: step,
      cls: "handover-marker",
      label: "HO",
    }));
    for (const e of doc.doc.entries) {
      const prevIdx = doc.doc.entries.indexOf(e) - 1;
      const prev = doc.doc.entries[prevIdx];
      const started = e.degradation_active !== null &&
        (prev === undefined || prev.degradation_active === null);
      if (started && e.degradation_active) {
        verticals.push({
          x: e.step_index,
          cls: "degradation-marker",
          label: e.degradation_active.kind,
        });
      }
    }
    summary.textContent =
      `${doc.doc.entries.length} steps, outcome ${doc.doc.outcome}, ` +
      `${regionMarks.length} violation region${regionMarks.length === 1 ? "" : "s"}`;
    box.append(
      renderMetricPanels(trajectoryPanels(states), regionMarks, verticals,
        { xLabel: "step" }),
    );
  }

  violationRegionCount(): number {
    return this.root.querySelectorAll("rect.violation-region").length;
  }
}

// contiguous runs of post-call states breaching their slice bounds
function stateRegions(states: NetworkStateDoc[]): RegionMark[] {
  const marks: RegionMark[] = [];
  let start: number | null = null;
  states.forEach((s, i) => {
    const breach = breaches(s);
    if (breach && start === null) start = i;
    if (!breach && start !== null) {
      marks.push({ start, end: i });
      start = null;
    }
  });
  if (start !== null) marks.push({ start, end: states.length });
  return marks;
}

function breaches(s: NetworkStateDoc): boolean {
  const b = DEFAULT_SLA[s.slice];
  return (
    s.latency_ms > b.max_latency_ms ||
    s.jitter_ms > b.max_jitter_ms ||
    s.loss_rate > b.max_loss_rate ||
    s.throughput_mbps < b.min_throughput_mbps ||
    s.edge_load > b.max_edge_load
  );
}
