import { parseTrace, type TraceRecord } from "./trace.js";
import { parseTrajectories, type TrajectoryDoc } from "./trajectory.js";

export interface LoadedTrace {
  kind: "trace";
  label: string;
  text: string;
  records: TraceRecord[];
}

export interface LoadedTrajectory {
  kind: "trajectory";
  label: string;
  doc: TrajectoryDoc;
}

export type LoadedDocument = LoadedTrace | LoadedTrajectory;

/**
 * Documents loaded into the analysis views. One store feeds the explorer,
 * the decision analyzer, and the heatmap so they stay in sync.
 */
export class DocumentStore {
  documents: LoadedDocument[] = [];
  selectedIndex = -1;

  private listeners: (() => void)[] = [];

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  /**
   * Parse text as a flow trace (CSV) or trajectory stream (JSONL, sniffed by
   * a leading brace) and add the result. Throws the parse error unchanged.
   */
  load(text: string, label: string): void {
    if (text.trimStart().startsWith("{")) {
      const docs = parseTrajectories(text);
      docs.forEach((doc, i) => {
        this.documents.push({
          kind: "trajectory",
          label: docs.length > 1 ? `${label} [${i}]` : label,
          doc,
        });
      });
      if (docs.length === 0) return;
    } else {
      this.documents.push({
        kind: "trace",
        label,
        text,
        records: parseTrace(text),
      });
    }
    this.selectedIndex = this.documents.length - 1;
    this.notify();
  }

  select(index: number): void {
    if (index >= 0 && index < this.documents.length) {
      this.selectedIndex = index;
      this.notify();
    }
  }

  get selected(): LoadedDocument | null {
    return this.documents[this.selectedIndex] ?? null;
  }

  get traces(): LoadedTrace[] {
    return this.documents.filter((d): d is LoadedTrace => d.kind === "trace");
  }
}
