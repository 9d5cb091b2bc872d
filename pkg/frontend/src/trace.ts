import { slaViolations } from "./sla.js";
import type { SliceName } from "./types.js";

export const TRACE_COLUMNS = [
  "time_s",
  "topology_seed",
  "slice",
  "latency_ms",
  "jitter_ms",
  "loss_rate",
  "throughput_mbps",
  "edge_load",
  "serving_gnb_id",
  "degradation_flag",
] as const;

export interface TraceRecord {
  time_s: number;
  topology_seed: number;
  slice: SliceName;
  latency_ms: number;
  jitter_ms: number;
  loss_rate: number;
  throughput_mbps: number;
  edge_load: number;
  serving_gnb_id: string;
  degradation_flag: number;
}

/** Malformed trace document; line numbers are 1-based and include the header. */
export class TraceParseError extends Error {
  constructor(
    message: string,
    public readonly line: number | null = null,
  ) {
    super(line === null ? message : `line ${line}: ${message}`);
    this.name = "TraceParseError";
  }
}

const SLICES: readonly string[] = ["EMBB", "URLLC", "MMTC"];
const FLOAT_RE = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;
const INT_RE = /^[+-]?\d+$/;

function parseFloatCell(raw: string, column: string, line: number): number {
  const v = raw.trim();
  if (!FLOAT_RE.test(v)) {
    throw new TraceParseError(`${column}: '${raw}' is not a number`, line);
  }
  return Number(v);
}

function parseIntCell(raw: string, column: string, line: number): number {
  const v = raw.trim();
  if (!INT_RE.test(v)) {
    throw new TraceParseError(`${column}: '${raw}' is not an integer`, line);
  }
  return Number(v);
}

// minimal CSV cell splitter; handles double-quoted cells with "" escapes
function splitCsvLine(line: string): string[] {
  const cells: string[] = [];
  let cur = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          cur += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      cells.push(cur);
      cur = "";
    } else {
      cur += ch;
    }
  }
  cells.push(cur);
  return cells;
}

/** Parse a flow-trace CSV document into typed records. */
export function parseTrace(text: string): TraceRecord[] {
  if (text === "") {
    throw new TraceParseError("empty document: missing header");
  }
  const lines = text.split(/\r?\n/);
  const header = splitCsvLine(lines[0] ?? "").map((h) => h.trim());
  if (header.length !== TRACE_COLUMNS.length ||
      header.some((h, i) => h !== TRACE_COLUMNS[i])) {
    throw new TraceParseError(`bad header: expected ${TRACE_COLUMNS.join(",")}`, 1);
  }

  const records: TraceRecord[] = [];
  let prevTime = -Infinity;
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i] ?? "";
    const n = i + 1;
    if (line.trim() === "") continue;
    const cells = splitCsvLine(line);
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new TraceParseError(
        `expected ${TRACE_COLUMNS.length} columns, got ${cells.length}`, n);
    }
    const sliceRaw = (cells[2] ?? "").trim();
    if (!SLICES.includes(sliceRaw)) {
      throw new TraceParseError(`'${sliceRaw}' is not a valid SliceType`, n);
    }
    const flag = parseIntCell(cells[9] ?? "", "degradation_flag", n);
    if (flag !== 0 && flag !== 1) {
      throw new TraceParseError(`degradation_flag must be 0 or 1, got ${flag}`, n);
    }
    const rec: TraceRecord = {
      time_s: parseFloatCell(cells[0] ?? "", "time_s", n),
      topology_seed: parseIntCell(cells[1] ?? "", "topology_seed", n),
      slice: sliceRaw as SliceName,
      latency_ms: parseFloatCell(cells[3] ?? "", "latency_ms", n),
      jitter_ms: parseFloatCell(cells[4] ?? "", "jitter_ms", n),
      loss_rate: parseFloatCell(cells[5] ?? "", "loss_rate", n),
      throughput_mbps: parseFloatCell(cells[6] ?? "", "throughput_mbps", n),
      edge_load: parseFloatCell(cells[7] ?? "", "edge_load", n),
      serving_gnb_id: cells[8] ?? "",
      degradation_flag: flag,
    };
    if (rec.time_s < prevTime) {
      throw new TraceParseError("time_s must be non-decreasing", n);
    }
    prevTime = rec.time_s;
    records.push(rec);
  }
  return records;
}

export interface ViolationRegion {
  startIndex: number;
  endIndex: number; // inclusive
  startTime: number;
  endTime: number; // time of the last breaching record
  dims: string[];
}

/**
 * Maximal runs of consecutive records that breach their slice's SLA bounds.
 * One degradation window in a trace shows up as one region here as long as
 * every in-window record stays out of bounds.
 */
export function violationRegions(records: TraceRecord[]): ViolationRegion[] {
  const regions: ViolationRegion[] = [];
  let open: ViolationRegion | null = null;
  records.forEach((rec, i) => {
    const dims = slaViolations(rec);
    if (dims.length > 0) {
      if (open === null) {
        open = {
          startIndex: i,
          endIndex: i,
          startTime: rec.time_s,
          endTime: rec.time_s,
          dims: [...dims],
        };
      } else {
        open.endIndex = i;
        open.endTime = rec.time_s;
        for (const d of dims) {
          if (!open.dims.includes(d)) open.dims.push(d);
        }
      }
    } else if (open !== null) {
      regions.push(open);
      open = null;
    }
  });
  if (open !== null) regions.push(open);
  return regions;
}

/** Indices whose serving cell differs from the previous record's. */
export function handoverIndices(records: TraceRecord[]): number[] {
  const out: number[] = [];
  for (let i = 1; i < records.length; i++) {
    const prev = records[i - 1];
    const cur = records[i];
    if (prev !== undefined && cur !== undefined &&
        cur.serving_gnb_id !== prev.serving_gnb_id) {
      out.push(i);
    }
  }
  return out;
}
