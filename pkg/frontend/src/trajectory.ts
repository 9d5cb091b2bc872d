import type {
  DegradationEventDoc,
  NetworkStateDoc,
  ResultDoc,
} from "./types.js";

export interface TrajectoryEntry {
  step_index: number;
  state_before: NetworkStateDoc;
  call: { tool: string; args: unknown[] };
  result: ResultDoc;
  state_after: NetworkStateDoc;
  degradation_active: DegradationEventDoc | null;
}

export interface TrajectoryDoc {
  task_id: string;
  provenance: string;
  outcome: string;
  intent_text: string;
  seed: number;
  entries: TrajectoryEntry[];
}

/** Malformed trajectory document; line numbers are 1-based over the stream. */
export class TrajectoryParseError extends Error {
  constructor(
    message: string,
    public readonly line: number | null = null,
  ) {
    super(line === null ? message : `line ${line}: ${message}`);
    this.name = "TrajectoryParseError";
  }
}

function asRecord(v: unknown, what: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new Error(`${what} must be an object`);
  }
  return v as Record<string, unknown>;
}

function asState(v: unknown, what: string): NetworkStateDoc {
  const obj = asRecord(v, what);
  for (const key of [
    "slice", "latency_ms", "jitter_ms", "loss_rate", "throughput_mbps", "edge_load",
  ]) {
    if (!(key in obj)) throw new Error(`${what} is missing ${key}`);
  }
  return obj as unknown as NetworkStateDoc;
}

function entryFromDoc(doc: unknown): TrajectoryEntry {
  const obj = asRecord(doc, "entry");
  const call = asRecord(obj.call, "call");
  if (typeof call.tool !== "string" || !Array.isArray(call.args)) {
    throw new Error("call must hold tool and args");
  }
  const result = asRecord(obj.result, "result");
  if (!("ok" in result) && !("error" in result)) {
    throw new Error("result must hold ok or error");
  }
  const deg = obj.degradation_active;
  return {
    step_index: Number(obj.step_index),
    state_before: asState(obj.state_before, "state_before"),
    call: { tool: call.tool, args: call.args },
    result: result as unknown as ResultDoc,
    state_after: asState(obj.state_after, "state_after"),
    degradation_active: deg ? (deg as DegradationEventDoc) : null,
  };
}

/**
 * Parse a stream of line-delimited trajectory documents: each document is a
 * header line followed by entry_count entry lines. Blank lines are ignored.
 */
export function parseTrajectories(text: string): TrajectoryDoc[] {
  const numbered = text
    .split(/\r?\n/)
    .map((raw, i) => ({ line: i + 1, raw }))
    .filter((row) => row.raw.trim() !== "");

  const out: TrajectoryDoc[] = [];
  let pos = 0;
  while (pos < numbered.length) {
    const head = numbered[pos];
    if (head === undefined) break;
    let header: Record<string, unknown>;
    try {
      header = asRecord(JSON.parse(head.raw), "header");
    } catch (exc) {
      throw new TrajectoryParseError(`bad JSON: ${(exc as Error).message}`, head.line);
    }
    if (header.kind !== "trajectory") {
      throw new TrajectoryParseError("expected a trajectory header", head.line);
    }
    if (header.schema_version !== 1) {
      throw new TrajectoryParseError(
        `unsupported schema_version ${String(header.schema_version)}`, head.line);
    }
    const count = Number(header.entry_count);
    if (!Number.isInteger(count) || count < 0) {
      throw new TrajectoryParseError("entry_count must be a non-negative integer", head.line);
    }
    const rows = numbered.slice(pos + 1, pos + 1 + count);
    if (rows.length < count) {
      const last = numbered[numbered.length - 1];
      throw new TrajectoryParseError(
        `document truncated: expected ${count} entries, found ${rows.length}`,
        last !== undefined ? last.line : head.line,
      );
    }
    const entries: TrajectoryEntry[] = [];
    for (const row of rows) {
      try {
        entries.push(entryFromDoc(JSON.parse(row.raw)));
      } catch (exc) {
        throw new TrajectoryParseError(`bad entry: ${(exc as Error).message}`, row.line);
      }
    }
    out.push({
      task_id: String(header.task_id ?? ""),
      provenance: String(header.provenance ?? ""),
      outcome: String(header.outcome ?? ""),
      intent_text: String(header.intent_text ?? ""),
      seed: Number(header.seed ?? 0),
      entries,
    });
    pos += 1 + count;
  }
  return out;
}

/** Steps at which a handover was requested (markers for the chart views). */
export function handoverSteps(traj: TrajectoryDoc): number[] {
  return traj.entries
    .filter((e) => e.call.tool === "request_handover")
    .map((e) => e.step_index);
}
