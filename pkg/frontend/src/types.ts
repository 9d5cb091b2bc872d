// Wire documents exchanged with the gym service. Field names mirror the
// service payloads one to one; all documents carry schema_version 1.

export type SliceName = "EMBB" | "URLLC" | "MMTC";

export type DegradationKindName =
  | "LINK_FADE"
  | "CONGESTION"
  | "GNB_OUTAGE"
  | "EDGE_OVERLOAD";

export interface NetworkStateDoc {
  slice: SliceName;
  latency_ms: number;
  jitter_ms: number;
  loss_rate: number;
  throughput_mbps: number;
  edge_load: number;
}

export const METRIC_DIMS = [
  "latency_ms",
  "jitter_ms",
  "loss_rate",
  "throughput_mbps",
  "edge_load",
] as const;

export type MetricDim = (typeof METRIC_DIMS)[number];

export interface UavDoc {
  uav_id: string;
  position: [number, number, number];
  battery_fraction: number;
  serving_gnb_id: string;
  current_waypoint: [number, number, number] | null;
}

export interface FleetDoc {
  uavs: UavDoc[];
}

export interface DegradationEventDoc {
  kind: DegradationKindName;
  onset_step: number;
  duration_steps: number;
  severity: number;
}

// result objects are a tagged union: exactly one of ok / error present
export type ResultDoc =
  | { ok: unknown }
  | { error: { code: string; message: string } };

export function isOk(r: ResultDoc): r is { ok: unknown } {
  return "ok" in r;
}

export interface CreateSessionDoc {
  schema_version: number;
  session_id: string;
  state: NetworkStateDoc;
  step_count: number;
  task_id: string | null;
}

export interface SessionStateDoc {
  schema_version: number;
  session_id: string;
  state: NetworkStateDoc;
  fleet: FleetDoc;
  violations: string[];
  active_degradation: DegradationEventDoc | null;
  step_count: number;
  outcome_so_far: "SUCCESS" | "FAILURE";
}

export interface CallResponseDoc {
  schema_version: number;
  step_index: number;
  result: ResultDoc;
  state: NetworkStateDoc;
  violations: string[];
  degradation_active: DegradationEventDoc | null;
  step_count: number;
}

export interface InjectResponseDoc {
  schema_version: number;
  acknowledged: boolean;
  event: DegradationEventDoc;
}

// a value schema document, as served under /catalog "domains" and inline in
// tool params; discriminated on "kind"
export type ValueSchemaDoc =
  | { kind: "number"; min?: number; max?: number }
  | { kind: "integer"; min?: number; max?: number }
  | { kind: "string"; allow_empty: boolean }
  | { kind: "boolean" }
  | { kind: "choice"; options: string[] }
  | { kind: "position" }
  | { kind: "record"; fields: Record<string, ValueSchemaDoc> }
  | { kind: "list"; item: ValueSchemaDoc; min_len: number; max_len?: number };

export type EffectName = "OBSERVATION" | "REASONING" | "CONFIGURATION";

export interface ToolParamDoc {
  name: string;
  type: string;
}

export interface ToolDoc {
  name: string;
  effect: EffectName;
  mutates_fleet: boolean;
  params: ToolParamDoc[];
  output: string;
}

export interface CatalogDoc {
  schema_version: number;
  tools: ToolDoc[];
  domains: Record<string, ValueSchemaDoc>;
}

export interface DecisionPointDoc {
  index: number;
  time_s: number;
  kind: string;
  detail: string;
}

export interface AnnotateResponseDoc {
  schema_version: number;
  points: DecisionPointDoc[];
}
