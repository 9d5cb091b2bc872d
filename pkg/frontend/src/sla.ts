import type { SliceName } from "./types.js";

export interface SlaBounds {
  max_latency_ms: number;
  max_jitter_ms: number;
  max_loss_rate: number;
  min_throughput_mbps: number;
  max_edge_load: number;
}

// Default per-slice bounds, matching the service's SLA table. The explorer
// needs these client-side to draw bound overlays on loaded documents; live
// session badges use the violations array the service returns instead.
export const DEFAULT_SLA: Record<SliceName, SlaBounds> = {
  EMBB: {
    max_latency_ms: 50.0,
    max_jitter_ms: 15.0,
    max_loss_rate: 0.05,
    min_throughput_mbps: 10.0,
    max_edge_load: 0.9,
  },
  URLLC: {
    max_latency_ms: 10.0,
    max_jitter_ms: 3.0,
    max_loss_rate: 0.005,
    min_throughput_mbps: 10.0,
    max_edge_load: 0.9,
  },
  MMTC: {
    max_latency_ms: 200.0,
    max_jitter_ms: 50.0,
    max_loss_rate: 0.1,
    min_throughput_mbps: 0.1,
    max_edge_load: 0.9,
  },
};

export interface MetricReading {
  slice: SliceName;
  latency_ms: number;
  jitter_ms: number;
  loss_rate: number;
  throughput_mbps: number;
  edge_load: number;
}

/**
 * Dimensions breaching the slice's bounds, in canonical order. Comparison is
 * inclusive: a value exactly at its bound is compliant.
 */
export function slaViolations(reading: MetricReading): string[] {
  const b = DEFAULT_SLA[reading.slice];
  const out: string[] = [];
  if (reading.latency_ms > b.max_latency_ms) out.push("latency");
  if (reading.jitter_ms > b.max_jitter_ms) out.push("jitter");
  if (reading.loss_rate > b.max_loss_rate) out.push("loss");
  if (reading.throughput_mbps < b.min_throughput_mbps) out.push("throughput");
  if (reading.edge_load > b.max_edge_load) out.push("edge_load");
  return out;
}
