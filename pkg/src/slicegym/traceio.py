"""Trace and trajectory persistence plus synthetic trace generation.

Three document families live here:

* flow traces: CSV with a fixed ten-column header, one row per second of
  simulated time (docs/trace_format.md);
* trajectory documents: line-delimited JSON, one header line then one line
  per step (docs/trajectory_format.md);
* task suites: a single JSON document holding task definitions and the
  topology-seed range they were generated from.

synth_trace is the desk-scale stand-in for a full network simulation run: it
emits records around the analytic model's baselines with seeded noise and
degradation windows marked by a flag column.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .dynamics import AnalyticModelParams, _effective
from .episode import Outcome, Provenance, Task, Trajectory
from .state import (
    DegradationEvent,
    DegradationKind,
    HistoryEntry,
    NetworkState,
    SliceType,
)
from .tools import call_from_dict, call_to_dict, result_from_dict, result_to_dict

__all__ = [
    "TRACE_COLUMNS",
    "FlowTraceRecord",
    "TraceFormatError",
    "record_to_state",
    "parse_trace",
    "format_trace",
    "read_trace",
    "write_trace",
    "ScenarioConfig",
    "FAILURE_PATTERNS",
    "synth_trace",
    "TrajectoryFormatError",
    "trajectory_to_lines",
    "trajectories_from_lines",
    "write_trajectories",
    "read_trajectories",
    "save_suite_doc",
    "load_suite_doc",
    "check_seed_ranges_disjoint",
]

TRACE_COLUMNS = (
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
)


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class FlowTraceRecord:
    """One per-flow measurement row."""

    time_s: float
    topology_seed: int
    slice: SliceType
    latency_ms: float
    jitter_ms: float
    loss_rate: float
    throughput_mbps: float
    edge_load: float
    serving_gnb_id: str
    degradation_flag: int

    def __post_init__(self) -> None:
        if self.degradation_flag not in (0, 1):
            raise ValueError("degradation_flag must be 0 or 1")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ValueError("loss_rate must lie in [0, 1]")
        if not 0.0 <= self.edge_load <= 1.0:
            raise ValueError("edge_load must lie in [0, 1]")
        if self.latency_ms < 0 or self.jitter_ms < 0 or self.throughput_mbps < 0:
            raise ValueError("metrics must be non-negative")
        if self.jitter_ms > self.latency_ms:
            raise ValueError("jitter_ms must not exceed latency_ms")


def record_to_state(record: FlowTraceRecord) -> NetworkState:
    """The six network metrics of one trace row, as a state value."""
    return NetworkState(
        slice=record.slice,
        latency_ms=record.latency_ms,
        jitter_ms=record.jitter_ms,
        loss_rate=record.loss_rate,
        throughput_mbps=record.throughput_mbps,
        edge_load=record.edge_load,
    )


def parse_trace(text: str) -> list[FlowTraceRecord]:
    """Parse CSV trace text; errors carry 1-based line numbers."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty document: missing header")
    if tuple(h.strip() for h in header) != TRACE_COLUMNS:
        raise TraceFormatError(
            f"bad header: expected {','.join(TRACE_COLUMNS)}", line=1
        )
    records: list[FlowTraceRecord] = []
    prev_time = -math.inf
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRACE_COLUMNS):
            raise TraceFormatError(
                f"expected {len(TRACE_COLUMNS)} columns, got {len(row)}", line=lineno
            )
        try:
            rec = FlowTraceRecord(
                time_s=float(row[0]),
                topology_seed=int(row[1]),
                slice=SliceType(row[2]),
                latency_ms=float(row[3]),
                jitter_ms=float(row[4]),
                loss_rate=float(row[5]),
                throughput_mbps=float(row[6]),
                edge_load=float(row[7]),
                serving_gnb_id=row[8],
                degradation_flag=int(row[9]),
            )
        except (ValueError, KeyError) as exc:
            raise TraceFormatError(str(exc), line=lineno)
        if rec.time_s < prev_time:
            raise TraceFormatError("time_s must be non-decreasing", line=lineno)
        prev_time = rec.time_s
        records.append(rec)
    return records


def format_trace(records: Sequence[FlowTraceRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in records:
        writer.writerow([
            repr(r.time_s),
            r.topology_seed,
            r.slice.value,
            repr(r.latency_ms),
            repr(r.jitter_ms),
            repr(r.loss_rate),
            repr(r.throughput_mbps),
            repr(r.edge_load),
            r.serving_gnb_id,
            r.degradation_flag,
        ])
    return buf.getvalue()


def read_trace(path: str) -> list[FlowTraceRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())


def write_trace(records: Sequence[FlowTraceRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_trace(records))


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

# Named failure-injection shapes. Offsets/durations are fractions of the
# scenario duration; severity is absolute.
FAILURE_PATTERNS: dict[str, tuple[tuple[DegradationKind, float, float, float], ...]] = {
    "none": (),
    "midlife_congestion": ((DegradationKind.CONGESTION, 0.4, 0.2, 0.9),),
    "early_fade": ((DegradationKind.LINK_FADE, 0.1, 0.15, 0.85),),
    "outage_burst": ((DegradationKind.GNB_OUTAGE, 0.5, 0.1, 1.0),),
    "edge_squeeze": ((DegradationKind.EDGE_OVERLOAD, 0.6, 0.25, 0.9),),
    "double_fault": (
        (DegradationKind.LINK_FADE, 0.15, 0.15, 0.85),
        (DegradationKind.EDGE_OVERLOAD, 0.55, 0.2, 0.9),
    ),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for one synthetic run: topology seed, length, traffic mix, faults."""

    topology_seed: int
    duration_s: int
    traffic_mix: Mapping[SliceType, float] = field(
        default_factory=lambda: {SliceType.EMBB: 0.5, SliceType.URLLC: 0.3, SliceType.MMTC: 0.2}
    )
    failure_pattern: str = "none"

    def __post_init__(self) -> None:
        if self.topology_seed < 1:
            raise ValueError("topology_seed must be positive")
        if self.duration_s < 0:
            raise ValueError("duration_s must be non-negative")
        total = sum(self.traffic_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"traffic mix weights must sum to 1, got {total}")
        if self.failure_pattern not in FAILURE_PATTERNS:
            raise ValueError(f"unknown failure pattern {self.failure_pattern!r}")

    def degradation_windows(self) -> list[tuple[DegradationKind, int, int, float]]:
        """Absolute (kind, start_s, end_s, severity) windows for this scenario."""
        out = []
        for kind, off, frac, severity in FAILURE_PATTERNS[self.failure_pattern]:
            start = int(off * self.duration_s)
            end = min(self.duration_s, start + max(1, int(frac * self.duration_s)))
            out.append((kind, start, end, severity))
        return out

    def to_dict(self) -> dict:
        return {
            "topology_seed": self.topology_seed,
            "duration_s": self.duration_s,
            "traffic_mix": {s.value: w for s, w in sorted(self.traffic_mix.items())},
            "failure_pattern": self.failure_pattern,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioConfig":
        return cls(
            topology_seed=int(d["topology_seed"]),
            duration_s=int(d["duration_s"]),
            traffic_mix={SliceType(k): float(v) for k, v in d.get(
                "traffic_mix", {"EMBB": 0.5, "URLLC": 0.3, "MMTC": 0.2}).items()},
            failure_pattern=d.get("failure_pattern", "none"),
        )


# Trace-level measurement noise; wider than the model's transition noise but
# still median-preserving (symmetric multiplicative).
_TRACE_NOISE = 0.04
_HANDOVER_PROB = 0.04


def synth_trace(
    config: ScenarioConfig,
    seed: int,
    params: Optional[AnalyticModelParams] = None,
) -> list[FlowTraceRecord]:
    """Generate one record per second; deterministic per (config, seed)."""
    if params is None:
        from .dynamics import AnalyticModel

        params = AnalyticModel.reference().params
    rng = np.random.default_rng([seed & 0xFFFFFFFF, config.topology_seed])
    slices = sorted(config.traffic_mix, key=lambda s: s.value)
    weights = np.array([config.traffic_mix[s] for s in slices])
    weights = weights / weights.sum()
    windows = config.degradation_windows()

    gnb_ids = [f"gnb-{i + 1}" for i in range(params.n_gnbs)]
    serving = gnb_ids[config.topology_seed % len(gnb_ids)]

    records: list[FlowTraceRecord] = []
    for t in range(config.duration_s):
        slc = slices[int(rng.choice(len(slices), p=weights))]
        b = params.slice_baselines[slc]
        active = [(k, sv) for k, s0, s1, sv in windows if s0 <= t < s1]
        flag = 1 if active else 0

        lat, jit, loss, thr = b.latency_ms, b.jitter_ms, b.loss_rate, b.throughput_mbps
        edge = params.edge_load_baseline
        if active:
            kind, severity = active[-1]
            m = params.degradation_multipliers[kind]
            lat *= _effective(m.latency, severity)
            jit *= _effective(m.jitter, severity)
            loss *= _effective(m.loss, severity)
            thr *= _effective(m.throughput, severity)
            edge *= _effective(m.edge_load, severity)

        u = rng.uniform(-1.0, 1.0, size=5)
        lat = max(0.0, lat * (1.0 + _TRACE_NOISE * u[0]))
        jit = min(max(0.0, jit * (1.0 + _TRACE_NOISE * u[1])), lat)
        loss = min(1.0, max(0.0, loss * (1.0 + _TRACE_NOISE * u[2])))
        thr = max(0.0, thr * (1.0 + _TRACE_NOISE * u[3]))
        edge = min(1.0, max(0.0, edge * (1.0 + _TRACE_NOISE * u[4])))

        if rng.uniform() < _HANDOVER_PROB and len(gnb_ids) > 1:
            others = [g for g in gnb_ids if g != serving]
            serving = others[int(rng.integers(0, len(others)))]

        records.append(FlowTraceRecord(
            time_s=float(t),
            topology_seed=config.topology_seed,
            slice=slc,
            latency_ms=float(lat),
            jitter_ms=float(jit),
            loss_rate=float(loss),
            throughput_mbps=float(thr),
            edge_load=float(edge),
            serving_gnb_id=serving,
            degradation_flag=flag,
        ))
    return records


# ---------------------------------------------------------------------------
# Trajectory documents
# ---------------------------------------------------------------------------

TRAJECTORY_SCHEMA_VERSION = 1


class TrajectoryFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _entry_to_dict(e: HistoryEntry) -> dict:
    return {
        "step_index": e.step_index,
        "state_before": e.state_before.to_dict(),
        "call": call_to_dict(e.call),
        "result": result_to_dict(e.result),
        "state_after": e.state_after.to_dict(),
        "degradation_active": e.degradation_active.to_dict() if e.degradation_active else None,
    }


def _entry_from_dict(d: Mapping) -> HistoryEntry:
    deg = d.get("degradation_active")
    return HistoryEntry(
        step_index=int(d["step_index"]),
        state_before=NetworkState.from_dict(d["state_before"]),
        call=call_from_dict(d["call"]),
        result=result_from_dict(d["result"]),
        state_after=NetworkState.from_dict(d["state_after"]),
        degradation_active=DegradationEvent.from_dict(deg) if deg else None,
    )


def trajectory_to_lines(traj: Trajectory) -> list[str]:
    """Header line plus one line per step; concatenable across trajectories."""
    header = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "kind": "trajectory",
        "task_id": traj.task_id,
        "provenance": traj.provenance.value,
        "outcome": traj.outcome.value,
        "intent_text": traj.intent_text,
        "seed": traj.seed,
        "entry_count": len(traj.entries),
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    lines.extend(
        json.dumps(_entry_to_dict(e), separators=(",", ":")) for e in traj.entries
    )
    return lines


def trajectories_from_lines(lines: Iterable[str]) -> list[Trajectory]:
    """Inverse of trajectory_to_lines over a whole stream of documents."""
    out: list[Trajectory] = []
    it = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    pos = 0
    while pos < len(it):
        lineno, raw = it[pos]
        try:
            header = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TrajectoryFormatError(f"bad JSON: {exc.msg}", line=lineno)
        if not isinstance(header, dict) or header.get("kind") != "trajectory":
            raise TrajectoryFormatError("expected a trajectory header", line=lineno)
        if header.get("schema_version") != TRAJECTORY_SCHEMA_VERSION:
            raise TrajectoryFormatError(
                f"unsupported schema_version {header.get('schema_version')}", line=lineno
            )
        count = int(header["entry_count"])
        entry_rows = it[pos + 1: pos + 1 + count]
        if len(entry_rows) < count:
            raise TrajectoryFormatError(
                f"document truncated: expected {count} entries, found {len(entry_rows)}",
                line=it[-1][0] if it else lineno,
            )
        entries = []
        for eln, eraw in entry_rows:
            try:
                entries.append(_entry_from_dict(json.loads(eraw)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise TrajectoryFormatError(f"bad entry: {exc}", line=eln)
        out.append(Trajectory(
            task_id=header["task_id"],
            entries=tuple(entries),
            outcome=Outcome(header["outcome"]),
            provenance=Provenance(header["provenance"]),
            intent_text=header.get("intent_text", ""),
            seed=int(header.get("seed", 0)),
        ))
        pos += 1 + count
    return out


def write_trajectories(trajectories: Sequence[Trajectory], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for traj in trajectories:
            for line in trajectory_to_lines(traj):
                fh.write(line + "\n")


def read_trajectories(path: str) -> list[Trajectory]:
    with open(path, "r", encoding="utf-8") as fh:
        return trajectories_from_lines(fh.read().splitlines())


# ---------------------------------------------------------------------------
# Suite documents and seed-range discipline
# ---------------------------------------------------------------------------


def save_suite_doc(suite_id: str, tasks: Sequence[Task], seed_range: tuple[int, int],
                   holdout: bool, path: str) -> None:
    doc = {
        "schema_version": 1,
        "kind": "suite",
        "suite_id": suite_id,
        "seed_range": [seed_range[0], seed_range[1]],
        "holdout": holdout,
        "tasks": [t.to_dict() for t in tasks],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_suite_doc(path: str) -> tuple[str, list[Task], tuple[int, int], bool]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "suite" or doc.get("schema_version") != 1:
        raise ValueError("not a version-1 suite document")
    tasks = [Task.from_dict(t) for t in doc["tasks"]]
    lo, hi = doc["seed_range"]
    return doc["suite_id"], tasks, (int(lo), int(hi)), bool(doc["holdout"])


def check_seed_ranges_disjoint(train: tuple[int, int], holdout: tuple[int, int]) -> None:
    """Raise when the inclusive topology-seed ranges overlap."""
    (a0, a1), (b0, b1) = train, holdout
    if a0 > a1 or b0 > b1:
        raise ValueError("seed ranges must be (lo, hi) with lo <= hi")
    if a1 >= b0 and b1 >= a0:
        raise ValueError(
            f"seed ranges overlap: [{a0}, {a1}] intersects [{b0}, {b1}]"
        )
