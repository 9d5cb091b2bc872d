"""Core domain state: slices, network metrics, SLA bounds, degradations, UAV fleet.

The network is summarised by a six-dimensional state (active slice plus five
metrics). Everything here is an immutable value object; mutation happens by
building new instances, so states can be shared freely across threads and
recorded verbatim into trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Optional

if TYPE_CHECKING:  # avoid a cycle: tools imports nothing from here at runtime
    from .tools import ToolCall, ToolResult

__all__ = [
    "SliceType",
    "NetworkState",
    "SlaBounds",
    "SlaSpec",
    "DegradationKind",
    "DegradationEvent",
    "UavState",
    "FleetState",
    "HistoryEntry",
    "METRIC_DIMENSIONS",
    "STATE_FIELD_ORDER",
    "sla_violations",
    "validate_state",
    "default_sla_spec",
    "default_fleet",
]

# Canonical serialization order for the six state dimensions.
STATE_FIELD_ORDER = ("slice", "latency_ms", "jitter_ms", "loss_rate", "throughput_mbps", "edge_load")

# The five metric dimensions an SLA can constrain, in canonical order.
METRIC_DIMENSIONS = ("latency", "jitter", "loss", "throughput", "edge_load")


class SliceType(Enum):
    """Service classes: broadband, ultra-reliable low latency, massive machine-type."""

    EMBB = "EMBB"
    URLLC = "URLLC"
    MMTC = "MMTC"

    def __lt__(self, other: "SliceType") -> bool:
        # Total order (declaration order) for deterministic serialization.
        if not isinstance(other, SliceType):
            return NotImplemented
        order = list(SliceType)
        return order.index(self) < order.index(other)


@dataclass(frozen=True)
class NetworkState:
    """Six-dimensional network state.

    Invariants (checked by :func:`validate_state`):
    loss_rate and edge_load lie in [0, 1]; latency, jitter and throughput are
    non-negative and finite; jitter never exceeds mean latency.
    """

    slice: SliceType
    latency_ms: float
    jitter_ms: float
    loss_rate: float
    throughput_mbps: float
    edge_load: float

    def to_dict(self) -> dict:
        return {
            "slice": self.slice.value,
            "latency_ms": self.latency_ms,
            "jitter_ms": self.jitter_ms,
            "loss_rate": self.loss_rate,
            "throughput_mbps": self.throughput_mbps,
            "edge_load": self.edge_load,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NetworkState":
        return cls(
            slice=SliceType(d["slice"]),
            latency_ms=float(d["latency_ms"]),
            jitter_ms=float(d["jitter_ms"]),
            loss_rate=float(d["loss_rate"]),
            throughput_mbps=float(d["throughput_mbps"]),
            edge_load=float(d["edge_load"]),
        )


@dataclass(frozen=True)
class SlaBounds:
    """Per-slice SLA bounds over the five metric dimensions (inclusive)."""

    max_latency_ms: float
    max_jitter_ms: float
    max_loss_rate: float
    min_throughput_mbps: float
    max_edge_load: float

    def __post_init__(self) -> None:
        for name in ("max_latency_ms", "max_jitter_ms", "max_loss_rate", "min_throughput_mbps", "max_edge_load"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.max_loss_rate <= 1.0:
            raise ValueError("max_loss_rate must lie in [0, 1]")
        if not 0.0 <= self.max_edge_load <= 1.0:
            raise ValueError("max_edge_load must lie in [0, 1]")
        if self.max_latency_ms < 0 or self.max_jitter_ms < 0 or self.min_throughput_mbps < 0:
            raise ValueError("latency/jitter/throughput bounds must be non-negative")

    def to_dict(self) -> dict:
        return {
            "max_latency_ms": self.max_latency_ms,
            "max_jitter_ms": self.max_jitter_ms,
            "max_loss_rate": self.max_loss_rate,
            "min_throughput_mbps": self.min_throughput_mbps,
            "max_edge_load": self.max_edge_load,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SlaBounds":
        return cls(
            max_latency_ms=float(d["max_latency_ms"]),
            max_jitter_ms=float(d["max_jitter_ms"]),
            max_loss_rate=float(d["max_loss_rate"]),
            min_throughput_mbps=float(d["min_throughput_mbps"]),
            max_edge_load=float(d["max_edge_load"]),
        )


@dataclass(frozen=True)
class SlaSpec:
    """SLA bounds keyed by slice type."""

    bounds: Mapping[SliceType, SlaBounds]

    def covers(self, slc: SliceType) -> bool:
        return slc in self.bounds

    def for_slice(self, slc: SliceType) -> SlaBounds:
        if slc not in self.bounds:
            raise KeyError(f"SLA spec does not cover slice {slc.value}")
        return self.bounds[slc]

    def to_dict(self) -> dict:
        return {slc.value: b.to_dict() for slc, b in sorted(self.bounds.items())}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SlaSpec":
        return cls(bounds={SliceType(k): SlaBounds.from_dict(v) for k, v in d.items()})


def default_sla_spec() -> SlaSpec:
    """Default per-slice bounds.

    Latency ceilings: EMBB 50 ms, URLLC 10 ms, MMTC 200 ms; minimum throughput
    10 Mbps for EMBB/URLLC. The remaining bounds are repo defaults chosen to sit
    comfortably outside the reference baselines.
    """
    return SlaSpec(
        bounds={
            SliceType.EMBB: SlaBounds(50.0, 15.0, 0.05, 10.0, 0.9),
            SliceType.URLLC: SlaBounds(10.0, 3.0, 0.005, 10.0, 0.9),
            SliceType.MMTC: SlaBounds(200.0, 50.0, 0.10, 0.1, 0.9),
        }
    )


class DegradationKind(Enum):
    LINK_FADE = "LINK_FADE"
    CONGESTION = "CONGESTION"
    GNB_OUTAGE = "GNB_OUTAGE"
    EDGE_OVERLOAD = "EDGE_OVERLOAD"


@dataclass(frozen=True)
class DegradationEvent:
    """A scheduled transient that perturbs network metrics for a bounded window."""

    kind: DegradationKind
    onset_step: int
    duration_steps: int
    severity: float  # in (0, 1]

    def __post_init__(self) -> None:
        if self.onset_step < 0:
            raise ValueError("onset_step must be non-negative")
        if self.duration_steps < 1:
            raise ValueError("duration_steps must be at least 1")
        if not 0.0 < self.severity <= 1.0:
            raise ValueError("severity must lie in (0, 1]")

    def active_at(self, step: int) -> bool:
        return self.onset_step <= step < self.onset_step + self.duration_steps

    def expired_at(self, step: int) -> bool:
        return step >= self.onset_step + self.duration_steps

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "onset_step": self.onset_step,
            "duration_steps": self.duration_steps,
            "severity": self.severity,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DegradationEvent":
        return cls(
            kind=DegradationKind(d["kind"]),
            onset_step=int(d["onset_step"]),
            duration_steps=int(d["duration_steps"]),
            severity=float(d["severity"]),
        )


@dataclass(frozen=True)
class UavState:
    """Auxiliary per-UAV record backing the UAV-facing tools."""

    uav_id: str
    position: tuple[float, float, float]  # x, y, z in meters
    battery_fraction: float  # in [0, 1]
    serving_gnb_id: str
    current_waypoint: Optional[tuple[float, float, float]] = None

    def __post_init__(self) -> None:
        if not self.uav_id:
            raise ValueError("uav_id must be non-empty")
        if not 0.0 <= self.battery_fraction <= 1.0:
            raise ValueError("battery_fraction must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "uav_id": self.uav_id,
            "position": list(self.position),
            "battery_fraction": self.battery_fraction,
            "serving_gnb_id": self.serving_gnb_id,
            "current_waypoint": list(self.current_waypoint) if self.current_waypoint is not None else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "UavState":
        wp = d.get("current_waypoint")
        return cls(
            uav_id=d["uav_id"],
            position=tuple(float(x) for x in d["position"]),
            battery_fraction=float(d["battery_fraction"]),
            serving_gnb_id=d["serving_gnb_id"],
            current_waypoint=tuple(float(x) for x in wp) if wp is not None else None,
        )


@dataclass(frozen=True)
class FleetState:
    """Collection of UAV records; never counts as network state for effect classes."""

    uavs: tuple[UavState, ...] = ()

    def __post_init__(self) -> None:
        ids = [u.uav_id for u in self.uavs]
        if len(ids) != len(set(ids)):
            raise ValueError("uav_ids must be unique")

    def get(self, uav_id: str) -> Optional[UavState]:
        for u in self.uavs:
            if u.uav_id == uav_id:
                return u
        return None

    def with_uav(self, updated: UavState) -> "FleetState":
        return FleetState(uavs=tuple(updated if u.uav_id == updated.uav_id else u for u in self.uavs))

    def to_dict(self) -> dict:
        return {"uavs": [u.to_dict() for u in self.uavs]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FleetState":
        return cls(uavs=tuple(UavState.from_dict(u) for u in d.get("uavs", [])))


def default_fleet() -> FleetState:
    """Reference three-UAV fleet used when a task does not specify one."""
    return FleetState(
        uavs=(
            UavState("uav-1", (0.0, 0.0, 120.0), 0.90, "gnb-1"),
            UavState("uav-2", (400.0, 250.0, 100.0), 0.75, "gnb-2"),
            UavState("uav-3", (-300.0, 500.0, 150.0), 0.60, "gnb-1"),
        )
    )


@dataclass(frozen=True)
class HistoryEntry:
    """One recorded interaction step: state before/after a tool call and its result."""

    step_index: int
    state_before: NetworkState
    call: "ToolCall"
    result: "ToolResult"
    state_after: NetworkState
    degradation_active: Optional[DegradationEvent] = None


def validate_state(state: NetworkState) -> Optional[str]:
    """Check NetworkState invariants.

    Returns None when all invariants hold, otherwise a description of the first
    violated invariant in canonical field order; the description starts with the
    offending field name.
    """
    if not isinstance(state.slice, SliceType):
        return "slice must be a SliceType"
    if not (math.isfinite(state.latency_ms) and state.latency_ms >= 0.0):
        return "latency_ms must be finite and non-negative"
    if not (math.isfinite(state.jitter_ms) and state.jitter_ms >= 0.0):
        return "jitter_ms must be finite and non-negative"
    if state.jitter_ms > state.latency_ms:
        return "jitter_ms must not exceed latency_ms"
    if not (math.isfinite(state.loss_rate) and 0.0 <= state.loss_rate <= 1.0):
        return "loss_rate must lie in [0, 1]"
    if not (math.isfinite(state.throughput_mbps) and state.throughput_mbps >= 0.0):
        return "throughput_mbps must be finite and non-negative"
    if not (math.isfinite(state.edge_load) and 0.0 <= state.edge_load <= 1.0):
        return "edge_load must lie in [0, 1]"
    return None


def sla_violations(state: NetworkState, spec: SlaSpec) -> list[str]:
    """Return the metric dimensions whose SLA bound is breached, in canonical order.

    Bound comparison is inclusive: a value exactly at its bound is compliant.
    An empty list means the state meets its slice's SLA.
    """
    b = spec.for_slice(state.slice)
    out: list[str] = []
    if state.latency_ms > b.max_latency_ms:
        out.append("latency")
    if state.jitter_ms > b.max_jitter_ms:
        out.append("jitter")
    if state.loss_rate > b.max_loss_rate:
        out.append("loss")
    if state.throughput_mbps < b.min_throughput_mbps:
        out.append("throughput")
    if state.edge_load > b.max_edge_load:
        out.append("edge_load")
    return out


def violations_for_bounds(state: NetworkState, bounds: SlaBounds) -> list[str]:
    """Like :func:`sla_violations` but against one explicit bounds record."""
    return sla_violations(state, SlaSpec(bounds={state.slice: bounds}))
