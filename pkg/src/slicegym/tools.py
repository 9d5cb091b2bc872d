"""Typed tool catalog: 42 tools over a domain-type hierarchy, split by effect.

Every tool carries an effect class. OBSERVATION tools read the network,
REASONING tools compute or actuate UAVs without touching network metrics, and
CONFIGURATION tools are the only ones allowed to mutate the six-dimensional
network state. The three classes partition the catalog.

Call validation is structural only (name, arity, per-argument value schema);
semantic failures such as an unknown UAV id surface later as ToolError results
from the transition model, not as rejections here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .state import SliceType

__all__ = [
    "EffectClass",
    "DomainType",
    "SchemaError",
    "ToolSignature",
    "ToolCall",
    "Ok",
    "ToolError",
    "ToolResult",
    "CallRejection",
    "REJECTION_CODES",
    "build_catalog",
    "validate_call",
    "effect_of",
    "sample_value",
    "sample_call",
    "export_schema",
    "export_domain_schemas",
    "call_to_dict",
    "call_from_dict",
    "result_to_dict",
    "result_from_dict",
]


class EffectClass(Enum):
    OBSERVATION = "OBSERVATION"
    REASONING = "REASONING"
    CONFIGURATION = "CONFIGURATION"


class SchemaError(ValueError):
    """Raised by a value schema when a candidate value does not conform."""


# ---------------------------------------------------------------------------
# Value schemas
# ---------------------------------------------------------------------------


class ValueSchema:
    """Validates and canonicalizes wire values for one domain type.

    canon() returns the canonical JSON-native form (floats for numbers, lists
    for sequences) or raises SchemaError. Canonical values survive a JSON
    round trip unchanged, which keeps trajectory documents bit-stable.
    """

    kind = "abstract"

    def canon(self, value: object) -> object:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class NumberSchema(ValueSchema):
    kind = "number"

    def __init__(self, lo: Optional[float] = None, hi: Optional[float] = None):
        self.lo = lo
        self.hi = hi

    def canon(self, value: object) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"expected a number, got {type(value).__name__}")
        v = float(value)
        if not math.isfinite(v):
            raise SchemaError("number must be finite")
        if self.lo is not None and v < self.lo:
            raise SchemaError(f"number {v} below minimum {self.lo}")
        if self.hi is not None and v > self.hi:
            raise SchemaError(f"number {v} above maximum {self.hi}")
        return v

    def describe(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.lo is not None:
            d["min"] = self.lo
        if self.hi is not None:
            d["max"] = self.hi
        return d


class IntegerSchema(ValueSchema):
    kind = "integer"

    def __init__(self, lo: Optional[int] = None, hi: Optional[int] = None):
        self.lo = lo
        self.hi = hi

    def canon(self, value: object) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"expected an integer, got {type(value).__name__}")
        if self.lo is not None and value < self.lo:
            raise SchemaError(f"integer {value} below minimum {self.lo}")
        if self.hi is not None and value > self.hi:
            raise SchemaError(f"integer {value} above maximum {self.hi}")
        return value

    def describe(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.lo is not None:
            d["min"] = self.lo
        if self.hi is not None:
            d["max"] = self.hi
        return d


class StringSchema(ValueSchema):
    kind = "string"

    def __init__(self, allow_empty: bool = False):
        self.allow_empty = allow_empty

    def canon(self, value: object) -> str:
        if not isinstance(value, str):
            raise SchemaError(f"expected a string, got {type(value).__name__}")
        if not self.allow_empty and not value:
            raise SchemaError("string must be non-empty")
        return value

    def describe(self) -> dict:
        return {"kind": self.kind, "allow_empty": self.allow_empty}


class BooleanSchema(ValueSchema):
    kind = "boolean"

    def canon(self, value: object) -> bool:
        if not isinstance(value, bool):
            raise SchemaError(f"expected a boolean, got {type(value).__name__}")
        return value

    def describe(self) -> dict:
        return {"kind": self.kind}


class ChoiceSchema(ValueSchema):
    kind = "choice"

    def __init__(self, *options: str):
        self.options = tuple(options)

    def canon(self, value: object) -> str:
        # SliceType enum members canonicalize to their wire string.
        if isinstance(value, SliceType):
            value = value.value
        if not isinstance(value, str):
            raise SchemaError(f"expected one of {list(self.options)}, got {type(value).__name__}")
        if value not in self.options:
            raise SchemaError(f"expected one of {list(self.options)}, got {value!r}")
        return value

    def describe(self) -> dict:
        return {"kind": self.kind, "options": list(self.options)}


class PositionSchema(ValueSchema):
    """Cartesian position: exactly three finite coordinates in meters."""

    kind = "position"

    def canon(self, value: object) -> list:
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise SchemaError("expected a position [x, y, z]")
        out = []
        for c in value:
            if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(float(c)):
                raise SchemaError("position coordinates must be finite numbers")
            out.append(float(c))
        return out

    def describe(self) -> dict:
        return {"kind": self.kind}


class RecordSchema(ValueSchema):
    kind = "record"

    def __init__(self, **fields: ValueSchema):
        self.fields = dict(fields)

    def canon(self, value: object) -> dict:
        if not isinstance(value, Mapping):
            raise SchemaError(f"expected a record, got {type(value).__name__}")
        extra = set(value) - set(self.fields)
        if extra:
            raise SchemaError(f"unexpected record fields {sorted(extra)}")
        out = {}
        for name, schema in self.fields.items():
            if name not in value:
                raise SchemaError(f"missing record field {name!r}")
            try:
                out[name] = schema.canon(value[name])
            except SchemaError as exc:
                raise SchemaError(f"field {name!r}: {exc}") from None
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "fields": {k: v.describe() for k, v in self.fields.items()}}


class ListSchema(ValueSchema):
    kind = "list"

    def __init__(self, item: ValueSchema, min_len: int = 0, max_len: Optional[int] = None):
        self.item = item
        self.min_len = min_len
        self.max_len = max_len

    def canon(self, value: object) -> list:
        if isinstance(value, str) or not isinstance(value, Sequence):
            raise SchemaError(f"expected a list, got {type(value).__name__}")
        if len(value) < self.min_len:
            raise SchemaError(f"list needs at least {self.min_len} items")
        if self.max_len is not None and len(value) > self.max_len:
            raise SchemaError(f"list allows at most {self.max_len} items")
        out = []
        for i, item in enumerate(value):
            try:
                out.append(self.item.canon(item))
            except SchemaError as exc:
                raise SchemaError(f"item {i}: {exc}") from None
        return out

    def describe(self) -> dict:
        d: dict = {"kind": self.kind, "item": self.item.describe(), "min_len": self.min_len}
        if self.max_len is not None:
            d["max_len"] = self.max_len
        return d


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


class DomainType(Enum):
    """Semantic value types appearing as tool inputs and outputs."""

    POSITION = "Position"
    GNB_ID = "GnbId"
    UAV_ID = "UavId"
    SLICE_TYPE = "SliceType"
    TASK_SPEC = "TaskSpec"
    WAYPOINTS = "Waypoints"
    RISK_SCORE = "RiskScore"
    NETWORK_STATE = "NetworkState"
    TELEMETRY_STATE = "TelemetryState"
    EDGE_LOAD = "EdgeLoad"
    BATTERY_LEVEL = "BatteryLevel"
    INTENT = "Intent"
    SLA_SPEC = "SLASpec"
    SIGNAL_STRENGTH = "SignalStrength"
    GNB_LIST = "GnbList"
    SLICE_STATUS = "SliceStatus"
    SLA_PREDICTION = "SLAPrediction"
    HANDOVER_STATUS = "HandoverStatus"
    TRAFFIC_PATTERN = "TrafficPattern"
    INTERFERENCE_LEVEL = "InterferenceLevel"
    LINK_QUALITY = "LinkQuality"
    RECOVERY_STRATEGY = "RecoveryStrategy"
    SLICE_LIST = "SliceList"
    FEASIBILITY_SCORE = "FeasibilityScore"
    SENSOR_TYPE = "SensorType"
    SENSOR_HANDLE = "SensorHandle"
    GEOFENCE_SPEC = "GeofenceSpec"
    GEOFENCE_RESULT = "GeofenceResult"
    ENERGY_PLAN = "EnergyPlan"
    PRIORITY_RESULT = "PriorityResult"
    WAYPOINT_ACK = "WaypointAck"
    ALTITUDE = "Altitude"
    ALTITUDE_ACK = "AltitudeAck"
    SPEED = "Speed"
    SPEED_ACK = "SpeedAck"
    SWARM_STATE = "SwarmState"
    AVOIDANCE_CMD = "AvoidanceCmd"
    SWARM_SPEC = "SwarmSpec"
    FORMATION_CMD = "FormationCmd"
    TASK_ACK = "TaskAck"
    ALERT_TYPE = "AlertType"
    ALERT_ACK = "AlertAck"
    HANDOVER_CMD = "HandoverCmd"
    DECISION_RECORD = "DecisionRecord"
    LOG_ACK = "LogAck"
    MISSION_SPEC = "MissionSpec"
    MISSION_PLAN = "MissionPlan"
    STATUS_MSG = "StatusMsg"
    BROADCAST_ACK = "BroadcastAck"
    HEARTBEAT_ACK = "HeartbeatAck"
    MISSION_LOG = "MissionLog"
    COMPLIANCE_RESULT = "ComplianceResult"
    VALIDATION_RESULT = "ValidationResult"
    DEGRADATION_SPEC = "DegradationSpec"
    OFFLOAD_RESULT = "OffloadResult"
    RESOURCE_SPEC = "ResourceSpec"
    OFFLOAD_TARGET = "OffloadTarget"


_SLICE_CHOICE = ChoiceSchema("EMBB", "URLLC", "MMTC")
_METRIC_CHOICE = ChoiceSchema("latency", "jitter", "loss", "throughput", "edge_load")
_ACK = RecordSchema(acknowledged=BooleanSchema(), detail=StringSchema(allow_empty=True))
_UNIT = NumberSchema(0.0, 1.0)

_NETWORK_STATE_RECORD = RecordSchema(
    slice=_SLICE_CHOICE,
    latency_ms=NumberSchema(0.0),
    jitter_ms=NumberSchema(0.0),
    loss_rate=_UNIT,
    throughput_mbps=NumberSchema(0.0),
    edge_load=_UNIT,
)

_SLA_SPEC_RECORD = RecordSchema(
    max_latency_ms=NumberSchema(0.0),
    max_jitter_ms=NumberSchema(0.0),
    max_loss_rate=_UNIT,
    min_throughput_mbps=NumberSchema(0.0),
    max_edge_load=_UNIT,
)

_TASK_SPEC_RECORD = RecordSchema(task_id=StringSchema(), demand=_UNIT)

# One value schema per domain type. The underlying network papers name these
# types without defining their shapes, so the shapes below are this package's
# documented contract (docs/domain_types.md mirrors this table).
DOMAIN_SCHEMAS: dict[DomainType, ValueSchema] = {
    DomainType.POSITION: PositionSchema(),
    DomainType.GNB_ID: StringSchema(),
    DomainType.UAV_ID: StringSchema(),
    DomainType.SLICE_TYPE: _SLICE_CHOICE,
    DomainType.TASK_SPEC: _TASK_SPEC_RECORD,
    DomainType.WAYPOINTS: ListSchema(PositionSchema(), min_len=1),
    DomainType.RISK_SCORE: _UNIT,
    DomainType.NETWORK_STATE: _NETWORK_STATE_RECORD,
    DomainType.TELEMETRY_STATE: RecordSchema(
        slice=_SLICE_CHOICE,
        latency_ms=NumberSchema(0.0),
        jitter_ms=NumberSchema(0.0),
        loss_rate=_UNIT,
        throughput_mbps=NumberSchema(0.0),
        edge_load=_UNIT,
        rsrp_dbm=NumberSchema(-160.0, 0.0),
        link_quality=_UNIT,
    ),
    DomainType.EDGE_LOAD: _UNIT,
    DomainType.BATTERY_LEVEL: _UNIT,
    DomainType.INTENT: StringSchema(),
    DomainType.SLA_SPEC: _SLA_SPEC_RECORD,
    DomainType.SIGNAL_STRENGTH: NumberSchema(-160.0, 0.0),  # RSRP, dBm
    DomainType.GNB_LIST: ListSchema(
        RecordSchema(gnb_id=StringSchema(), distance_m=NumberSchema(0.0), load=_UNIT)
    ),
    DomainType.SLICE_STATUS: RecordSchema(
        slice=_SLICE_CHOICE,
        active=BooleanSchema(),
        allocated_bandwidth_mbps=NumberSchema(0.0),
        current_load=_UNIT,
    ),
    DomainType.SLA_PREDICTION: RecordSchema(risk=_UNIT, dimensions=ListSchema(_METRIC_CHOICE)),
    DomainType.HANDOVER_STATUS: RecordSchema(
        uav_id=StringSchema(), serving_gnb_id=StringSchema(), in_progress=BooleanSchema()
    ),
    DomainType.TRAFFIC_PATTERN: RecordSchema(
        slice=_SLICE_CHOICE,
        mean_throughput_mbps=NumberSchema(0.0),
        peak_throughput_mbps=NumberSchema(0.0),
        flow_count=IntegerSchema(0),
    ),
    DomainType.INTERFERENCE_LEVEL: _UNIT,
    DomainType.LINK_QUALITY: _UNIT,
    DomainType.RECOVERY_STRATEGY: ChoiceSchema(
        "switch_slice", "edge_offload", "graceful_degradation", "reallocate", "wait"
    ),
    DomainType.SLICE_LIST: ListSchema(_SLICE_CHOICE),
    DomainType.FEASIBILITY_SCORE: _UNIT,
    DomainType.SENSOR_TYPE: ChoiceSchema("camera", "lidar", "thermal", "spectrum"),
    DomainType.SENSOR_HANDLE: RecordSchema(
        sensor=ChoiceSchema("camera", "lidar", "thermal", "spectrum"),
        handle=StringSchema(),
        active=BooleanSchema(),
    ),
    DomainType.GEOFENCE_SPEC: RecordSchema(center=PositionSchema(), radius_m=NumberSchema(1.0)),
    DomainType.GEOFENCE_RESULT: RecordSchema(
        inside=BooleanSchema(), distance_to_boundary_m=NumberSchema()
    ),
    DomainType.ENERGY_PLAN: RecordSchema(
        required_wh=NumberSchema(0.0), available_wh=NumberSchema(0.0), feasible=BooleanSchema()
    ),
    DomainType.PRIORITY_RESULT: RecordSchema(granted=BooleanSchema(), priority_level=IntegerSchema(0, 7)),
    DomainType.WAYPOINT_ACK: _ACK,
    DomainType.ALTITUDE: NumberSchema(0.0, 10000.0),  # target altitude, m
    DomainType.ALTITUDE_ACK: _ACK,
    DomainType.SPEED: NumberSchema(0.0, 100.0),  # m/s
    DomainType.SPEED_ACK: _ACK,
    DomainType.SWARM_STATE: RecordSchema(
        uav_ids=ListSchema(StringSchema(), min_len=1), cohesion=_UNIT
    ),
    DomainType.AVOIDANCE_CMD: RecordSchema(
        uav_id=StringSchema(),
        maneuver=ChoiceSchema("climb", "descend", "hold", "yaw_left", "yaw_right"),
        magnitude=NumberSchema(0.0),
    ),
    DomainType.SWARM_SPEC: RecordSchema(
        formation=ChoiceSchema("line", "wedge", "ring", "grid"), spacing_m=NumberSchema(1.0)
    ),
    DomainType.FORMATION_CMD: RecordSchema(
        formation=ChoiceSchema("line", "wedge", "ring", "grid"),
        assignments=ListSchema(RecordSchema(uav_id=StringSchema(), slot=IntegerSchema(0))),
    ),
    DomainType.TASK_ACK: _ACK,
    DomainType.ALERT_TYPE: ChoiceSchema("info", "warning", "critical"),
    DomainType.ALERT_ACK: _ACK,
    DomainType.HANDOVER_CMD: RecordSchema(
        uav_id=StringSchema(),
        target_gnb_id=StringSchema(),
        status=ChoiceSchema("issued", "rejected"),
    ),
    DomainType.DECISION_RECORD: RecordSchema(
        actor=StringSchema(), action=StringSchema(), rationale=StringSchema(allow_empty=True)
    ),
    DomainType.LOG_ACK: _ACK,
    DomainType.MISSION_SPEC: RecordSchema(
        mission_id=StringSchema(),
        objective=StringSchema(),
        required_steps=ListSchema(StringSchema(), min_len=1),
    ),
    DomainType.MISSION_PLAN: RecordSchema(
        mission_id=StringSchema(), steps=ListSchema(StringSchema(), min_len=1)
    ),
    DomainType.STATUS_MSG: StringSchema(),
    DomainType.BROADCAST_ACK: _ACK,
    DomainType.HEARTBEAT_ACK: _ACK,
    DomainType.MISSION_LOG: ListSchema(StringSchema()),
    DomainType.COMPLIANCE_RESULT: RecordSchema(
        compliant=BooleanSchema(), violations=ListSchema(_METRIC_CHOICE)
    ),
    DomainType.VALIDATION_RESULT: RecordSchema(
        complete=BooleanSchema(), missing_steps=ListSchema(StringSchema())
    ),
    DomainType.DEGRADATION_SPEC: RecordSchema(reduction_fraction=_UNIT, reason=StringSchema()),
    DomainType.OFFLOAD_RESULT: RecordSchema(
        accepted=BooleanSchema(), node_id=StringSchema(), new_edge_load=_UNIT
    ),
    DomainType.RESOURCE_SPEC: RecordSchema(bandwidth_share=_UNIT, compute_share=_UNIT),
    DomainType.OFFLOAD_TARGET: RecordSchema(node_id=StringSchema(), load=_UNIT),
}


# ---------------------------------------------------------------------------
# Signatures, calls, results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToolSignature:
    name: str
    inputs: tuple[tuple[str, DomainType], ...]  # ordered (param name, type)
    output: DomainType
    effect: EffectClass
    mutates_fleet: bool = False


@dataclass(frozen=True)
class ToolCall:
    """A named tool invocation with positional arguments in wire form."""

    name: str
    args: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Ok:
    value: object


@dataclass(frozen=True)
class ToolError:
    code: str
    message: str


ToolResult = Union[Ok, ToolError]

REJECTION_CODES = ("UNKNOWN_TOOL", "BAD_ARITY", "BAD_ARGUMENT")


@dataclass(frozen=True)
class CallRejection:
    """Structural validation failure. Carries the first failed check only.

    Checks run in a fixed order (tool name, then arity, then arguments left to
    right), so repairing the named failure can only move the next rejection
    strictly later.
    """

    code: str
    message: str
    arg_index: Optional[int] = None
    param: Optional[str] = None

    def __post_init__(self) -> None:
        if self.code not in REJECTION_CODES:
            raise ValueError(f"unknown rejection code {self.code!r}")


def _sig(name: str, inputs: Sequence[tuple[str, DomainType]], output: DomainType,
         effect: EffectClass, mutates_fleet: bool = False) -> ToolSignature:
    return ToolSignature(name, tuple(inputs), output, effect, mutates_fleet)


def build_catalog() -> dict[str, ToolSignature]:
    """Build the full 42-tool registry (16 observation, 22 reasoning, 4 configuration).

    The returned dict preserves catalog order and must be treated as
    immutable; share one instance freely.
    """
    D = DomainType
    O, R, C = EffectClass.OBSERVATION, EffectClass.REASONING, EffectClass.CONFIGURATION
    sigs = [
        # observation
        _sig("read_telemetry", [], D.TELEMETRY_STATE, O),
        _sig("check_network_state", [], D.NETWORK_STATE, O),
        _sig("get_signal_strength", [("position", D.POSITION)], D.SIGNAL_STRENGTH, O),
        _sig("scan_available_gnbs", [("position", D.POSITION)], D.GNB_LIST, O),
        _sig("get_edge_load", [], D.EDGE_LOAD, O),
        _sig("get_slice_status", [("slice", D.SLICE_TYPE)], D.SLICE_STATUS, O),
        _sig("read_uav_position", [("uav_id", D.UAV_ID)], D.POSITION, O),
        _sig("get_battery_level", [("uav_id", D.UAV_ID)], D.BATTERY_LEVEL, O),
        _sig("predict_sla_violation", [("state", D.NETWORK_STATE)], D.SLA_PREDICTION, O),
        _sig("check_handover_status", [("uav_id", D.UAV_ID)], D.HANDOVER_STATUS, O),
        _sig("get_traffic_pattern", [("slice", D.SLICE_TYPE)], D.TRAFFIC_PATTERN, O),
        _sig("monitor_interference", [("position", D.POSITION)], D.INTERFERENCE_LEVEL, O),
        _sig("check_link_quality", [("uav_id", D.UAV_ID), ("gnb_id", D.GNB_ID)], D.LINK_QUALITY, O),
        _sig("select_recovery_strategy", [("state", D.NETWORK_STATE), ("risk", D.RISK_SCORE)],
             D.RECOVERY_STRATEGY, O),
        _sig("get_available_slices", [("position", D.POSITION)], D.SLICE_LIST, O),
        _sig("check_migration_feasibility", [("uav_id", D.UAV_ID), ("gnb_id", D.GNB_ID)],
             D.FEASIBILITY_SCORE, O),
        # reasoning
        _sig("activate_sensor", [("sensor", D.SENSOR_TYPE)], D.SENSOR_HANDLE, R),
        _sig("risk_assessment", [("telemetry", D.TELEMETRY_STATE)], D.RISK_SCORE, R),
        _sig("evaluate_intent_feasibility", [("intent", D.INTENT), ("state", D.NETWORK_STATE)],
             D.FEASIBILITY_SCORE, R),
        _sig("check_geofence", [("position", D.POSITION), ("geofence", D.GEOFENCE_SPEC)],
             D.GEOFENCE_RESULT, R),
        _sig("path_planning",
             [("start", D.POSITION), ("goal", D.POSITION), ("state", D.NETWORK_STATE)],
             D.WAYPOINTS, R),
        _sig("compute_energy_budget", [("waypoints", D.WAYPOINTS), ("battery", D.BATTERY_LEVEL)],
             D.ENERGY_PLAN, R),
        _sig("select_offload_target", [("edge_load", D.EDGE_LOAD), ("task", D.TASK_SPEC)],
             D.OFFLOAD_TARGET, R),
        _sig("negotiate_priority",
             [("requester_id", D.UAV_ID), ("peer_id", D.UAV_ID), ("intent", D.INTENT)],
             D.PRIORITY_RESULT, R),
        _sig("set_waypoint", [("uav_id", D.UAV_ID), ("waypoint", D.POSITION)], D.WAYPOINT_ACK,
             R, mutates_fleet=True),
        _sig("adjust_altitude", [("uav_id", D.UAV_ID), ("altitude_m", D.ALTITUDE)], D.ALTITUDE_ACK,
             R, mutates_fleet=True),
        _sig("adjust_speed", [("uav_id", D.UAV_ID), ("speed_mps", D.SPEED)], D.SPEED_ACK,
             R, mutates_fleet=True),
        _sig("collision_avoidance",
             [("uav_id", D.UAV_ID), ("position", D.POSITION), ("swarm", D.SWARM_STATE)],
             D.AVOIDANCE_CMD, R, mutates_fleet=True),
        _sig("swarm_formation", [("spec", D.SWARM_SPEC), ("waypoints", D.WAYPOINTS)],
             D.FORMATION_CMD, R, mutates_fleet=True),
        _sig("assign_task", [("uav_id", D.UAV_ID), ("task", D.TASK_SPEC)], D.TASK_ACK,
             R, mutates_fleet=True),
        _sig("send_alert", [("uav_id", D.UAV_ID), ("alert", D.ALERT_TYPE)], D.ALERT_ACK, R),
        _sig("request_handover", [("uav_id", D.UAV_ID), ("target_gnb", D.GNB_ID)], D.HANDOVER_CMD,
             R, mutates_fleet=True),
        _sig("log_decision", [("record", D.DECISION_RECORD)], D.LOG_ACK, R),
        _sig("update_mission_plan", [("mission", D.MISSION_SPEC), ("state", D.NETWORK_STATE)],
             D.MISSION_PLAN, R),
        _sig("broadcast_status", [("uav_id", D.UAV_ID), ("message", D.STATUS_MSG)],
             D.BROADCAST_ACK, R),
        _sig("heartbeat", [("uav_id", D.UAV_ID)], D.HEARTBEAT_ACK, R),
        _sig("verify_sla_compliance", [("state", D.NETWORK_STATE), ("sla", D.SLA_SPEC)],
             D.COMPLIANCE_RESULT, R),
        _sig("validate_mission_completion", [("mission", D.MISSION_SPEC), ("log", D.MISSION_LOG)],
             D.VALIDATION_RESULT, R),
        # configuration
        _sig("switch_network_slice", [("from_slice", D.SLICE_TYPE), ("to_slice", D.SLICE_TYPE)],
             D.NETWORK_STATE, C),
        _sig("graceful_degradation", [("spec", D.DEGRADATION_SPEC)], D.NETWORK_STATE, C),
        _sig("edge_offload", [("task", D.TASK_SPEC), ("target", D.OFFLOAD_TARGET)],
             D.OFFLOAD_RESULT, C),
        _sig("trigger_slice_reallocation", [("slice", D.SLICE_TYPE), ("allocation", D.RESOURCE_SPEC)],
             D.NETWORK_STATE, C),
    ]
    registry = {s.name: s for s in sigs}
    assert len(registry) == 42, "catalog must hold exactly 42 uniquely named tools"
    return registry


def effect_of(registry: Mapping[str, ToolSignature], name: str) -> EffectClass:
    if name not in registry:
        raise KeyError(f"unknown tool {name!r}")
    return registry[name].effect


def validate_call(
    registry: Mapping[str, ToolSignature], call: ToolCall
) -> Union[ToolCall, CallRejection]:
    """Structurally validate a call against the registry.

    On success returns a canonicalized copy of the call (numbers as floats,
    sequences as lists, slice enums as strings). On failure returns a
    CallRejection naming the first failed check. Rejections are ordinary
    values; nothing raises.
    """
    sig = registry.get(call.name)
    if sig is None:
        return CallRejection("UNKNOWN_TOOL", f"no tool named {call.name!r}")
    if len(call.args) != len(sig.inputs):
        return CallRejection(
            "BAD_ARITY",
            f"{call.name} takes {len(sig.inputs)} argument(s), got {len(call.args)}",
        )
    canon_args = []
    for i, ((param, dtype), raw) in enumerate(zip(sig.inputs, call.args)):
        try:
            canon_args.append(DOMAIN_SCHEMAS[dtype].canon(raw))
        except SchemaError as exc:
            return CallRejection(
                "BAD_ARGUMENT",
                f"{call.name} argument {i} ({param}: {dtype.value}): {exc}",
                arg_index=i,
                param=param,
            )
    return ToolCall(call.name, tuple(canon_args))


# ---------------------------------------------------------------------------
# Sampling (used by trajectory generators and tests)
# ---------------------------------------------------------------------------

# Small id pools keep sampled calls resolvable against the reference topology.
_UAV_POOL = ("uav-1", "uav-2", "uav-3")
_GNB_POOL = ("gnb-1", "gnb-2", "gnb-3")
_NODE_POOL = ("edge-1", "edge-2", "mec-core")


def sample_value(schema: ValueSchema, rng: np.random.Generator) -> object:
    """Draw one conforming value for a schema."""
    if isinstance(schema, NumberSchema):
        lo = schema.lo if schema.lo is not None else -100.0
        hi = schema.hi if schema.hi is not None else 100.0
        return round(float(rng.uniform(lo, hi)), 4)
    if isinstance(schema, IntegerSchema):
        lo = schema.lo if schema.lo is not None else 0
        hi = schema.hi if schema.hi is not None else 10
        return int(rng.integers(lo, hi + 1))
    if isinstance(schema, BooleanSchema):
        return bool(rng.integers(0, 2))
    if isinstance(schema, ChoiceSchema):
        return schema.options[int(rng.integers(0, len(schema.options)))]
    if isinstance(schema, PositionSchema):
        return [round(float(rng.uniform(-1000, 1000)), 1) for _ in range(2)] + [
            round(float(rng.uniform(50, 300)), 1)
        ]
    if isinstance(schema, StringSchema):
        return f"s{int(rng.integers(0, 10000))}"
    if isinstance(schema, RecordSchema):
        return {k: sample_value(v, rng) for k, v in schema.fields.items()}
    if isinstance(schema, ListSchema):
        n = max(schema.min_len, 1)
        if schema.max_len is not None:
            n = min(n, schema.max_len)
        return [sample_value(schema.item, rng) for _ in range(n)]
    raise TypeError(f"cannot sample schema {schema!r}")


def _sample_arg(dtype: DomainType, rng: np.random.Generator) -> object:
    # Ids come from the reference pools so semantic lookups usually succeed.
    if dtype is DomainType.UAV_ID:
        return _UAV_POOL[int(rng.integers(0, len(_UAV_POOL)))]
    if dtype is DomainType.GNB_ID:
        return _GNB_POOL[int(rng.integers(0, len(_GNB_POOL)))]
    if dtype is DomainType.INTENT:
        verbs = ("keep latency below 10 ms", "sustain throughput above 10 Mbps",
                 "hold loss under 1 percent", "complete the survey mission")
        return verbs[int(rng.integers(0, len(verbs)))]
    value = sample_value(DOMAIN_SCHEMAS[dtype], rng)
    if dtype is DomainType.TASK_SPEC:
        value["task_id"] = f"task-{int(rng.integers(0, 1000))}"
    if dtype is DomainType.OFFLOAD_TARGET:
        value["node_id"] = _NODE_POOL[int(rng.integers(0, len(_NODE_POOL)))]
    return value


def sample_call(
    registry: Mapping[str, ToolSignature], name: str, rng: np.random.Generator
) -> ToolCall:
    """Draw a structurally valid call for the named tool."""
    sig = registry[name]
    return ToolCall(name, tuple(_sample_arg(dtype, rng) for _, dtype in sig.inputs))


# ---------------------------------------------------------------------------
# Export and wire codecs
# ---------------------------------------------------------------------------


def export_schema(registry: Mapping[str, ToolSignature]) -> list[dict]:
    """Machine-readable catalog: one object per tool, in catalog order."""
    return [
        {
            "name": s.name,
            "effect": s.effect.value,
            "mutates_fleet": s.mutates_fleet,
            "params": [{"name": p, "type": t.value} for p, t in s.inputs],
            "output": s.output.value,
        }
        for s in registry.values()
    ]


def export_domain_schemas() -> dict[str, dict]:
    """Value-schema table keyed by domain type name."""
    return {dtype.value: schema.describe() for dtype, schema in DOMAIN_SCHEMAS.items()}


def call_to_dict(call: ToolCall) -> dict:
    return {"tool": call.name, "args": list(call.args)}


def call_from_dict(d: Mapping) -> ToolCall:
    return ToolCall(d["tool"], tuple(d["args"]))


def result_to_dict(result: ToolResult) -> dict:
    if isinstance(result, Ok):
        return {"ok": result.value}
    return {"error": {"code": result.code, "message": result.message}}


def result_from_dict(d: Mapping) -> ToolResult:
    if "ok" in d:
        return Ok(d["ok"])
    err = d["error"]
    return ToolError(err["code"], err["message"])
