"""Analytic transition model for the six-dimensional network state.

The model answers one question per step: given the current network state, the
fleet, a validated tool call, and an optional degradation event, what happens
next? Observation and reasoning calls preserve network state exactly (absent
degradation); the four configuration tools apply parametric transitions; an
active degradation pins metrics to degraded targets until it expires, is
outlasted, or is resolved by a matching configuration action.

All stochasticity is a single bounded multiplicative noise draw per step,
seeded from (model seed, step index), so every transition is bit-reproducible.

Usage:
    model = AnalyticModel.reference()
    out = model.step(state, fleet, validated_call, degradation=None, history=[])
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Mapping, Optional, Sequence

import numpy as np

from .state import (
    DegradationEvent,
    DegradationKind,
    FleetState,
    HistoryEntry,
    NetworkState,
    SliceType,
    UavState,
    validate_state,
    violations_for_bounds,
)
from .state import SlaBounds
from .tools import (
    EffectClass,
    Ok,
    ToolCall,
    ToolError,
    ToolResult,
    ToolSignature,
    build_catalog,
)

__all__ = [
    "SliceBaseline",
    "KindMultipliers",
    "AnalyticModelParams",
    "TransitionOutput",
    "AnalyticModel",
    "RemoteTransitionModel",
    "AdapterError",
    "AdapterTransportError",
    "AdapterContractError",
    "SEMANTIC_ERROR_CODES",
    "RESOLUTION_MAP",
    "resolves",
    "noise_factors",
    "calibrate",
    "load_params",
    "save_params",
]

# Error codes a semantically invalid action can produce. These are results,
# not faults: the episode continues and the agent may retry.
SEMANTIC_ERROR_CODES = (
    "SLICE_MISMATCH",
    "EDGE_CAPACITY",
    "RESOURCE_CONFLICT",
    "UNKNOWN_UAV",
    "UNKNOWN_GNB",
)

# Which configuration tools count as a remedy for which degradation kind.
# A semantically successful matching call ends the event's metric pinning.
RESOLUTION_MAP: dict[DegradationKind, frozenset[str]] = {
    DegradationKind.LINK_FADE: frozenset({"switch_network_slice", "trigger_slice_reallocation"}),
    DegradationKind.CONGESTION: frozenset(
        {"switch_network_slice", "trigger_slice_reallocation", "graceful_degradation"}
    ),
    DegradationKind.GNB_OUTAGE: frozenset({"switch_network_slice", "edge_offload"}),
    DegradationKind.EDGE_OVERLOAD: frozenset({"edge_offload", "graceful_degradation"}),
}

_CAPACITY_EPS = 1e-9  # tolerance for share/capacity sums right at 1.0


def resolves(tool_name: str, kind: DegradationKind) -> bool:
    """True when a configuration tool is an accepted remedy for the event kind."""
    return tool_name in RESOLUTION_MAP[kind]


@dataclass(frozen=True)
class SliceBaseline:
    """Nominal per-slice metrics under no degradation."""

    latency_ms: float
    jitter_ms: float
    loss_rate: float
    throughput_mbps: float

    def __post_init__(self) -> None:
        if min(self.latency_ms, self.jitter_ms, self.throughput_mbps) < 0:
            raise ValueError("baseline metrics must be non-negative")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ValueError("baseline loss_rate must lie in [0, 1]")
        if self.jitter_ms > self.latency_ms:
            raise ValueError("baseline jitter must not exceed latency")


@dataclass(frozen=True)
class KindMultipliers:
    """Per-kind metric multipliers at full severity (throughput < 1 degrades)."""

    latency: float
    jitter: float
    loss: float
    throughput: float
    edge_load: float

    def __post_init__(self) -> None:
        for name in ("latency", "jitter", "loss", "throughput", "edge_load"):
            if getattr(self, name) <= 0:
                raise ValueError(f"multiplier {name} must be positive")


def _effective(mult: float, severity: float) -> float:
    # Severity interpolates multipliers between identity (0) and full (1).
    return 1.0 + severity * (mult - 1.0)


@dataclass(frozen=True)
class AnalyticModelParams:
    """Complete coefficient set for the analytic model.

    A canonical instance lives in data/reference_params.json; load_params /
    save_params round-trip the JSON form.
    """

    slice_baselines: Mapping[SliceType, SliceBaseline]
    degradation_multipliers: Mapping[DegradationKind, KindMultipliers]
    edge_load_baseline: float = 0.3
    switch_settle_latency_ms: float = 2.0
    degrade_latency_relief: float = 0.3
    degrade_edge_relief: float = 0.5
    offload_recovery: float = 0.6
    realloc_gain: float = 0.25
    settle_rate: float = 0.6
    settling_steps: int = 8
    noise_amplitude: float = 0.02
    random_seed: int = 0
    n_gnbs: int = 3

    def __post_init__(self) -> None:
        missing = [s.value for s in SliceType if s not in self.slice_baselines]
        if missing:
            raise ValueError(f"baselines missing for slices {missing}")
        missing_k = [k.value for k in DegradationKind if k not in self.degradation_multipliers]
        if missing_k:
            raise ValueError(f"multipliers missing for kinds {missing_k}")
        if not 0.0 <= self.edge_load_baseline <= 1.0:
            raise ValueError("edge_load_baseline must lie in [0, 1]")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be non-negative")
        if not 0.0 < self.settle_rate <= 1.0:
            raise ValueError("settle_rate must lie in (0, 1]")
        if self.n_gnbs < 1:
            raise ValueError("n_gnbs must be positive")

    def baseline(self, slc: SliceType) -> SliceBaseline:
        return self.slice_baselines[slc]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "random_seed": self.random_seed,
            "noise_amplitude": self.noise_amplitude,
            "slice_baselines": {
                s.value: {
                    "latency_ms": b.latency_ms,
                    "jitter_ms": b.jitter_ms,
                    "loss_rate": b.loss_rate,
                    "throughput_mbps": b.throughput_mbps,
                }
                for s, b in sorted(self.slice_baselines.items())
            },
            "edge_load_baseline": self.edge_load_baseline,
            "degradation_multipliers": {
                k.value: {
                    "latency": m.latency,
                    "jitter": m.jitter,
                    "loss": m.loss,
                    "throughput": m.throughput,
                    "edge_load": m.edge_load,
                }
                for k, m in ((k, self.degradation_multipliers[k]) for k in DegradationKind)
            },
            "switch_settle_latency_ms": self.switch_settle_latency_ms,
            "degrade_latency_relief": self.degrade_latency_relief,
            "degrade_edge_relief": self.degrade_edge_relief,
            "offload_recovery": self.offload_recovery,
            "realloc_gain": self.realloc_gain,
            "settle_rate": self.settle_rate,
            "settling_steps": self.settling_steps,
            "n_gnbs": self.n_gnbs,
        }

    def with_scaled_baseline(
        self, slc: SliceType, metric_field: str, factor: float
    ) -> "AnalyticModelParams":
        """A copy with one slice-baseline metric scaled, for perturbation studies."""
        base = self.slice_baselines[slc]
        if not hasattr(base, metric_field):
            raise ValueError(f"unknown baseline metric {metric_field!r}")
        scaled = replace(base, **{metric_field: getattr(base, metric_field) * factor})
        baselines = dict(self.slice_baselines)
        baselines[slc] = scaled
        return replace(self, slice_baselines=baselines)

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "AnalyticModelParams":
        version = d.get("schema_version", 1)
        if version != 1:
            raise ValueError(f"unsupported params schema_version {version}")
        baselines = {
            SliceType(name): SliceBaseline(
                latency_ms=float(b["latency_ms"]),
                jitter_ms=float(b["jitter_ms"]),
                loss_rate=float(b["loss_rate"]),
                throughput_mbps=float(b["throughput_mbps"]),
            )
            for name, b in d["slice_baselines"].items()
        }
        mults = {
            DegradationKind(name): KindMultipliers(
                latency=float(m["latency"]),
                jitter=float(m["jitter"]),
                loss=float(m["loss"]),
                throughput=float(m["throughput"]),
                edge_load=float(m["edge_load"]),
            )
            for name, m in d["degradation_multipliers"].items()
        }
        return cls(
            slice_baselines=baselines,
            degradation_multipliers=mults,
            edge_load_baseline=float(d["edge_load_baseline"]),
            switch_settle_latency_ms=float(d["switch_settle_latency_ms"]),
            degrade_latency_relief=float(d["degrade_latency_relief"]),
            degrade_edge_relief=float(d["degrade_edge_relief"]),
            offload_recovery=float(d["offload_recovery"]),
            realloc_gain=float(d["realloc_gain"]),
            settle_rate=float(d["settle_rate"]),
            settling_steps=int(d["settling_steps"]),
            noise_amplitude=float(d["noise_amplitude"]),
            random_seed=int(d["random_seed"]),
            n_gnbs=int(d["n_gnbs"]),
        )


def load_params(path: str) -> AnalyticModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return AnalyticModelParams.from_json_dict(json.load(fh))


def save_params(params: AnalyticModelParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_json_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class TransitionOutput:
    next_state: NetworkState
    next_fleet: FleetState
    result: ToolResult
    annotation: Optional[str] = None  # free-text reasoning trace; no contract reads it


def noise_factors(seed: int, step: int, amplitude: float) -> np.ndarray:
    """Five per-metric multiplicative factors for one step, order fixed:
    latency, jitter, loss, throughput, edge_load."""
    rng = np.random.default_rng([seed & 0xFFFFFFFF, step])
    return 1.0 + amplitude * rng.uniform(-1.0, 1.0, size=5)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _gnb_positions(n: int) -> dict[str, tuple[float, float, float]]:
    # Reference topology: gNBs on a centered 800 m line at ground level.
    half = (n - 1) * 800.0 / 2.0
    return {f"gnb-{i + 1}": (i * 800.0 - half, 0.0, 0.0) for i in range(n)}


def _dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def _finalize(slc: SliceType, lat: float, jit: float, loss: float, thr: float,
              edge: float) -> NetworkState:
    # float() casts keep numpy scalars out of the state record.
    lat = max(0.0, float(lat))
    state = NetworkState(
        slice=slc,
        latency_ms=lat,
        jitter_ms=min(max(0.0, float(jit)), lat),
        loss_rate=_clamp01(float(loss)),
        throughput_mbps=max(0.0, float(thr)),
        edge_load=_clamp01(float(edge)),
    )
    problem = validate_state(state)
    assert problem is None, f"analytic transition produced invalid state: {problem}"
    return state


class AnalyticModel:
    """Deterministic parametric transition model.

    Instances are immutable and freely shareable; step() is a pure function of
    its explicit arguments plus the configured seed.
    """

    def __init__(self, params: AnalyticModelParams,
                 registry: Optional[Mapping[str, ToolSignature]] = None):
        self.params = params
        self.registry = dict(registry) if registry is not None else build_catalog()
        self._gnbs = _gnb_positions(params.n_gnbs)

    @classmethod
    def reference(cls) -> "AnalyticModel":
        """Model built from the packaged reference calibration."""
        text = resources.files("slicegym.data").joinpath("reference_params.json").read_text()
        return cls(AnalyticModelParams.from_json_dict(json.loads(text)))

    def reseeded(self, seed: int) -> "AnalyticModel":
        """Same coefficients, different noise stream."""
        return AnalyticModel(replace(self.params, random_seed=int(seed)), self.registry)

    # ------------------------------------------------------------------
    # Stepping
    # ------------------------------------------------------------------

    def step(
        self,
        state: NetworkState,
        fleet: FleetState,
        call: ToolCall,
        degradation: Optional[DegradationEvent] = None,
        history: Sequence[HistoryEntry] = (),
    ) -> TransitionOutput:
        """Advance one step. The call must already be validated structurally."""
        sig = self.registry.get(call.name)
        if sig is None:
            raise KeyError(f"unvalidated call: unknown tool {call.name!r}")
        t = len(history)
        factors = noise_factors(self.params.random_seed, t, self.params.noise_amplitude)

        if sig.effect is EffectClass.CONFIGURATION:
            candidate, result = self._apply_configuration(state, call, factors)
            next_fleet = fleet
        else:
            candidate = state
            result, next_fleet = self._answer(sig, state, fleet, call, t, history)

        resolved = (
            degradation is not None
            and degradation.active_at(t)
            and sig.effect is EffectClass.CONFIGURATION
            and isinstance(result, Ok)
            and resolves(call.name, degradation.kind)
        )
        if degradation is not None and not resolved:
            if degradation.active_at(t):
                candidate = self._pinned(candidate.slice, degradation, factors)
            elif degradation.expired_at(t):
                candidate = self._settled(candidate)

        # NetworkState-valued configuration results must describe the state
        # that actually materialized, pinning included.
        if sig.effect is EffectClass.CONFIGURATION and isinstance(result, Ok):
            if call.name in ("switch_network_slice", "graceful_degradation",
                             "trigger_slice_reallocation"):
                result = Ok(candidate.to_dict())
            elif call.name == "edge_offload":
                payload = dict(result.value)
                payload["new_edge_load"] = candidate.edge_load
                result = Ok(payload)

        return TransitionOutput(next_state=candidate, next_fleet=next_fleet, result=result)

    # ------------------------------------------------------------------
    # Degradation phases
    # ------------------------------------------------------------------

    def _pinned(self, slc: SliceType, event: DegradationEvent,
                factors: np.ndarray) -> NetworkState:
        b = self.params.baseline(slc)
        m = self.params.degradation_multipliers[event.kind]
        s = event.severity
        return _finalize(
            slc,
            b.latency_ms * _effective(m.latency, s) * factors[0],
            b.jitter_ms * _effective(m.jitter, s) * factors[1],
            b.loss_rate * _effective(m.loss, s) * factors[2],
            b.throughput_mbps * _effective(m.throughput, s) * factors[3],
            self.params.edge_load_baseline * _effective(m.edge_load, s) * factors[4],
        )

    def _settled(self, current: NetworkState) -> NetworkState:
        # Geometric pull toward baseline, noise-free, after an event expires.
        b = self.params.baseline(current.slice)
        keep = 1.0 - self.params.settle_rate

        def pull(x: float, target: float) -> float:
            return target + (x - target) * keep

        return _finalize(
            current.slice,
            pull(current.latency_ms, b.latency_ms),
            pull(current.jitter_ms, b.jitter_ms),
            pull(current.loss_rate, b.loss_rate),
            pull(current.throughput_mbps, b.throughput_mbps),
            pull(current.edge_load, self.params.edge_load_baseline),
        )

    # ------------------------------------------------------------------
    # Configuration semantics
    # ------------------------------------------------------------------

    def _apply_configuration(
        self, state: NetworkState, call: ToolCall, factors: np.ndarray
    ) -> tuple[NetworkState, ToolResult]:
        p = self.params
        if call.name == "switch_network_slice":
            from_slice, to_slice = call.args
            if from_slice != state.slice.value:
                return state, ToolError(
                    "SLICE_MISMATCH",
                    f"current slice is {state.slice.value}, not {from_slice}",
                )
            target = SliceType(to_slice)
            b = p.baseline(target)
            nxt = _finalize(
                target,
                (b.latency_ms + p.switch_settle_latency_ms) * factors[0],
                b.jitter_ms * factors[1],
                b.loss_rate * factors[2],
                b.throughput_mbps * factors[3],
                state.edge_load,  # switching slices does not move edge utilization
            )
            return nxt, Ok(nxt.to_dict())

        if call.name == "graceful_degradation":
            spec = call.args[0]
            r = spec["reduction_fraction"]
            relief = 1.0 - p.degrade_latency_relief * r
            nxt = _finalize(
                state.slice,
                state.latency_ms * relief * factors[0],
                state.jitter_ms * relief * factors[1],
                state.loss_rate,
                state.throughput_mbps * (1.0 - r) * factors[3],
                state.edge_load * (1.0 - p.degrade_edge_relief * r) * factors[4],
            )
            return nxt, Ok(nxt.to_dict())

        if call.name == "edge_offload":
            task, target = call.args
            if target["load"] + task["demand"] > 1.0 + _CAPACITY_EPS:
                return state, ToolError(
                    "EDGE_CAPACITY",
                    f"target {target['node_id']} at load {target['load']} cannot absorb "
                    f"demand {task['demand']}",
                )
            b = p.baseline(state.slice)
            thr = state.throughput_mbps
            if thr < b.throughput_mbps:
                thr = thr + p.offload_recovery * (b.throughput_mbps - thr)
            nxt = _finalize(
                state.slice,
                state.latency_ms,
                state.jitter_ms,
                state.loss_rate,
                thr * factors[3],
                max(0.0, state.edge_load - task["demand"]) * factors[4],
            )
            return nxt, Ok(
                {"accepted": True, "node_id": target["node_id"], "new_edge_load": nxt.edge_load}
            )

        if call.name == "trigger_slice_reallocation":
            slc, alloc = call.args
            if alloc["bandwidth_share"] + alloc["compute_share"] > 1.0 + _CAPACITY_EPS:
                return state, ToolError(
                    "RESOURCE_CONFLICT",
                    "bandwidth_share + compute_share exceeds available capacity",
                )
            g = p.realloc_gain
            if slc == state.slice.value:
                thr = state.throughput_mbps * (1.0 + g * alloc["bandwidth_share"])
                lat = state.latency_ms * (1.0 - 0.5 * g * alloc["compute_share"])
            else:
                # Resources diverted to another slice cost this one throughput.
                thr = state.throughput_mbps * (1.0 - 0.5 * g * alloc["bandwidth_share"])
                lat = state.latency_ms
            nxt = _finalize(
                state.slice,
                lat * factors[0],
                state.jitter_ms,
                state.loss_rate,
                thr * factors[3],
                state.edge_load,
            )
            return nxt, Ok(nxt.to_dict())

        raise AssertionError(f"unhandled configuration tool {call.name}")

    # ------------------------------------------------------------------
    # Observation / reasoning answers
    # ------------------------------------------------------------------

    def _uav(self, fleet: FleetState, uav_id: str) -> Optional[UavState]:
        return fleet.get(uav_id)

    def _nearest_gnb(self, position: Sequence[float]) -> tuple[str, float]:
        best = min(self._gnbs.items(), key=lambda kv: _dist(position, kv[1]))
        return best[0], _dist(position, best[1])

    def _rsrp(self, distance_m: float) -> float:
        # Log-distance falloff; clamped to the SignalStrength domain.
        return max(-160.0, min(0.0, -60.0 - 20.0 * math.log10(1.0 + distance_m / 100.0)))

    def _answer(
        self,
        sig: ToolSignature,
        state: NetworkState,
        fleet: FleetState,
        call: ToolCall,
        t: int,
        history: Sequence[HistoryEntry],
    ) -> tuple[ToolResult, FleetState]:
        """Compute a non-configuration tool's result; may update fleet records."""
        p = self.params
        name, args = call.name, call.args

        def uav_or_error(uav_id: str) -> tuple[Optional[UavState], Optional[ToolError]]:
            u = self._uav(fleet, uav_id)
            if u is None:
                return None, ToolError("UNKNOWN_UAV", f"no UAV with id {uav_id!r}")
            return u, None

        if name == "read_telemetry":
            # Snapshot of the current network metrics plus radio gauges for
            # the lead UAV; the network fields mirror the state exactly.
            if not fleet.uavs:
                return ToolError("UNKNOWN_UAV", "fleet is empty"), fleet
            u = fleet.uavs[0]
            _, d = self._nearest_gnb(u.position)
            tel = state.to_dict()
            tel["rsrp_dbm"] = self._rsrp(d)
            tel["link_quality"] = _clamp01(1.0 / (1.0 + d / 800.0))
            return Ok(tel), fleet

        if name == "check_network_state":
            return Ok(state.to_dict()), fleet

        if name == "get_signal_strength":
            _, d = self._nearest_gnb(args[0])
            return Ok(self._rsrp(d)), fleet

        if name == "scan_available_gnbs":
            pos = args[0]
            out = []
            for i, (gnb_id, gpos) in enumerate(self._gnbs.items()):
                out.append({
                    "gnb_id": gnb_id,
                    "distance_m": _dist(pos, gpos),
                    "load": _clamp01(state.edge_load * (0.7 + 0.15 * i)),
                })
            return Ok(out), fleet

        if name == "get_edge_load":
            return Ok(state.edge_load), fleet

        if name == "get_slice_status":
            slc = SliceType(args[0])
            return Ok({
                "slice": slc.value,
                "active": slc is state.slice,
                "allocated_bandwidth_mbps": p.baseline(slc).throughput_mbps,
                "current_load": state.edge_load,
            }), fleet

        if name == "read_uav_position":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok(list(u.position)), fleet

        if name == "get_battery_level":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok(u.battery_fraction), fleet

        if name == "predict_sla_violation":
            probed = NetworkState.from_dict(args[0])
            dims = violations_for_bounds(probed, _generic_bounds())
            risk = min(1.0, 0.1 + 0.3 * len(dims))
            return Ok({"risk": risk, "dimensions": dims}), fleet

        if name == "check_handover_status":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            recent = any(
                e.call.name == "request_handover" and e.call.args and e.call.args[0] == u.uav_id
                for e in list(history)[-2:]
            )
            return Ok({
                "uav_id": u.uav_id,
                "serving_gnb_id": u.serving_gnb_id,
                "in_progress": recent,
            }), fleet

        if name == "get_traffic_pattern":
            slc = SliceType(args[0])
            mean = p.baseline(slc).throughput_mbps
            flows = {"EMBB": 120, "URLLC": 40, "MMTC": 900}[slc.value]
            return Ok({
                "slice": slc.value,
                "mean_throughput_mbps": mean,
                "peak_throughput_mbps": 1.5 * mean,
                "flow_count": flows,
            }), fleet

        if name == "monitor_interference":
            _, d = self._nearest_gnb(args[0])
            return Ok(_clamp01(0.1 + 0.5 * state.edge_load + 0.1 * d / 1000.0)), fleet

        if name == "check_link_quality":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            if args[1] not in self._gnbs:
                return ToolError("UNKNOWN_GNB", f"no gNB with id {args[1]!r}"), fleet
            d = _dist(u.position, self._gnbs[args[1]])
            return Ok(_clamp01((1.0 / (1.0 + d / 800.0)) * (1.0 - state.loss_rate))), fleet

        if name == "select_recovery_strategy":
            probed = NetworkState.from_dict(args[0])
            dims = violations_for_bounds(probed, _generic_bounds())
            if "latency" in dims or "jitter" in dims:
                strategy = "switch_slice"
            elif "throughput" in dims:
                strategy = "edge_offload"
            elif "edge_load" in dims:
                strategy = "graceful_degradation"
            elif "loss" in dims:
                strategy = "reallocate"
            else:
                strategy = "wait" if args[1] < 0.5 else "switch_slice"
            return Ok(strategy), fleet

        if name == "get_available_slices":
            return Ok([s.value for s in SliceType]), fleet

        if name == "check_migration_feasibility":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            if args[1] not in self._gnbs:
                return ToolError("UNKNOWN_GNB", f"no gNB with id {args[1]!r}"), fleet
            d = _dist(u.position, self._gnbs[args[1]])
            return Ok(_clamp01(1.0 - d / 3000.0 - 0.2 * state.edge_load)), fleet

        if name == "activate_sensor":
            return Ok({"sensor": args[0], "handle": f"{args[0]}-{t}", "active": True}), fleet

        if name == "risk_assessment":
            tel = args[0]
            b = p.baseline(SliceType(tel["slice"]))
            lat_stress = _clamp01(tel["latency_ms"] / max(b.latency_ms, 1e-9) - 1.0)
            thr_stress = _clamp01(1.0 - tel["throughput_mbps"] / max(b.throughput_mbps, 1e-9))
            risk = _clamp01(
                0.3 * lat_stress
                + 0.3 * thr_stress
                + 0.2 * tel["edge_load"]
                + 0.2 * (1.0 - tel["link_quality"])
            )
            return Ok(risk), fleet

        if name == "evaluate_intent_feasibility":
            probed = NetworkState.from_dict(args[1])
            dims = violations_for_bounds(probed, _generic_bounds())
            return Ok(_clamp01(0.9 - 0.2 * len(dims))), fleet

        if name == "check_geofence":
            pos, fence = args
            d = _dist(pos, fence["center"])
            return Ok({"inside": d <= fence["radius_m"],
                       "distance_to_boundary_m": fence["radius_m"] - d}), fleet

        if name == "path_planning":
            start, goal, _ = args
            mid = [(start[0] + goal[0]) / 2.0, (start[1] + goal[1]) / 2.0,
                   max(start[2], goal[2]) + 20.0]
            return Ok([list(map(float, start)), mid, list(map(float, goal))]), fleet

        if name == "compute_energy_budget":
            waypoints, battery = args
            length = sum(_dist(a, b) for a, b in zip(waypoints, waypoints[1:]))
            required = 0.12 * length
            available = 120.0 * battery
            return Ok({"required_wh": required, "available_wh": available,
                       "feasible": required <= available}), fleet

        if name == "select_offload_target":
            edge_load, _task = args
            node = "mec-core" if edge_load > 0.6 else "edge-1"
            return Ok({"node_id": node, "load": _clamp01(0.5 * edge_load)}), fleet

        if name == "negotiate_priority":
            requester, err = uav_or_error(args[0])
            if err:
                return err, fleet
            peer, err = uav_or_error(args[1])
            if err:
                return err, fleet
            granted = requester.battery_fraction <= peer.battery_fraction
            level = min(7, max(0, int(round(7 * (1.0 - requester.battery_fraction)))))
            return Ok({"granted": granted, "priority_level": level}), fleet

        if name == "set_waypoint":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            updated = replace(u, current_waypoint=tuple(args[1]))
            return Ok({"acknowledged": True, "detail": f"waypoint set for {u.uav_id}"}), \
                fleet.with_uav(updated)

        if name == "adjust_altitude":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            updated = replace(u, position=(u.position[0], u.position[1], float(args[1])))
            return Ok({"acknowledged": True, "detail": f"altitude {args[1]} m"}), \
                fleet.with_uav(updated)

        if name == "adjust_speed":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok({"acknowledged": True, "detail": f"speed {args[1]} m/s"}), fleet

        if name == "collision_avoidance":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            intruder = args[1]
            climb = intruder[2] >= u.position[2]
            maneuver = "climb" if climb else "hold"
            next_fleet = fleet
            if climb:
                next_fleet = fleet.with_uav(
                    replace(u, position=(u.position[0], u.position[1], u.position[2] + 10.0))
                )
            return Ok({"uav_id": u.uav_id, "maneuver": maneuver, "magnitude": 10.0}), next_fleet

        if name == "swarm_formation":
            spec, waypoints = args
            next_fleet = fleet
            assignments = []
            for slot, u in enumerate(fleet.uavs):
                wp = waypoints[slot % len(waypoints)]
                next_fleet = next_fleet.with_uav(replace(u, current_waypoint=tuple(wp)))
                assignments.append({"uav_id": u.uav_id, "slot": slot})
            return Ok({"formation": spec["formation"], "assignments": assignments}), next_fleet

        if name == "assign_task":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok({"acknowledged": True,
                       "detail": f"task {args[1]['task_id']} assigned to {u.uav_id}"}), fleet

        if name == "send_alert":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok({"acknowledged": True, "detail": f"{args[1]} alert from {u.uav_id}"}), fleet

        if name == "request_handover":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            if args[1] not in self._gnbs:
                return ToolError("UNKNOWN_GNB", f"no gNB with id {args[1]!r}"), fleet
            if args[1] == u.serving_gnb_id:
                return Ok({"uav_id": u.uav_id, "target_gnb_id": args[1],
                           "status": "rejected"}), fleet
            next_fleet = fleet.with_uav(replace(u, serving_gnb_id=args[1]))
            return Ok({"uav_id": u.uav_id, "target_gnb_id": args[1], "status": "issued"}), \
                next_fleet

        if name == "log_decision":
            return Ok({"acknowledged": True, "detail": f"logged at step {t}"}), fleet

        if name == "update_mission_plan":
            mission, probe = args
            probed = NetworkState.from_dict(probe)
            dims = violations_for_bounds(probed, _generic_bounds())
            steps = list(mission["required_steps"])
            if dims:
                steps = [f"remediate_{dims[0]}"] + steps
            return Ok({"mission_id": mission["mission_id"], "steps": steps}), fleet

        if name == "broadcast_status":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok({"acknowledged": True, "detail": f"broadcast from {u.uav_id}"}), fleet

        if name == "heartbeat":
            u, err = uav_or_error(args[0])
            if err:
                return err, fleet
            return Ok({"acknowledged": True, "detail": f"{u.uav_id} alive at step {t}"}), fleet

        if name == "verify_sla_compliance":
            probed = NetworkState.from_dict(args[0])
            bounds = SlaBounds(
                max_latency_ms=args[1]["max_latency_ms"],
                max_jitter_ms=args[1]["max_jitter_ms"],
                max_loss_rate=args[1]["max_loss_rate"],
                min_throughput_mbps=args[1]["min_throughput_mbps"],
                max_edge_load=args[1]["max_edge_load"],
            )
            dims = violations_for_bounds(probed, bounds)
            return Ok({"compliant": not dims, "violations": dims}), fleet

        if name == "validate_mission_completion":
            mission, log = args
            done = set(log)
            missing = [s for s in mission["required_steps"] if s not in done]
            return Ok({"complete": not missing, "missing_steps": missing}), fleet

        raise AssertionError(f"unhandled tool {name}")


# Bounds used by advisory observation tools when no task context is available;
# deliberately generic (latency under 200 ms, loss under 10 %, etc.).
def _generic_bounds() -> SlaBounds:
    return SlaBounds(
        max_latency_ms=200.0,
        max_jitter_ms=50.0,
        max_loss_rate=0.1,
        min_throughput_mbps=1.0,
        max_edge_load=0.9,
    )


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def calibrate(
    records: Sequence,
    kind_windows: Optional[Mapping[DegradationKind, Sequence[tuple[float, float]]]] = None,
    base: Optional[AnalyticModelParams] = None,
) -> AnalyticModelParams:
    """Fit model coefficients from flow-trace records.

    Baselines are per-slice medians over non-degraded rows; the edge-load
    baseline is the overall non-degraded median. Degradation multipliers are
    ratios of in-window medians to baselines, and are only recoverable when
    kind_windows maps each kind to its [start_s, end_s) time windows (the trace
    format carries a flag, not a kind). Unrecoverable coefficients keep their
    values from base (default: the reference calibration).
    """
    if not records:
        raise ValueError("cannot calibrate from an empty dataset")
    if base is None:
        text = resources.files("slicegym.data").joinpath("reference_params.json").read_text()
        base = AnalyticModelParams.from_json_dict(json.loads(text))

    clean = [r for r in records if r.degradation_flag == 0]
    baselines: dict[SliceType, SliceBaseline] = {}
    for slc in SliceType:
        rows = [r for r in clean if r.slice is slc]
        if not rows:
            raise ValueError(f"dataset has no non-degraded rows for slice {slc.value}")
        baselines[slc] = SliceBaseline(
            latency_ms=float(np.median([r.latency_ms for r in rows])),
            jitter_ms=float(np.median([r.jitter_ms for r in rows])),
            loss_rate=float(np.median([r.loss_rate for r in rows])),
            throughput_mbps=float(np.median([r.throughput_mbps for r in rows])),
        )
    edge_baseline = float(np.median([r.edge_load for r in clean]))

    mults = dict(base.degradation_multipliers)
    if kind_windows:
        flagged = [r for r in records if r.degradation_flag == 1]
        for kind, windows in kind_windows.items():
            rows = [
                r for r in flagged
                if any(lo <= r.time_s < hi for lo, hi in windows)
            ]
            if not rows:
                continue
            ratios = {"latency": [], "jitter": [], "loss": [], "throughput": [], "edge_load": []}
            for r in rows:
                b = baselines[r.slice]
                if b.latency_ms > 0:
                    ratios["latency"].append(r.latency_ms / b.latency_ms)
                if b.jitter_ms > 0:
                    ratios["jitter"].append(r.jitter_ms / b.jitter_ms)
                if b.loss_rate > 0:
                    ratios["loss"].append(r.loss_rate / b.loss_rate)
                if b.throughput_mbps > 0:
                    ratios["throughput"].append(r.throughput_mbps / b.throughput_mbps)
                if edge_baseline > 0:
                    ratios["edge_load"].append(r.edge_load / edge_baseline)
            if all(ratios.values()):
                mults[kind] = KindMultipliers(
                    latency=float(np.median(ratios["latency"])),
                    jitter=float(np.median(ratios["jitter"])),
                    loss=float(np.median(ratios["loss"])),
                    throughput=float(np.median(ratios["throughput"])),
                    edge_load=float(np.median(ratios["edge_load"])),
                )

    return replace(
        base,
        slice_baselines=baselines,
        degradation_multipliers=mults,
        edge_load_baseline=_clamp01(edge_baseline),
    )


# ---------------------------------------------------------------------------
# Remote-model adapter
# ---------------------------------------------------------------------------


class AdapterError(Exception):
    pass


class AdapterTransportError(AdapterError):
    def __init__(self, message: str, retriable: bool = True):
        super().__init__(message)
        self.retriable = retriable


class AdapterContractError(AdapterError):
    """The remote predictor broke a transition-model postcondition."""


class RemoteTransitionModel:
    """Drives a remotely hosted transition predictor over the step wire format.

    The adapter enforces the same postconditions as the in-process model: a
    remote that mutates state on a non-configuration call without degradation,
    or returns an invalid state, raises AdapterContractError rather than
    silently propagating bad transitions.
    """

    def __init__(self, base_url: str, client=None, timeout: float = 10.0,
                 registry: Optional[Mapping[str, ToolSignature]] = None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(base_url=self.base_url, timeout=timeout)
        self.registry = dict(registry) if registry is not None else build_catalog()

    def step(
        self,
        state: NetworkState,
        fleet: FleetState,
        call: ToolCall,
        degradation: Optional[DegradationEvent] = None,
        history: Sequence[HistoryEntry] = (),
    ) -> TransitionOutput:
        import httpx

        payload = {
            "schema_version": 1,
            "state": state.to_dict(),
            "fleet": fleet.to_dict(),
            "call": {"tool": call.name, "args": list(call.args)},
            "degradation": degradation.to_dict() if degradation else None,
            "step_index": len(history),
        }
        try:
            resp = self._client.post("/step", json=payload)
        except httpx.TimeoutException as exc:
            raise AdapterTransportError(f"remote model timeout: {exc}", retriable=True)
        except httpx.HTTPError as exc:
            raise AdapterTransportError(f"remote model transport failure: {exc}", retriable=True)
        if resp.status_code != 200:
            raise AdapterTransportError(
                f"remote model returned status {resp.status_code}", retriable=resp.status_code >= 500
            )
        try:
            doc = resp.json()
            next_state = NetworkState.from_dict(doc["next_state"])
            next_fleet = FleetState.from_dict(doc["next_fleet"])
            rd = doc["result"]
            result: ToolResult = Ok(rd["ok"]) if "ok" in rd else ToolError(
                rd["error"]["code"], rd["error"]["message"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterContractError(f"malformed remote payload: {exc}")

        problem = validate_state(next_state)
        if problem is not None:
            raise AdapterContractError(f"remote produced invalid state: {problem}")
        sig = self.registry.get(call.name)
        if sig is not None and sig.effect is not EffectClass.CONFIGURATION \
                and degradation is None and next_state != state:
            raise AdapterContractError(
                f"remote mutated network state on {sig.effect.value} call {call.name}"
            )
        return TransitionOutput(next_state=next_state, next_fleet=next_fleet,
                                result=result, annotation=doc.get("annotation"))
