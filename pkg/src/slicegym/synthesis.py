"""Verified trajectory synthesis: the four-step growth pipeline.

1. annotate_seeds: mine recorded traces for decision points (SLA breach
   onsets, handovers, degradation-flag onsets) and turn each into a seed
   trajectory executed against the reference model.
2. expand: sample demonstrations from the pool and ask a generator for a new
   candidate (intent text plus tool-call sequence), optionally carrying a
   degradation schedule with a recovery sub-sequence.
3. verify_execute: run the candidate's calls against the transition model.
   Clean runs become GOLDEN; a failing step gets exactly one generator repair,
   and a successful retry yields an ERROR_RECOVERY trajectory containing the
   adjacent (error, ok) pair for the same tool.
4. dedup_and_grow: admit verified trajectories whose maximum ROUGE-L against
   the pool stays below the threshold.

run_iterations loops steps 2-4, steering the accepted tier mix toward
30/45/25 (L1/L2/L3) by rejection sampling on the declared tier.
"""

from __future__ import annotations

import json
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from .dynamics import RESOLUTION_MAP, AnalyticModel, AnalyticModelParams
from .episode import (
    HistoryEntry,
    Outcome,
    Provenance,
    Tier,
    Trajectory,
    active_event,
    is_confirming,
    step_once,
    tier_for_length,
)
from .state import (
    DegradationEvent,
    DegradationKind,
    FleetState,
    NetworkState,
    SlaBounds,
    SlaSpec,
    SliceType,
    default_fleet,
    default_sla_spec,
    violations_for_bounds,
)
from .tools import (
    REJECTION_CODES,
    EffectClass,
    Ok,
    ToolCall,
    ToolError,
    ToolSignature,
    build_catalog,
    export_schema,
    sample_call,
)
from .traceio import (
    FlowTraceRecord,
    ScenarioConfig,
    read_trajectories,
    record_to_state,
    write_trajectories,
)

__all__ = [
    "tokenize",
    "canonical_text",
    "trajectory_tokens",
    "rouge_l",
    "SeedPool",
    "PoolMember",
    "CandidateTrajectory",
    "SynthesisRejection",
    "GeneratorContract",
    "GeneratorUnavailable",
    "TemplateGenerator",
    "DecisionPoint",
    "detect_decision_points",
    "KIND_TARGET_METRIC",
    "TraceAnnotator",
    "annotate_seeds",
    "default_initial_state",
    "expand",
    "verify_execute",
    "DedupReport",
    "dedup_and_grow",
    "IterationStats",
    "RunStatistics",
    "run_iterations",
    "save_pool",
    "load_pool",
    "DEFAULT_DEDUP_THRESHOLD",
    "DEFAULT_P_DEG",
    "DEFAULT_TIER_TARGETS",
]

DEFAULT_DEDUP_THRESHOLD = 0.7
DEFAULT_P_DEG = 0.3
DEFAULT_TIER_TARGETS = {Tier.L1: 0.30, Tier.L2: 0.45, Tier.L3: 0.25}


# ---------------------------------------------------------------------------
# ROUGE-L over canonical trajectory text
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    """Case-folded whitespace tokens."""
    return text.lower().split()


def _flat_literals(value) -> Iterable[str]:
    if isinstance(value, Mapping):
        for v in value.values():
            yield from _flat_literals(v)
    elif isinstance(value, (list, tuple)):
        for v in value:
            yield from _flat_literals(v)
    else:
        yield str(value)


def canonical_text(intent_text: str, calls: Sequence[ToolCall]) -> str:
    """Intent plus ordered tool names plus argument literals, one string."""
    parts = [intent_text]
    for call in calls:
        parts.append(call.name)
        for arg in call.args:
            parts.extend(_flat_literals(arg))
    return " ".join(parts)


def trajectory_tokens(traj: Trajectory) -> list[str]:
    return tokenize(canonical_text(traj.intent_text, [e.call for e in traj.entries]))


def _candidate_tokens(candidate: "CandidateTrajectory") -> list[str]:
    return tokenize(canonical_text(candidate.intent_text, candidate.calls))


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    # One-row dynamic program; prev tracks dp[i-1][j-1].
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            if x == y:
                row[j] = prev + 1
            elif row[j - 1] > cur:
                row[j] = row[j - 1]
            prev = cur
    return row[-1]


def rouge_l(a: Union[str, Sequence[str]], b: Union[str, Sequence[str]]) -> float:
    """LCS F1 over token sequences; 1.0 for two empty inputs, 0.0 for one."""
    ta = tokenize(a) if isinstance(a, str) else list(a)
    tb = tokenize(b) if isinstance(b, str) else list(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    lcs = _lcs_len(ta, tb)
    if lcs == 0:
        return 0.0
    precision = lcs / len(tb)
    recall = lcs / len(ta)
    return 2.0 * precision * recall / (precision + recall)


def _similarity_upper_bound(ca: Counter, na: int, cb: Counter, nb: int) -> float:
    # LCS cannot beat the multiset intersection, so F1 <= 2*inter/(m+n).
    inter = sum(min(v, cb[k]) for k, v in ca.items() if k in cb)
    return 2.0 * inter / (na + nb) if (na + nb) else 1.0


# ---------------------------------------------------------------------------
# Seed pool
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoolMember:
    member_id: str
    trajectory: Trajectory
    tier: Tier
    tokens: tuple[str, ...]


def _effective_length(traj: Trajectory) -> int:
    """Planned call count: entries minus the error halves of repair pairs."""
    return len(traj.entries) - sum(
        1 for e in traj.entries if isinstance(e.result, ToolError)
    )


class SeedPool:
    """Deduplicated trajectory corpus; the loop-carried state of the pipeline.

    Invariant: pairwise ROUGE-L of members stays below the threshold, enforced
    at every insertion.
    """

    def __init__(self, threshold: float = DEFAULT_DEDUP_THRESHOLD):
        if not 0.0 < threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        self.threshold = threshold
        self.iteration = 0
        self.members: list[PoolMember] = []
        self._counters: list[Counter] = []
        self._next_id = 1

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def max_similarity(self, tokens: Sequence[str]) -> tuple[float, Optional[str]]:
        """Exact maximum ROUGE-L against the pool, with the nearest member id."""
        toks = list(tokens)
        counter = Counter(toks)
        n = len(toks)
        best, best_id = 0.0, None
        for member, mc in zip(self.members, self._counters):
            if member.tokens == tuple(toks):
                return 1.0, member.member_id
            if _similarity_upper_bound(counter, n, mc, len(member.tokens)) <= best:
                continue
            score = rouge_l(toks, member.tokens)
            if score > best:
                best, best_id = score, member.member_id
        return best, best_id

    def admit(
        self, trajectory: Trajectory, tier: Optional[Tier] = None
    ) -> tuple[bool, float, Optional[str]]:
        """Insert if the nearest-neighbour score stays under the threshold."""
        tokens = trajectory_tokens(trajectory)
        score, nearest = self.max_similarity(tokens)
        if score >= self.threshold:
            return False, score, nearest
        if tier is None:
            tier = tier_for_length(_effective_length(trajectory))
        member = PoolMember(
            member_id=f"m{self._next_id:05d}",
            trajectory=trajectory,
            tier=tier,
            tokens=tuple(tokens),
        )
        self._next_id += 1
        self.members.append(member)
        self._counters.append(Counter(tokens))
        return True, score, nearest

    def tier_counts(self) -> dict[Tier, int]:
        out = {t: 0 for t in Tier}
        for m in self.members:
            out[m.tier] += 1
        return out

    def provenance_counts(self) -> dict[Provenance, int]:
        out: dict[Provenance, int] = {}
        for m in self.members:
            out[m.trajectory.provenance] = out.get(m.trajectory.provenance, 0) + 1
        return out


# ---------------------------------------------------------------------------
# Candidates and the generator contract
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateTrajectory:
    """A proposed (intent, call sequence) pair awaiting execution verification."""

    intent_text: str
    calls: tuple[ToolCall, ...]
    tier: Tier
    degradations: tuple[DegradationEvent, ...] = ()

    def __post_init__(self) -> None:
        if not self.calls:
            raise ValueError("candidate must contain at least one call")
        if tier_for_length(len(self.calls)) is not self.tier:
            raise ValueError(
                f"declared tier {self.tier.value} does not match call count "
                f"{len(self.calls)}"
            )


@dataclass(frozen=True)
class SynthesisRejection:
    """Why a candidate was dropped: reason code plus the failing step if any."""

    reason: str
    step_index: Optional[int] = None
    code: Optional[str] = None


class GeneratorUnavailable(RuntimeError):
    """Raised by a generator whose backing service has gone away."""


class GeneratorContract(Protocol):
    """Propose candidates from demonstrations; repair a failing call once."""

    def propose(
        self,
        demonstrations: Sequence[Trajectory],
        schemas: Sequence[Mapping],
        degradation: bool,
        rng: np.random.Generator,
    ) -> CandidateTrajectory: ...

    def repair(
        self, candidate: CandidateTrajectory, step_index: int, error: ToolError
    ) -> Optional[ToolCall]: ...


def default_initial_state(
    params: Optional[AnalyticModelParams] = None, slc: SliceType = SliceType.EMBB
) -> NetworkState:
    """Baseline state all candidates execute from, noise-free."""
    if params is None:
        params = AnalyticModel.reference().params
    b = params.baseline(slc)
    return NetworkState(
        slice=slc,
        latency_ms=b.latency_ms,
        jitter_ms=b.jitter_ms,
        loss_rate=b.loss_rate,
        throughput_mbps=b.throughput_mbps,
        edge_load=params.edge_load_baseline,
    )


# Kinds a configuration tool can clear, inverted from the resolution table.
_KINDS_FOR_TOOL: dict[str, tuple[DegradationKind, ...]] = {}
for _kind, _names in RESOLUTION_MAP.items():
    for _name in _names:
        _KINDS_FOR_TOOL.setdefault(_name, ())
        _KINDS_FOR_TOOL[_name] = _KINDS_FOR_TOOL[_name] + (_kind,)

_LOOSE_BOUNDS = {
    "max_latency_ms": 10000.0,
    "max_jitter_ms": 10000.0,
    "max_loss_rate": 1.0,
    "min_throughput_mbps": 0.0,
    "max_edge_load": 1.0,
}

_OBS_FILLERS = (
    "get_edge_load",
    "get_traffic_pattern",
    "monitor_interference",
    "get_battery_level",
    "scan_available_gnbs",
    "get_slice_status",
    "predict_sla_violation",
    "risk_assessment",
    "heartbeat",
    "log_decision",
)

_SLICES = ("EMBB", "URLLC", "MMTC")


class TemplateGenerator:
    """Deterministic in-repo generator: recombines demonstration call patterns
    over freshly sampled arguments, with a configurable rate of deliberately
    sloppy configuration arguments to exercise the repair path.
    """

    def __init__(
        self,
        params: Optional[AnalyticModelParams] = None,
        sloppy_rate: float = 0.25,
    ):
        self.params = params or AnalyticModel.reference().params
        self.sloppy_rate = sloppy_rate
        self.registry = build_catalog()

    # -- pattern assembly ---------------------------------------------------

    @staticmethod
    def _pattern_of(demo: Trajectory) -> list[str]:
        names = [e.call.name for e in demo.entries]
        collapsed: list[str] = []
        for n in names:
            if not collapsed or collapsed[-1] != n:
                collapsed.append(n)
        return collapsed

    def _config_positions(self, names: Sequence[str]) -> list[int]:
        return [
            i
            for i, n in enumerate(names)
            if n in self.registry
            and self.registry[n].effect is EffectClass.CONFIGURATION
        ]

    def _pick_tier(self, rng: np.random.Generator) -> Tier:
        r = rng.random()
        if r < 0.30:
            return Tier.L1
        if r < 0.75:
            return Tier.L2
        return Tier.L3

    def _assemble(
        self,
        demos: Sequence[Trajectory],
        tier: Tier,
        degradation: bool,
        rng: np.random.Generator,
    ) -> list[str]:
        patterns = [self._pattern_of(d) for d in demos if len(d.entries)]
        config_bearing = [p for p in patterns if self._config_positions(p)]
        fallback = ["read_telemetry", "switch_network_slice", "read_telemetry",
                    "verify_sla_compliance"]

        if tier is Tier.L1 and not degradation:
            base = patterns[int(rng.integers(0, len(patterns)))] if patterns else fallback
            names = [base[0] if base else "read_telemetry"]
            if rng.random() < 0.5:
                names.append(_OBS_FILLERS[int(rng.integers(0, len(_OBS_FILLERS)))])
            names.append("verify_sla_compliance")
            return self._dedup_consecutive(names)

        if tier is Tier.L2 or (tier is Tier.L1 and degradation):
            pool = config_bearing or [fallback]
            names = list(pool[int(rng.integers(0, len(pool)))])
            if tier is Tier.L2 and len(names) < 4:
                names[1:1] = [_OBS_FILLERS[int(rng.integers(0, len(_OBS_FILLERS)))]]
            return self._dedup_consecutive(names)

        # L3: splice two patterns, then pad with distinct observations.
        pool = config_bearing or [fallback]
        a = list(pool[int(rng.integers(0, len(pool)))])
        b = list(pool[int(rng.integers(0, len(pool)))])
        names = self._dedup_consecutive(a[:-1] + b)
        pad = [f for f in _OBS_FILLERS if f not in names]
        while len(names) < 8 and pad:
            idx = int(rng.integers(0, len(pad)))
            names.insert(len(names) - 1, pad.pop(idx))
        return names

    @staticmethod
    def _dedup_consecutive(names: list[str]) -> list[str]:
        out: list[str] = []
        for n in names:
            if not out or out[-1] != n:
                out.append(n)
        return out

    # -- argument synthesis -------------------------------------------------

    def _fresh_calls(
        self, names: Sequence[str], rng: np.random.Generator
    ) -> tuple[list[ToolCall], dict]:
        """Sequence-aware arguments: slice switches and shares stay coherent."""
        ctx = {
            "slice": "EMBB",
            "serving": {"uav-1": "gnb-1", "uav-2": "gnb-2", "uav-3": "gnb-1"},
            "final_bounds": dict(_LOOSE_BOUNDS),
            "metric": None,
        }
        calls: list[ToolCall] = []
        for name in names:
            calls.append(self._fresh_call(name, ctx, rng))
        return calls, ctx

    def _fresh_call(self, name: str, ctx: dict, rng: np.random.Generator) -> ToolCall:
        if name == "switch_network_slice":
            cur = ctx["slice"]
            to = [s for s in _SLICES if s != cur][int(rng.integers(0, 2))]
            ctx["slice"] = to
            ctx["metric"] = ctx["metric"] or ("latency" if rng.random() < 0.6 else "loss")
            return ToolCall(name, (cur, to))
        if name == "trigger_slice_reallocation":
            shares = {
                "bandwidth_share": round(float(rng.uniform(0.3, 0.6)), 3),
                "compute_share": round(float(rng.uniform(0.1, 0.35)), 3),
            }
            ctx["metric"] = ctx["metric"] or "latency"
            return ToolCall(name, (ctx["slice"], shares))
        if name == "edge_offload":
            task = {
                "task_id": f"job-{int(rng.integers(100, 1000))}",
                "demand": round(float(rng.uniform(0.1, 0.25)), 3),
            }
            target = {
                "node_id": ("edge-1", "edge-2", "mec-core")[int(rng.integers(0, 3))],
                "load": round(float(rng.uniform(0.2, 0.6)), 3),
            }
            ctx["metric"] = ctx["metric"] or "throughput"
            return ToolCall(name, (task, target))
        if name == "graceful_degradation":
            spec = {
                "reduction_fraction": round(float(rng.uniform(0.3, 0.6)), 3),
                "reason": ("shed non-critical load", "protect the edge tier",
                           "free compute headroom")[int(rng.integers(0, 3))],
            }
            ctx["metric"] = ctx["metric"] or "edge_load"
            return ToolCall(name, (spec,))
        if name == "request_handover":
            uav = f"uav-{int(rng.integers(1, 4))}"
            cur = ctx["serving"].get(uav, "gnb-1")
            target = [g for g in ("gnb-1", "gnb-2", "gnb-3") if g != cur]
            gnb = target[int(rng.integers(0, len(target)))]
            ctx["serving"][uav] = gnb
            return ToolCall(name, (uav, gnb))
        if name == "verify_sla_compliance":
            state, bounds = self._verify_args(ctx, rng)
            ctx["final_bounds"] = bounds
            return ToolCall(name, (state, bounds))
        if name == "validate_mission_completion":
            required = ["plan_route", "assign_tasks", "sweep_area", "report_back"]
            k = int(rng.integers(2, len(required) + 1))
            steps = required[:k]
            spec = {
                "mission_id": f"mission-{int(rng.integers(100, 1000))}",
                "objective": ("area survey", "relay coverage", "inspection run")[
                    int(rng.integers(0, 3))
                ],
                "required_steps": steps,
            }
            log = list(steps)
            return ToolCall(name, (spec, log))
        return sample_call(self.registry, name, rng)

    def _verify_args(self, ctx: dict, rng: np.random.Generator) -> tuple[dict, dict]:
        """Asserted final state plus bounds it satisfies by construction."""
        slc = SliceType(ctx["slice"])
        b = self.params.baseline(slc)
        state = {
            "slice": slc.value,
            "latency_ms": round(b.latency_ms * float(rng.uniform(0.85, 1.1)), 2),
            "jitter_ms": round(b.jitter_ms * float(rng.uniform(0.8, 1.0)), 2),
            "loss_rate": round(b.loss_rate * float(rng.uniform(0.7, 1.2)), 5),
            "throughput_mbps": round(b.throughput_mbps * float(rng.uniform(0.9, 1.2)), 2),
            "edge_load": round(float(rng.uniform(0.2, 0.5)), 3),
        }
        bounds = {
            "max_latency_ms": round(state["latency_ms"] * 1.5, 1),
            "max_jitter_ms": round(state["jitter_ms"] * 2.0 + 1.0, 1),
            "max_loss_rate": min(1.0, round(state["loss_rate"] * 2.0 + 0.001, 4)),
            "min_throughput_mbps": round(state["throughput_mbps"] * 0.5, 1),
            "max_edge_load": min(1.0, round(state["edge_load"] + 0.3, 3)),
        }
        return state, bounds

    # -- intent authoring ---------------------------------------------------

    def _intent_for(
        self, names: Sequence[str], ctx: dict, rng: np.random.Generator
    ) -> str:
        bounds = ctx["final_bounds"]
        slc = ctx["slice"]
        if names[-1] == "validate_mission_completion":
            forms = (
                "Complete the {obj} mission: plan the route, task the fleet, and validate completion against the mission record.",
                "Run the {obj} mission end to end and confirm every required step is logged.",
                "Execute the {obj} mission plan, then validate that the mission log covers all required steps.",
            )
            obj = ("area survey", "relay coverage", "inspection run")[int(rng.integers(0, 3))]
            return forms[int(rng.integers(0, len(forms)))].format(obj=obj)

        metric = ctx["metric"]
        if metric == "latency":
            forms = (
                "Restore latency below {x:g} ms on the {s} slice and confirm compliance.",
                "Latency on {s} is out of budget; bring it under {x:g} ms and verify.",
                "Drive {s} latency back below {x:g} ms, then run a compliance check.",
            )
            return forms[int(rng.integers(0, len(forms)))].format(
                x=bounds["max_latency_ms"], s=slc)
        if metric == "loss":
            forms = (
                "Bring packet loss under {x:g} on the {s} slice and verify the SLA.",
                "Loss on {s} breached its budget; push it below {x:g} and confirm.",
                "Cut {s} packet loss to below {x:g}, then verify compliance.",
            )
            return forms[int(rng.integers(0, len(forms)))].format(
                x=bounds["max_loss_rate"], s=slc)
        if metric == "throughput":
            forms = (
                "Restore throughput above {x:g} Mbps on the {s} slice and confirm.",
                "Throughput on {s} collapsed; push it past {x:g} Mbps and verify.",
                "Recover throughput of at least {x:g} Mbps on {s}, then run the compliance check.",
            )
            return forms[int(rng.integers(0, len(forms)))].format(
                x=bounds["min_throughput_mbps"], s=slc)
        if metric == "edge_load":
            forms = (
                "Shed edge load until it is below {x:g} and verify the {s} slice.",
                "Edge load is past its cap; bring it under {x:g} and confirm compliance on {s}.",
                "Relieve the edge tier and keep edge load under {x:g}, then verify {s}.",
            )
            return forms[int(rng.integers(0, len(forms)))].format(
                x=bounds["max_edge_load"], s=slc)

        forms = (
            "Audit the {s} slice and confirm latency stays under {x:g} ms with loss below {y:g}.",
            "Check the {s} slice health and verify it meets latency {x:g} ms and loss {y:g}.",
            "Survey current conditions on {s} and confirm the service bounds hold.",
        )
        return forms[int(rng.integers(0, len(forms)))].format(
            s=slc, x=bounds["max_latency_ms"], y=bounds["max_loss_rate"])

    # -- sloppiness and repair ----------------------------------------------

    _INJECTABLE = ("switch_network_slice", "edge_offload", "trigger_slice_reallocation")

    def _inject_sloppy(
        self, calls: list[ToolCall], rng: np.random.Generator
    ) -> list[ToolCall]:
        spots = [i for i, c in enumerate(calls) if c.name in self._INJECTABLE]
        if not spots:
            return calls
        i = spots[int(rng.integers(0, len(spots)))]
        call = calls[i]
        if call.name == "switch_network_slice":
            frm, to = call.args
            wrong = [s for s in _SLICES if s != frm][int(rng.integers(0, 2))]
            calls[i] = ToolCall(call.name, (wrong, to if to != wrong else frm))
        elif call.name == "edge_offload":
            task = dict(call.args[0])
            target = dict(call.args[1])
            task["demand"] = 0.4
            target["load"] = 0.75
            calls[i] = ToolCall(call.name, (task, target))
        else:
            slc, shares = call.args
            calls[i] = ToolCall(
                call.name, (slc, {"bandwidth_share": 0.7, "compute_share": 0.6})
            )
        return calls

    # -- contract surface ---------------------------------------------------

    def propose(
        self,
        demonstrations: Sequence[Trajectory],
        schemas: Sequence[Mapping],
        degradation: bool,
        rng: np.random.Generator,
    ) -> CandidateTrajectory:
        tier = self._pick_tier(rng)
        names = self._assemble(demonstrations, tier, degradation, rng)
        calls, ctx = self._fresh_calls(names, rng)
        intent = self._intent_for(names, ctx, rng)

        degradations: tuple[DegradationEvent, ...] = ()
        if degradation:
            cfg = self._config_positions(names)
            events = []
            onset = 0
            for pos in cfg[:2]:
                kinds = _KINDS_FOR_TOOL.get(names[pos], tuple(DegradationKind))
                kind = kinds[int(rng.integers(0, len(kinds)))]
                events.append(DegradationEvent(
                    kind=kind,
                    onset_step=onset,
                    duration_steps=len(calls) + 4,
                    severity=round(float(rng.uniform(0.8, 1.0)), 3),
                ))
                onset = pos + 1
            degradations = tuple(events)

        if len(degradations) <= 1 and rng.random() < self.sloppy_rate:
            calls = self._inject_sloppy(list(calls), rng)

        return CandidateTrajectory(
            intent_text=intent,
            calls=tuple(calls),
            tier=tier_for_length(len(calls)),
            degradations=degradations,
        )

    def repair(
        self, candidate: CandidateTrajectory, step_index: int, error: ToolError
    ) -> Optional[ToolCall]:
        call = candidate.calls[step_index]
        if error.code == "SLICE_MISMATCH" and call.name == "switch_network_slice":
            cur = "EMBB"
            for prior in candidate.calls[:step_index]:
                if prior.name == "switch_network_slice" and prior.args[0] == cur:
                    cur = prior.args[1]
            to = call.args[1] if call.args[1] != cur else ("URLLC" if cur != "URLLC" else "EMBB")
            return ToolCall(call.name, (cur, to))
        if error.code == "EDGE_CAPACITY" and call.name == "edge_offload":
            task = dict(call.args[0])
            target = dict(call.args[1])
            task["demand"] = 0.1
            target["load"] = 0.6
            return ToolCall(call.name, (task, target))
        if error.code == "RESOURCE_CONFLICT" and call.name == "trigger_slice_reallocation":
            return ToolCall(call.name, (call.args[0],
                                        {"bandwidth_share": 0.5, "compute_share": 0.3}))
        if error.code == "UNKNOWN_UAV":
            args = tuple("uav-1" if isinstance(a, str) and a.startswith("uav-") else a
                         for a in call.args)
            return ToolCall(call.name, args)
        if error.code == "UNKNOWN_GNB":
            args = tuple("gnb-2" if isinstance(a, str) and a.startswith("gnb-") else a
                         for a in call.args)
            return ToolCall(call.name, args)
        return None


# ---------------------------------------------------------------------------
# Decision points and seed annotation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionPoint:
    """A row in a trace where an agent would have had to act."""

    index: int
    time_s: float
    kind: str  # "sla_breach" | "handover" | "degradation_onset"
    detail: str


def _row_state(row: FlowTraceRecord) -> NetworkState:
    return record_to_state(row)


def detect_decision_points(
    records: Sequence[FlowTraceRecord], sla: Optional[SlaSpec] = None
) -> list[DecisionPoint]:
    """Breach onsets, serving-cell changes, and degradation-flag onsets."""
    if sla is None:
        sla = default_sla_spec()
    points: list[DecisionPoint] = []
    prev_violating = False
    for i, row in enumerate(records):
        violations = violations_for_bounds(_row_state(row), sla.for_slice(row.slice))
        if violations and not prev_violating:
            points.append(DecisionPoint(i, row.time_s, "sla_breach", violations[0]))
        prev_violating = bool(violations)
        if i > 0 and row.serving_gnb_id != records[i - 1].serving_gnb_id:
            points.append(DecisionPoint(
                i, row.time_s, "handover",
                f"{records[i - 1].serving_gnb_id}->{row.serving_gnb_id}",
            ))
        if row.degradation_flag == 1 and (i == 0 or records[i - 1].degradation_flag == 0):
            points.append(DecisionPoint(i, row.time_s, "degradation_onset", "flag"))
    return points


# Which metric each fault kind is expected to push out of bounds.
KIND_TARGET_METRIC = {
    DegradationKind.LINK_FADE: "loss",
    DegradationKind.CONGESTION: "latency",
    DegradationKind.GNB_OUTAGE: "throughput",
    DegradationKind.EDGE_OVERLOAD: "edge_load",
}

_BREACH_INTENTS = {
    "latency": (
        "Congestion is driving latency up on the {s} slice; bring it back under {x:g} ms and confirm compliance.",
        "Latency on {s} has spiked past its budget; restore it below {x:g} ms and verify the SLA.",
        "Mitigate the congestion on the {s} slice so latency lands under {x:g} ms, then run a compliance check.",
    ),
    "loss": (
        "A link fade is inflating packet loss on {s}; get loss under {x:g} and verify.",
        "Packet loss on the {s} slice breached its budget; bring it below {x:g} and confirm the SLA holds.",
        "Recover the faded link so {s} loss stays under {x:g}, then verify compliance.",
    ),
    "throughput": (
        "A cell outage collapsed throughput on {s}; restore it to at least {x:g} Mbps and confirm.",
        "Throughput on the {s} slice fell off a cliff after an outage; push it above {x:g} Mbps and verify.",
        "Work around the outage so {s} throughput stays above {x:g} Mbps, then run the compliance check.",
    ),
    "edge_load": (
        "The edge tier is overloaded; bring edge load under {x:g} and verify the {s} slice.",
        "Edge load climbed past its cap; shed load until it is below {x:g} and confirm compliance on {s}.",
        "Relieve the overloaded edge so edge load stays under {x:g}, then verify the {s} slice.",
    ),
}

_HANDOVER_INTENTS = (
    "Hand {u} over to {g} and confirm the link still meets its service bounds.",
    "Migrate {u} onto {g}, then verify service stays within limits.",
    "Steer {u} to {g} and check that the slice remains compliant.",
)


class TraceAnnotator:
    """Deterministic decision-point annotator; executes every emitted seed
    against its model so REAL_SEED trajectories are execution-verified."""

    def __init__(self, model: Optional[AnalyticModel] = None,
                 sla: Optional[SlaSpec] = None):
        self.model = model or AnalyticModel.reference()
        self.sla = sla or default_sla_spec()
        self.registry = build_catalog()

    # one seed per coalesced decision row; breach outranks flag outranks handover
    _PRIORITY = {"sla_breach": 0, "degradation_onset": 1, "handover": 2}

    def annotate(
        self, config: ScenarioConfig, records: Sequence[FlowTraceRecord]
    ) -> list[Trajectory]:
        points = detect_decision_points(records, self.sla)
        by_row: dict[int, DecisionPoint] = {}
        for p in points:
            cur = by_row.get(p.index)
            if cur is None or self._PRIORITY[p.kind] < self._PRIORITY[cur.kind]:
                by_row[p.index] = p
        windows = config.degradation_windows()

        seeds: list[Trajectory] = []
        for index in sorted(by_row):
            point = by_row[index]
            row = records[index]
            seed = zlib.crc32(f"seed:{config.topology_seed}:{index}".encode())
            if point.kind == "handover":
                traj = self._handover_seed(config, row, index, seed)
            else:
                kind_sev = self._window_for(windows, row.time_s)
                if kind_sev is None:
                    continue
                traj = self._breach_seed(config, row, index, seed, *kind_sev)
            if traj is not None:
                seeds.append(traj)
        return seeds

    @staticmethod
    def _window_for(windows, t: float) -> Optional[tuple[DegradationKind, float]]:
        for kind, start, end, severity in windows:
            if start <= t < end:
                return kind, severity
        return None

    def _run(
        self,
        planned: Sequence[ToolCall],
        initial_state: NetworkState,
        events: Sequence[DegradationEvent],
        seed: int,
        bounds_fn,
    ) -> Optional[tuple[tuple[HistoryEntry, ...], SlaBounds]]:
        """Execute planned calls, then verify against bounds_fn(last observation)."""
        model = self.model.reseeded(seed)
        state = initial_state
        fleet = default_fleet()
        entries: list[HistoryEntry] = []
        cleared: set[int] = set()

        def run_one(call: ToolCall) -> HistoryEntry:
            nonlocal state, fleet
            idx, event = active_event(events, len(entries), cleared)
            entry, state, fleet, resolved = step_once(
                model, self.registry, state, fleet, call, event, entries)
            entries.append(entry)
            if resolved and idx is not None:
                cleared.add(idx)
            return entry

        for call in planned:
            if not isinstance(run_one(call).result, Ok):
                return None

        observed = None
        for e in reversed(entries):
            if e.call.name == "read_telemetry" and isinstance(e.result, Ok):
                observed = NetworkState.from_dict(e.result.value)
                break
        if observed is None:
            return None
        bounds = bounds_fn(observed)
        entry = run_one(ToolCall(
            "verify_sla_compliance", (observed.to_dict(), bounds.to_dict())))
        if not is_confirming(entry.call.name, entry.result):
            return None
        return tuple(entries), bounds

    def _breach_seed(
        self,
        config: ScenarioConfig,
        row: FlowTraceRecord,
        index: int,
        seed: int,
        kind: DegradationKind,
        severity: float,
    ) -> Optional[Trajectory]:
        remedy = self._remedy_for(kind, row, index)
        planned = [ToolCall("read_telemetry", ()), remedy, ToolCall("read_telemetry", ())]
        events = [DegradationEvent(kind=kind, onset_step=0,
                                   duration_steps=len(planned) + 3, severity=severity)]
        metric = KIND_TARGET_METRIC[kind]
        defaults = self.sla.for_slice(row.slice)

        def bounds_fn(observed: NetworkState) -> SlaBounds:
            return _targeted_bounds(metric, observed, defaults)

        result = self._run(planned, _row_state(row), events, seed, bounds_fn)
        if result is None:
            return None
        entries, bounds = result
        x = _bound_value(metric, bounds)
        forms = _BREACH_INTENTS[metric]
        intent = forms[seed % len(forms)].format(s=row.slice.value, x=x)
        return Trajectory(
            task_id=f"seed-{config.topology_seed}-{index:03d}",
            entries=entries,
            outcome=Outcome.SUCCESS,
            provenance=Provenance.REAL_SEED,
            intent_text=intent,
            seed=seed,
        )

    def _remedy_for(self, kind: DegradationKind, row: FlowTraceRecord,
                    index: int) -> ToolCall:
        slc = row.slice.value
        if kind in (DegradationKind.LINK_FADE, DegradationKind.CONGESTION):
            to = "URLLC" if slc != "URLLC" else "EMBB"
            return ToolCall("switch_network_slice", (slc, to))
        if kind is DegradationKind.GNB_OUTAGE:
            return ToolCall("edge_offload", (
                {"task_id": f"relief-{index}", "demand": 0.2},
                {"node_id": "mec-core", "load": round(min(row.edge_load, 0.7), 3)},
            ))
        return ToolCall("graceful_degradation", (
            {"reduction_fraction": 0.5, "reason": "shed load after overload"},
        ))

    def _handover_seed(
        self, config: ScenarioConfig, row: FlowTraceRecord, index: int, seed: int
    ) -> Optional[Trajectory]:
        target = row.serving_gnb_id
        uav = "uav-2" if target == "gnb-1" else "uav-1"
        planned = [
            ToolCall("read_telemetry", ()),
            ToolCall("check_link_quality", (uav, target)),
            ToolCall("request_handover", (uav, target)),
            ToolCall("check_handover_status", (uav,)),
        ]

        def bounds_fn(observed: NetworkState) -> SlaBounds:
            return _margin_bounds(observed)

        result = self._run(planned, _row_state(row), [], seed, bounds_fn)
        if result is None:
            return None
        entries, _ = result
        intent = _HANDOVER_INTENTS[seed % len(_HANDOVER_INTENTS)].format(u=uav, g=target)
        return Trajectory(
            task_id=f"seed-{config.topology_seed}-{index:03d}",
            entries=entries,
            outcome=Outcome.SUCCESS,
            provenance=Provenance.REAL_SEED,
            intent_text=intent,
            seed=seed,
        )


def _targeted_bounds(metric: str, observed: NetworkState,
                     defaults: SlaBounds) -> SlaBounds:
    """Bound the remediated dimension; leave the others loose."""
    values = dict(_LOOSE_BOUNDS)
    if metric == "latency":
        x = defaults.max_latency_ms if observed.latency_ms <= defaults.max_latency_ms \
            else round(observed.latency_ms * 1.15, 1)
        values["max_latency_ms"] = x
    elif metric == "loss":
        x = defaults.max_loss_rate if observed.loss_rate <= defaults.max_loss_rate \
            else round(observed.loss_rate * 1.15, 4)
        values["max_loss_rate"] = min(1.0, x)
    elif metric == "throughput":
        x = defaults.min_throughput_mbps if observed.throughput_mbps >= defaults.min_throughput_mbps \
            else round(observed.throughput_mbps * 0.85, 2)
        values["min_throughput_mbps"] = x
    elif metric == "edge_load":
        x = defaults.max_edge_load if observed.edge_load <= defaults.max_edge_load \
            else round(observed.edge_load * 1.1, 3)
        values["max_edge_load"] = min(1.0, x)
    return SlaBounds(**values)


def _margin_bounds(observed: NetworkState) -> SlaBounds:
    """Bounds the observed state meets with slack on every dimension."""
    return SlaBounds(
        max_latency_ms=round(observed.latency_ms * 1.25 + 1.0, 1),
        max_jitter_ms=round(observed.jitter_ms * 1.3 + 1.0, 1),
        max_loss_rate=min(1.0, round(observed.loss_rate * 1.5 + 0.001, 4)),
        min_throughput_mbps=round(observed.throughput_mbps * 0.75, 2),
        max_edge_load=min(1.0, round(observed.edge_load * 1.2 + 0.01, 3)),
    )


def _bound_value(metric: str, bounds: SlaBounds) -> float:
    return {
        "latency": bounds.max_latency_ms,
        "loss": bounds.max_loss_rate,
        "throughput": bounds.min_throughput_mbps,
        "edge_load": bounds.max_edge_load,
    }[metric]


def annotate_seeds(
    dataset: Sequence[tuple[ScenarioConfig, Sequence[FlowTraceRecord]]],
    annotator: Optional[TraceAnnotator] = None,
) -> list[Trajectory]:
    """One execution-verified REAL_SEED trajectory per detected decision point."""
    annotator = annotator or TraceAnnotator()
    seeds: list[Trajectory] = []
    for config, records in dataset:
        seeds.extend(annotator.annotate(config, records))
    return seeds


# ---------------------------------------------------------------------------
# Expansion, verification, dedup
# ---------------------------------------------------------------------------


def expand(
    pool: SeedPool,
    generator: GeneratorContract,
    p_deg: float,
    sample_size: int,
    seed: int,
) -> Union[CandidateTrajectory, SynthesisRejection]:
    """Sample demonstrations and propose one candidate; structural checks only."""
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    rng = np.random.default_rng(seed & 0xFFFFFFFF)
    k = min(sample_size, len(pool))
    picked = sorted(rng.choice(len(pool), size=k, replace=False).tolist())
    demos = [pool.members[i].trajectory for i in picked]
    degradation = bool(rng.random() < p_deg)

    registry = build_catalog()
    candidate = generator.propose(demos, export_schema(registry), degradation, rng)

    for i, call in enumerate(candidate.calls):
        if call.name not in registry:
            return SynthesisRejection("UNKNOWN_TOOL", step_index=i)
    if degradation:
        if not candidate.degradations:
            return SynthesisRejection("MISSING_DEGRADATION")
        onset = min(e.onset_step for e in candidate.degradations)
        has_recovery = any(
            i >= onset and (
                registry[c.name].effect is EffectClass.CONFIGURATION
                or c.name == "select_recovery_strategy"
            )
            for i, c in enumerate(candidate.calls)
        )
        if not has_recovery:
            return SynthesisRejection("NO_RECOVERY_SUBSEQUENCE")
    elif candidate.degradations:
        return SynthesisRejection("UNEXPECTED_DEGRADATION")
    return candidate


def verify_execute(
    candidate: CandidateTrajectory,
    model,
    generator: GeneratorContract,
    seed: int,
    registry: Optional[Mapping[str, ToolSignature]] = None,
    initial_state: Optional[NetworkState] = None,
    initial_fleet: Optional[FleetState] = None,
) -> Union[Trajectory, SynthesisRejection]:
    """Execute the candidate; one repair attempt per failing step.

    Returns a GOLDEN trajectory on a clean run, ERROR_RECOVERY when at least
    one step was repaired (the error entry and its same-tool correction sit
    adjacent in the result), or a rejection naming the failing step.
    """
    registry = registry if registry is not None else build_catalog()
    reseed = getattr(model, "reseeded", None)
    m = reseed(seed) if callable(reseed) else model
    params = getattr(m, "params", None)
    state = initial_state if initial_state is not None else default_initial_state(params)
    fleet = initial_fleet if initial_fleet is not None else default_fleet()

    entries: list[HistoryEntry] = []
    cleared: set[int] = set()
    repaired = False

    def run_one(call: ToolCall) -> HistoryEntry:
        nonlocal state, fleet
        idx, event = active_event(candidate.degradations, len(entries), cleared)
        entry, state, fleet, resolved = step_once(
            m, registry, state, fleet, call, event, entries)
        entries.append(entry)
        if resolved and idx is not None:
            cleared.add(idx)
        return entry

    for i, call in enumerate(candidate.calls):
        entry = run_one(call)
        if isinstance(entry.result, Ok):
            continue
        assert isinstance(entry.result, ToolError)
        if entry.result.code in REJECTION_CODES:
            return SynthesisRejection(
                "STRUCTURAL", step_index=len(entries) - 1, code=entry.result.code)
        corrected = generator.repair(candidate, i, entry.result)
        if corrected is None:
            return SynthesisRejection(
                "NO_REPAIR", step_index=len(entries) - 1, code=entry.result.code)
        if corrected.name != call.name:
            return SynthesisRejection(
                "REPAIR_TOOL_MISMATCH", step_index=len(entries) - 1,
                code=entry.result.code)
        retry = run_one(corrected)
        if not isinstance(retry.result, Ok):
            code = retry.result.code if isinstance(retry.result, ToolError) else None
            return SynthesisRejection(
                "REPAIR_FAILED", step_index=len(entries) - 1, code=code)
        repaired = True

    confirmed = any(is_confirming(e.call.name, e.result) for e in entries)
    return Trajectory(
        task_id=f"forge-{zlib.crc32(candidate.intent_text.encode()) & 0xFFFFFFFF:08x}-{seed & 0xFFFFFFFF:08x}",
        entries=tuple(entries),
        outcome=Outcome.SUCCESS if confirmed else Outcome.FAILURE,
        provenance=Provenance.ERROR_RECOVERY if repaired else Provenance.GOLDEN,
        intent_text=candidate.intent_text,
        seed=seed,
    )


@dataclass(frozen=True)
class DedupReport:
    accepted_ids: tuple[str, ...]
    rejections: tuple[tuple[int, float, Optional[str]], ...]  # (batch idx, score, nearest)

    def to_dict(self) -> dict:
        return {
            "accepted_ids": list(self.accepted_ids),
            "rejections": [
                {"batch_index": i, "score": s, "nearest": n}
                for i, s, n in self.rejections
            ],
        }


def dedup_and_grow(
    pool: SeedPool,
    batch: Sequence[Trajectory],
    threshold: Optional[float] = None,
) -> tuple[SeedPool, DedupReport]:
    """Admit batch members whose nearest-neighbour score is below threshold.

    Admission is sequential, so later batch members are also checked against
    earlier accepted ones. The pool is updated in place and returned.
    """
    if threshold is not None and abs(threshold - pool.threshold) > 1e-12:
        raise ValueError(
            f"threshold {threshold} does not match pool threshold {pool.threshold}")
    accepted: list[str] = []
    rejections: list[tuple[int, float, Optional[str]]] = []
    for i, traj in enumerate(batch):
        ok, score, nearest = pool.admit(traj)
        if ok:
            accepted.append(pool.members[-1].member_id)
        else:
            rejections.append((i, score, nearest))
    return pool, DedupReport(tuple(accepted), tuple(rejections))


# ---------------------------------------------------------------------------
# Iterative growth
# ---------------------------------------------------------------------------


@dataclass
class IterationStats:
    iteration: int
    proposed: int = 0
    golden: int = 0
    error_recovery: int = 0
    accepted: int = 0
    rejections: dict = field(default_factory=dict)
    pool_size_after: int = 0

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "proposed": self.proposed,
            "golden": self.golden,
            "error_recovery": self.error_recovery,
            "accepted": self.accepted,
            "rejections": dict(self.rejections),
            "pool_size_after": self.pool_size_after,
        }


@dataclass
class RunStatistics:
    per_iteration: list[IterationStats] = field(default_factory=list)
    interrupted: bool = False
    accepted_tiers: dict = field(default_factory=lambda: {t: 0 for t in Tier})

    def to_dict(self) -> dict:
        return {
            "per_iteration": [s.to_dict() for s in self.per_iteration],
            "interrupted": self.interrupted,
            "accepted_tiers": {t.value: n for t, n in self.accepted_tiers.items()},
        }


def _tier_quota_open(counts: Mapping[Tier, int], targets: Mapping[Tier, float],
                     tier: Tier) -> bool:
    total = sum(counts.values())
    return counts[tier] < targets[tier] * total + 1.0 - 1e-9


def run_iterations(
    pool: SeedPool,
    generator: GeneratorContract,
    model,
    K: int,
    p_deg: float = DEFAULT_P_DEG,
    batch_size: int = 20,
    seed: int = 0,
    sample_size: int = 4,
    tier_targets: Optional[Mapping[Tier, float]] = None,
) -> tuple[SeedPool, RunStatistics]:
    """expand -> verify -> dedup, batch_size times per iteration, K iterations.

    A GeneratorUnavailable from the generator stops the run early; the pool
    grown so far comes back with partial statistics flagged as interrupted.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    targets = dict(tier_targets) if tier_targets is not None else dict(DEFAULT_TIER_TARGETS)
    stats = RunStatistics()

    def bump(it: IterationStats, reason: str) -> None:
        it.rejections[reason] = it.rejections.get(reason, 0) + 1

    for k in range(K):
        it_stats = IterationStats(iteration=pool.iteration + 1)
        for j in range(batch_size):
            cseed = zlib.crc32(f"forge:{seed}:{k}:{j}".encode())
            it_stats.proposed += 1
            try:
                produced = expand(pool, generator, p_deg, sample_size, cseed)
            except GeneratorUnavailable:
                stats.interrupted = True
                it_stats.pool_size_after = len(pool)
                stats.per_iteration.append(it_stats)
                return pool, stats
            if isinstance(produced, SynthesisRejection):
                bump(it_stats, produced.reason)
                continue
            if not _tier_quota_open(stats.accepted_tiers, targets, produced.tier):
                bump(it_stats, "TIER_QUOTA")
                continue
            try:
                verified = verify_execute(produced, model, generator, cseed)
            except GeneratorUnavailable:
                stats.interrupted = True
                it_stats.pool_size_after = len(pool)
                stats.per_iteration.append(it_stats)
                return pool, stats
            if isinstance(verified, SynthesisRejection):
                bump(it_stats, verified.reason)
                continue
            if verified.provenance is Provenance.ERROR_RECOVERY:
                it_stats.error_recovery += 1
            else:
                it_stats.golden += 1
            ok, score, _ = pool.admit(verified, tier=produced.tier)
            if not ok:
                bump(it_stats, "DUPLICATE")
                continue
            it_stats.accepted += 1
            stats.accepted_tiers[produced.tier] += 1
        pool.iteration += 1
        it_stats.pool_size_after = len(pool)
        stats.per_iteration.append(it_stats)
    return pool, stats


# ---------------------------------------------------------------------------
# Checkpoint persistence
# ---------------------------------------------------------------------------


def save_pool(pool: SeedPool, pool_path: str, manifest_path: str,
              run_info: Optional[Mapping] = None) -> None:
    """Trajectory document plus a manifest carrying ids, tiers, and run info."""
    write_trajectories([m.trajectory for m in pool.members], pool_path)
    manifest = {
        "schema_version": 1,
        "kind": "forge_manifest",
        "threshold": pool.threshold,
        "iteration": pool.iteration,
        "member_ids": [m.member_id for m in pool.members],
        "member_tiers": [m.tier.value for m in pool.members],
        "run_info": dict(run_info) if run_info else {},
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def load_pool(pool_path: str, manifest_path: str) -> SeedPool:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "forge_manifest" or manifest.get("schema_version") != 1:
        raise ValueError("not a version-1 pool manifest")
    trajectories = read_trajectories(pool_path)
    tiers = [Tier(t) for t in manifest["member_tiers"]]
    if len(tiers) != len(trajectories):
        raise ValueError("manifest tier list does not match trajectory count")
    pool = SeedPool(threshold=float(manifest["threshold"]))
    for traj, tier in zip(trajectories, tiers):
        ok, score, nearest = pool.admit(traj, tier=tier)
        if not ok:
            raise ValueError(
                f"checkpoint violates the dedup invariant: {traj.task_id} at "
                f"{score:.3f} vs {nearest}")
    pool.iteration = int(manifest["iteration"])
    return pool
