"""Closed-loop episode runner: agent loop, termination, reward, replay.

An episode repeats select -> validate -> step -> record until the agent's
verification call confirms the task's success condition, the agent stops, or
the step budget runs out. Malformed calls are recorded with a rejection-coded
ToolError and consume a step without advancing dynamics.

Degradation scheduling lives here, not in the model: each step the runner
passes the latest scheduled event whose onset has arrived. A semantically
successful configuration call that is an accepted remedy for the active
event's kind clears that event from the schedule for the rest of the episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

from .dynamics import resolves
from .state import (
    DegradationEvent,
    FleetState,
    HistoryEntry,
    NetworkState,
    SlaBounds,
    SliceType,
    default_fleet,
    violations_for_bounds,
)
from .tools import (
    CallRejection,
    EffectClass,
    Ok,
    ToolCall,
    ToolError,
    ToolResult,
    ToolSignature,
    build_catalog,
    validate_call,
)

__all__ = [
    "Outcome",
    "Provenance",
    "Tier",
    "tier_for_length",
    "DEFAULT_STEP_BUDGETS",
    "SuccessRule",
    "rule_holds",
    "is_confirming",
    "Task",
    "Trajectory",
    "AgentPolicy",
    "ScriptedAgent",
    "active_event",
    "step_once",
    "run_episode",
    "replay",
    "RewardRecord",
    "compute_reward",
]


class Outcome(Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


class Provenance(Enum):
    REAL_SEED = "REAL_SEED"
    GOLDEN = "GOLDEN"
    ERROR_RECOVERY = "ERROR_RECOVERY"
    EVAL = "EVAL"


class Tier(Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"


def tier_for_length(reference_length: int) -> Tier:
    """Tier bands by minimal solution length: L1 up to 3, L2 4-7, L3 8+."""
    if reference_length <= 3:
        return Tier.L1
    if reference_length <= 7:
        return Tier.L2
    return Tier.L3


DEFAULT_STEP_BUDGETS = {Tier.L1: 12, Tier.L2: 20, Tier.L3: 40}

_METRIC_FIELD = {
    "latency": "latency_ms",
    "jitter": "jitter_ms",
    "loss": "loss_rate",
    "throughput": "throughput_mbps",
    "edge_load": "edge_load",
}


@dataclass(frozen=True)
class SuccessRule:
    """Declarative success condition over the final state and the trajectory.

    kinds:
      sla_within      final state meets the attached bounds record
      metric_below    final state's metric <= bound
      metric_above    final state's metric >= bound
      slice_is        final state's slice equals the attached slice
      tool_called     some entry ran the named tool with an Ok result
      verified        some verification call returned a confirming Ok
      all             every sub-rule holds
    """

    kind: str
    metric: Optional[str] = None
    bound: Optional[float] = None
    slice_name: Optional[str] = None
    tool: Optional[str] = None
    bounds: Optional[SlaBounds] = None
    subrules: tuple["SuccessRule", ...] = ()

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.metric is not None:
            d["metric"] = self.metric
        if self.bound is not None:
            d["bound"] = self.bound
        if self.slice_name is not None:
            d["slice"] = self.slice_name
        if self.tool is not None:
            d["tool"] = self.tool
        if self.bounds is not None:
            d["bounds"] = self.bounds.to_dict()
        if self.subrules:
            d["subrules"] = [r.to_dict() for r in self.subrules]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SuccessRule":
        return cls(
            kind=d["kind"],
            metric=d.get("metric"),
            bound=d.get("bound"),
            slice_name=d.get("slice"),
            tool=d.get("tool"),
            bounds=SlaBounds.from_dict(d["bounds"]) if "bounds" in d else None,
            subrules=tuple(cls.from_dict(s) for s in d.get("subrules", ())),
        )


def is_confirming(name: str, result: ToolResult) -> bool:
    """True when a verification-family call returned a positive payload."""
    if not (name.startswith("verify_") or name.startswith("validate_")):
        return False
    if not isinstance(result, Ok) or not isinstance(result.value, Mapping):
        return False
    payload = result.value
    return bool(payload.get("compliant", False)) or bool(payload.get("complete", False))


def rule_holds(rule: SuccessRule, final_state: NetworkState,
               entries: Sequence[HistoryEntry]) -> bool:
    if rule.kind == "sla_within":
        assert rule.bounds is not None
        return not violations_for_bounds(final_state, rule.bounds)
    if rule.kind == "metric_below":
        assert rule.metric in _METRIC_FIELD and rule.bound is not None
        return getattr(final_state, _METRIC_FIELD[rule.metric]) <= rule.bound
    if rule.kind == "metric_above":
        assert rule.metric in _METRIC_FIELD and rule.bound is not None
        return getattr(final_state, _METRIC_FIELD[rule.metric]) >= rule.bound
    if rule.kind == "slice_is":
        return final_state.slice.value == rule.slice_name
    if rule.kind == "tool_called":
        return any(e.call.name == rule.tool and isinstance(e.result, Ok) for e in entries)
    if rule.kind == "verified":
        return any(is_confirming(e.call.name, e.result) for e in entries)
    if rule.kind == "all":
        return all(rule_holds(r, final_state, entries) for r in rule.subrules)
    raise ValueError(f"unknown success-rule kind {rule.kind!r}")


@dataclass(frozen=True)
class Task:
    """One benchmark task: intent, starting conditions, faults, and win condition."""

    task_id: str
    intent_text: str
    tier: Tier
    initial_state: NetworkState
    success_rule: SuccessRule
    reference_length: int
    step_budget: int
    initial_fleet: FleetState = field(default_factory=default_fleet)
    degradations: tuple[DegradationEvent, ...] = ()

    def __post_init__(self) -> None:
        if self.reference_length < 1:
            raise ValueError("reference_length must be positive")
        if self.reference_length > self.step_budget:
            raise ValueError("reference_length must not exceed step_budget")
        if tier_for_length(self.reference_length) is not self.tier:
            raise ValueError(
                f"tier {self.tier.value} inconsistent with reference_length "
                f"{self.reference_length}"
            )

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "intent_text": self.intent_text,
            "tier": self.tier.value,
            "initial_state": self.initial_state.to_dict(),
            "initial_fleet": self.initial_fleet.to_dict(),
            "degradations": [e.to_dict() for e in self.degradations],
            "success_rule": self.success_rule.to_dict(),
            "reference_length": self.reference_length,
            "step_budget": self.step_budget,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Task":
        return cls(
            task_id=d["task_id"],
            intent_text=d["intent_text"],
            tier=Tier(d["tier"]),
            initial_state=NetworkState.from_dict(d["initial_state"]),
            initial_fleet=FleetState.from_dict(d["initial_fleet"]),
            degradations=tuple(DegradationEvent.from_dict(e) for e in d["degradations"]),
            success_rule=SuccessRule.from_dict(d["success_rule"]),
            reference_length=int(d["reference_length"]),
            step_budget=int(d["step_budget"]),
        )


@dataclass(frozen=True)
class Trajectory:
    """A recorded episode. intent_text and seed ride along for synthesis and replay."""

    task_id: str
    entries: tuple[HistoryEntry, ...]
    outcome: Outcome
    provenance: Provenance
    intent_text: str = ""
    seed: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def final_state(self) -> Optional[NetworkState]:
        return self.entries[-1].state_after if self.entries else None


class AgentPolicy(Protocol):
    """Decision contract: produce the next call, or None to stop."""

    def reset(self, task: Task) -> None: ...

    def decide(
        self,
        intent_text: str,
        last_result: Optional[ToolResult],
        history: Sequence[HistoryEntry],
    ) -> Optional[ToolCall]: ...


class ScriptedAgent:
    """Replays a fixed call list, then stops. Useful for tests and goldens."""

    def __init__(self, calls: Sequence[ToolCall]):
        self._calls = list(calls)
        self._cursor = 0

    def reset(self, task: Task) -> None:
        self._cursor = 0

    def decide(self, intent_text, last_result, history):
        if self._cursor >= len(self._calls):
            return None
        call = self._calls[self._cursor]
        self._cursor += 1
        return call


def active_event(
    schedule: Sequence[DegradationEvent], step: int, cleared: set[int]
) -> tuple[Optional[int], Optional[DegradationEvent]]:
    """Latest scheduled event (by onset, then position) whose onset has arrived."""
    best: tuple[Optional[int], Optional[DegradationEvent]] = (None, None)
    for i, e in enumerate(schedule):
        if i in cleared or e.onset_step > step:
            continue
        if best[1] is None or (e.onset_step, i) >= (best[1].onset_step, best[0]):
            best = (i, e)
    return best


def _maybe_reseeded(model, seed: int):
    reseed = getattr(model, "reseeded", None)
    return reseed(seed) if callable(reseed) else model


def step_once(
    model,
    registry: Mapping[str, ToolSignature],
    state: NetworkState,
    fleet: FleetState,
    call: ToolCall,
    event: Optional[DegradationEvent],
    entries: Sequence[HistoryEntry],
) -> tuple[HistoryEntry, NetworkState, FleetState, bool]:
    """Validate and execute one call; shared by the runner, replay, and the service.

    Returns (entry, next_state, next_fleet, resolved_active_event). Rejected
    calls consume the step with state frozen.
    """
    step_index = len(entries)
    validated = validate_call(registry, call)
    if isinstance(validated, CallRejection):
        entry = HistoryEntry(
            step_index=step_index,
            state_before=state,
            call=call,
            result=ToolError(validated.code, validated.message),
            state_after=state,
            degradation_active=event,
        )
        return entry, state, fleet, False

    out = model.step(state, fleet, validated, degradation=event, history=entries)
    resolved = (
        event is not None
        and event.active_at(step_index)
        and registry[validated.name].effect is EffectClass.CONFIGURATION
        and isinstance(out.result, Ok)
        and resolves(validated.name, event.kind)
    )
    entry = HistoryEntry(
        step_index=step_index,
        state_before=state,
        call=validated,
        result=out.result,
        state_after=out.next_state,
        degradation_active=event,
    )
    return entry, out.next_state, out.next_fleet, resolved


def run_episode(
    agent: AgentPolicy,
    model,
    task: Task,
    seed: int,
    registry: Optional[Mapping[str, ToolSignature]] = None,
    provenance: Provenance = Provenance.EVAL,
) -> Trajectory:
    """Run the closed loop for one task. Deterministic given (agent, model, task, seed)."""
    registry = registry if registry is not None else build_catalog()
    m = _maybe_reseeded(model, seed)
    agent.reset(task)

    state = task.initial_state
    fleet = task.initial_fleet
    entries: list[HistoryEntry] = []
    cleared: set[int] = set()
    outcome = Outcome.BUDGET_EXHAUSTED

    for _ in range(task.step_budget):
        last_result = entries[-1].result if entries else None
        try:
            call = agent.decide(task.intent_text, last_result, entries)
        except Exception:
            outcome = Outcome.FAILURE
            break
        if call is None:
            outcome = Outcome.FAILURE
            break

        idx, event = active_event(task.degradations, len(entries), cleared)
        entry, state, fleet, resolved = step_once(m, registry, state, fleet, call, event, entries)
        entries.append(entry)
        if resolved and idx is not None:
            cleared.add(idx)

        if is_confirming(entry.call.name, entry.result) and rule_holds(
            task.success_rule, state, entries
        ):
            outcome = Outcome.SUCCESS
            break

    return Trajectory(
        task_id=task.task_id,
        entries=tuple(entries),
        outcome=outcome,
        provenance=provenance,
        intent_text=task.intent_text,
        seed=seed,
    )


def replay(
    trajectory: Trajectory,
    model,
    seed: int,
    task: Optional[Task] = None,
) -> Trajectory:
    """Re-execute a trajectory's calls against a model, ignoring recorded results.

    Per-step degradation uses the events recorded in the trajectory, so the
    environment schedule (including any mid-episode remediation clearing) is
    reproduced exactly. The success condition is re-evaluated: against the
    task's rule when a task is given, otherwise against the confirming
    verification call alone.
    """
    registry = build_catalog()
    m = _maybe_reseeded(model, seed)
    if trajectory.entries:
        state = trajectory.entries[0].state_before
    elif task is not None:
        state = task.initial_state
    else:
        raise ValueError("cannot replay an empty trajectory without a task")
    fleet = task.initial_fleet if task is not None else default_fleet()

    entries: list[HistoryEntry] = []
    outcome = Outcome.FAILURE
    budget = task.step_budget if task is not None else len(trajectory.entries)
    success_at: Optional[int] = None

    for recorded in trajectory.entries:
        entry, state, fleet, _ = step_once(
            m, registry, state, fleet, recorded.call, recorded.degradation_active, entries
        )
        entries.append(entry)
        if success_at is None and is_confirming(entry.call.name, entry.result):
            ok = rule_holds(task.success_rule, state, entries) if task is not None else True
            if ok:
                success_at = len(entries)

    if success_at is not None:
        outcome = Outcome.SUCCESS
        entries = entries[:success_at]
    elif len(entries) >= budget:
        outcome = Outcome.BUDGET_EXHAUSTED

    return Trajectory(
        task_id=trajectory.task_id,
        entries=tuple(entries),
        outcome=outcome,
        provenance=trajectory.provenance,
        intent_text=trajectory.intent_text,
        seed=seed,
    )


@dataclass(frozen=True)
class RewardRecord:
    r_format: float
    r_correct: float
    total: float


def compute_reward(trajectory: Trajectory, lam: float = 0.5) -> RewardRecord:
    """Composite reward: lam * format term + correctness term.

    The format term is minus the fraction of structurally rejected calls, in
    [-1, 0]; correctness is 1 for SUCCESS else 0; total spans [-lam, 1].
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    from .tools import REJECTION_CODES

    rejected = sum(
        1
        for e in trajectory.entries
        if isinstance(e.result, ToolError) and e.result.code in REJECTION_CODES
    )
    r_format = -rejected / max(1, len(trajectory.entries))
    r_correct = 1.0 if trajectory.outcome is Outcome.SUCCESS else 0.0
    return RewardRecord(r_format=r_format, r_correct=r_correct,
                        total=lam * r_format + r_correct)
