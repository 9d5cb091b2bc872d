"""Rule-based baseline agents and the external-agent wire adapter.

Two deterministic policies ship in-repo:

* ThresholdRuleAgent: observe, remediate on fixed thresholds (latency breach
  switches the slice to URLLC; throughput under the floor triggers an edge
  offload), re-observe, verify, stop. It only ever emits read_telemetry,
  switch_network_slice, edge_offload, and verify_sla_compliance.
* MapeKAgent: a monitor/analyze/plan/execute loop over a 50-entry
  condition-to-action table (data/mapek_rules.json) with per-rule cooldowns,
  degradation-kind inference from metric ratios, and threshold fallback.

Both parse metric bounds out of the task intent ("keep latency below 50 ms",
"restore throughput above 10 Mbps"). Intents that name no numeric bound fall
back to the per-slice service-level defaults.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, MutableMapping, Optional, Sequence

from .dynamics import AnalyticModelParams
from .episode import Task
from .state import (
    DegradationKind,
    HistoryEntry,
    NetworkState,
    SlaBounds,
    SlaSpec,
    SliceType,
    default_sla_spec,
    violations_for_bounds,
)
from .tools import EffectClass, Ok, ToolCall, ToolResult, build_catalog

__all__ = [
    "parse_intent_bounds",
    "intent_specifies_bounds",
    "infer_degradation_kind",
    "threshold_rule_decide",
    "mapek_decide",
    "ThresholdRuleConfig",
    "ThresholdRuleAgent",
    "MapeKRule",
    "load_mapek_table",
    "MapeKAgent",
    "RemoteAgent",
]

_LOOSE = {
    "max_latency_ms": 10000.0,
    "max_jitter_ms": 10000.0,
    "max_loss_rate": 1.0,
    "min_throughput_mbps": 0.0,
    "max_edge_load": 1.0,
}

# Lazy [\s\S]*? lets the number sit a few words after the metric name, as in
# "latency on embb has spiked; restore it below 40 ms".
_UPPER = r"(?:below|under|less than|at most)"
_LOWER = r"(?:above|over|past|at least)"
_BOUND_PATTERNS = (
    ("max_latency_ms", re.compile(r"latency\b[\s\S]*?" + _UPPER + r"\s+([0-9.]+)\s*ms", re.I), 1.0),
    ("max_jitter_ms", re.compile(r"jitter\b[\s\S]*?" + _UPPER + r"\s+([0-9.]+)\s*ms", re.I), 1.0),
    ("max_loss_rate", re.compile(r"loss\b[\s\S]*?" + _UPPER + r"\s+([0-9.]+)\s*(?:%|percent)", re.I), 0.01),
    ("max_loss_rate", re.compile(r"loss\b[\s\S]*?" + _UPPER + r"\s+(0?\.[0-9]+)(?!\s*(?:%|percent))", re.I), 1.0),
    ("min_throughput_mbps", re.compile(r"throughput\b[\s\S]*?" + _LOWER + r"\s+([0-9.]+)\s*mbps", re.I), 1.0),
    ("max_edge_load", re.compile(r"edge\s*load\b[\s\S]*?" + _UPPER + r"\s+([0-9.]+)\s*(?:%|percent)", re.I), 0.01),
    ("max_edge_load", re.compile(r"edge\s*load\b[\s\S]*?" + _UPPER + r"\s+(0?\.[0-9]+)(?!\s*(?:%|percent))", re.I), 1.0),
)


def parse_intent_bounds(intent_text: str) -> SlaBounds:
    """Extract explicit metric bounds from intent prose; loose defaults otherwise."""
    values = dict(_LOOSE)
    for key, pattern, scale in _BOUND_PATTERNS:
        m = pattern.search(intent_text)
        if m:
            values[key] = float(m.group(1)) * scale
    return SlaBounds(**values)


def intent_specifies_bounds(intent_text: str) -> bool:
    return any(p.search(intent_text) for _, p, _ in _BOUND_PATTERNS)


def infer_degradation_kind(
    state: NetworkState, params: AnalyticModelParams
) -> Optional[DegradationKind]:
    """Guess the fault kind from metric ratios against the reference baselines.

    Returns None when the state sits near baseline (no clear fault signature).
    """
    b = params.baseline(state.slice)
    eps = 1e-9

    def ratio(value: float, base: float) -> float:
        return max(value, eps) / max(base, eps)

    observed = {
        "latency": ratio(state.latency_ms, b.latency_ms),
        "jitter": ratio(state.jitter_ms, b.jitter_ms),
        "loss": ratio(state.loss_rate, b.loss_rate),
        "throughput": ratio(state.throughput_mbps, b.throughput_mbps),
        "edge_load": ratio(state.edge_load, params.edge_load_baseline),
    }
    if all(abs(math.log(r)) < 0.25 for r in observed.values()):
        return None

    best_kind, best_dist = None, math.inf
    for kind in DegradationKind:
        m = params.degradation_multipliers[kind]
        signature = {
            "latency": m.latency,
            "jitter": m.jitter,
            "loss": m.loss,
            "throughput": m.throughput,
            "edge_load": m.edge_load,
        }
        dist = sum(
            abs(math.log(observed[k]) - math.log(signature[k])) for k in observed
        )
        if dist < best_dist:
            best_kind, best_dist = kind, dist
    return best_kind


_REGISTRY = build_catalog()

_OBSERVATION_CALLS = ("read_telemetry", "check_network_state")


def _reference_params() -> AnalyticModelParams:
    from .dynamics import AnalyticModel

    return AnalyticModel.reference().params


def _latest_observation(history: Sequence[HistoryEntry]) -> Optional[dict]:
    for entry in reversed(history):
        if entry.call.name in _OBSERVATION_CALLS and isinstance(entry.result, Ok):
            return dict(entry.result.value)
    return None


def _observation_stale(history: Sequence[HistoryEntry]) -> bool:
    """True when no observation exists or a configuration call postdates it."""
    for entry in reversed(history):
        if entry.call.name in _OBSERVATION_CALLS and isinstance(entry.result, Ok):
            return False
        sig = _REGISTRY.get(entry.call.name)
        if sig is not None and sig.effect is EffectClass.CONFIGURATION:
            return True
    return True


def _effective_bounds(intent_text: str, slc: SliceType, sla: SlaSpec) -> SlaBounds:
    if intent_specifies_bounds(intent_text):
        return parse_intent_bounds(intent_text)
    return sla.for_slice(slc)


def _verify_call(observed: Mapping, bounds: SlaBounds) -> ToolCall:
    # strip telemetry extras so the asserted state is exactly the six metrics
    state = NetworkState.from_dict(observed)
    return ToolCall("verify_sla_compliance", (state.to_dict(), bounds.to_dict()))


def _last_call_was(history: Sequence[HistoryEntry], name: str) -> bool:
    return bool(history) and history[-1].call.name == name


def _trailing_observations(history: Sequence[HistoryEntry]) -> int:
    """Consecutive successful observations at the tail of the history."""
    n = 0
    for entry in reversed(history):
        if entry.call.name in _OBSERVATION_CALLS and isinstance(entry.result, Ok):
            n += 1
        else:
            break
    return n


@dataclass(frozen=True)
class ThresholdRuleConfig:
    """Fixed-threshold remediation policy settings."""

    throughput_floor_mbps: float = 10.0
    offload_demand: float = 0.2
    offload_target_node: str = "mec-core"
    offload_target_load: float = 0.4
    sla: SlaSpec = field(default_factory=default_sla_spec)


def threshold_rule_decide(
    config: ThresholdRuleConfig,
    intent_text: str,
    history: Sequence[HistoryEntry],
) -> Optional[ToolCall]:
    """Stateless fixed-threshold policy step.

    Remediation flags are derived from the history, so replaying the same
    history yields the same decision.
    """
    if _last_call_was(history, "verify_sla_compliance"):
        return None
    if _observation_stale(history):
        return ToolCall("read_telemetry", ())

    observed = _latest_observation(history)
    assert observed is not None
    state = NetworkState.from_dict(observed)
    bounds = _effective_bounds(intent_text, state.slice, config.sla)
    violations = violations_for_bounds(state, bounds)
    # intent- or slice-specified floor wins; the config floor backs up loose bounds
    floor = bounds.min_throughput_mbps if bounds.min_throughput_mbps > 0 \
        else config.throughput_floor_mbps

    switched = any(e.call.name == "switch_network_slice" for e in history)
    offloaded = any(e.call.name == "edge_offload" for e in history)

    if ("latency" in violations or "jitter" in violations) and not switched \
            and state.slice is not SliceType.URLLC:
        return ToolCall("switch_network_slice", (state.slice.value, "URLLC"))
    if state.throughput_mbps < floor and not offloaded:
        return ToolCall("edge_offload", (
            {"task_id": "threshold-offload", "demand": config.offload_demand},
            {"node_id": config.offload_target_node,
             "load": config.offload_target_load},
        ))
    return _verify_call(observed, bounds)


class ThresholdRuleAgent:
    """observe -> remediate on threshold breach -> re-observe -> verify -> stop.

    The action map is deliberately narrow: a latency or jitter breach switches
    the slice to URLLC, a throughput dip below the floor offloads to the edge;
    any other breach is simply verified and reported, which fails the episode.
    """

    def __init__(self, config: Optional[ThresholdRuleConfig] = None):
        self.config = config or ThresholdRuleConfig()
        self._intent = ""

    def reset(self, task: Task) -> None:
        self._intent = task.intent_text

    def decide(
        self,
        intent_text: str,
        last_result: Optional[ToolResult],
        history: Sequence[HistoryEntry],
    ) -> Optional[ToolCall]:
        return threshold_rule_decide(self.config, intent_text or self._intent, history)


@dataclass(frozen=True)
class MapeKRule:
    rule_id: str
    dimension: Optional[str] = None  # metric name, "any", or None
    dimensions_all: tuple[str, ...] = ()
    slice_name: Optional[str] = None
    kind: Optional[str] = None
    min_violations: Optional[int] = None
    tool: str = ""
    args: tuple = ()

    def matches(self, state: NetworkState, violations: Sequence[str],
                inferred_kind: Optional[DegradationKind]) -> bool:
        if self.min_violations is not None and len(violations) < self.min_violations:
            return False
        if self.dimensions_all:
            if not all(d in violations for d in self.dimensions_all):
                return False
        elif self.dimension == "any":
            if not violations:
                return False
        elif self.dimension is not None:
            if self.dimension not in violations:
                return False
        if self.slice_name is not None and state.slice.value != self.slice_name:
            return False
        if self.kind is not None:
            if inferred_kind is None or inferred_kind.value != self.kind:
                return False
        return True

    def instantiate(self, state: NetworkState) -> ToolCall:
        args = tuple(
            state.slice.value if a == "$current_slice" else a for a in self.args
        )
        return ToolCall(self.tool, args)


def load_mapek_table(path: Optional[str] = None) -> tuple[list[MapeKRule], int]:
    """Load the rule table; returns (rules, cooldown_steps)."""
    if path is None:
        text = resources.files("slicegym.data").joinpath("mapek_rules.json").read_text()
        doc = json.loads(text)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if doc.get("schema_version") != 1:
        raise ValueError("unsupported rule-table schema_version")
    rules = []
    for r in doc["rules"]:
        when = r.get("when", {})
        rules.append(MapeKRule(
            rule_id=r["id"],
            dimension=when.get("dimension"),
            dimensions_all=tuple(when.get("dimensions_all", ())),
            slice_name=when.get("slice"),
            kind=when.get("kind"),
            min_violations=when.get("min_violations"),
            tool=r["action"]["tool"],
            args=tuple(r["action"]["args"]),
        ))
    if len(rules) != 50:
        raise ValueError(f"rule table must contain exactly 50 rules, found {len(rules)}")
    return rules, int(doc.get("cooldown_steps", 2))


def mapek_decide(
    rules: Sequence[MapeKRule],
    cooldown: int,
    knowledge: MutableMapping[str, int],
    intent_text: str,
    history: Sequence[HistoryEntry],
    params: Optional[AnalyticModelParams] = None,
    sla: Optional[SlaSpec] = None,
) -> Optional[ToolCall]:
    """One monitor/analyze/plan/execute step.

    knowledge maps rule_id -> last fired step and is updated in place when a
    rule fires; a rule stays suppressed while (step - last_fired) <= cooldown.
    """
    params = params or _reference_params()
    sla = sla or default_sla_spec()
    step = len(history)

    # Monitor: refresh the observation whenever a configuration call (or
    # nothing at all) postdates the last one.
    if _observation_stale(history):
        return ToolCall("read_telemetry", ())
    observed = _latest_observation(history)
    assert observed is not None
    state = NetworkState.from_dict(observed)

    # Analyze
    bounds = _effective_bounds(intent_text, state.slice, sla)
    violations = violations_for_bounds(state, bounds)
    inferred = infer_degradation_kind(state, params)

    if not violations:
        if _last_call_was(history, "verify_sla_compliance"):
            return None  # verified already; nothing left to do
        # An onset landing on the same step as a reading is invisible in that
        # reading, so demand two clean consecutive readings before signing off.
        if _trailing_observations(history) < 2:
            return ToolCall("read_telemetry", ())
        return _verify_call(observed, bounds)

    # Plan: first enabled rule wins.
    for rule in rules:
        last = knowledge.get(rule.rule_id)
        if last is not None and step - last <= cooldown:
            continue
        if rule.matches(state, violations, inferred):
            knowledge[rule.rule_id] = step
            return rule.instantiate(state)

    # Threshold fallback once the table is exhausted or cooling down.
    switched = any(e.call.name == "switch_network_slice" for e in history)
    offloaded = any(e.call.name == "edge_offload" for e in history)
    if ("latency" in violations or "jitter" in violations) and not switched \
            and state.slice is not SliceType.URLLC:
        return ToolCall("switch_network_slice", (state.slice.value, "URLLC"))
    if "throughput" in violations and not offloaded:
        return ToolCall("edge_offload", (
            {"task_id": "mapek-offload", "demand": 0.2},
            {"node_id": "mec-core", "load": 0.4},
        ))
    if _last_call_was(history, "verify_sla_compliance"):
        return None
    return _verify_call(observed, bounds)


class MapeKAgent:
    """Monitor/analyze/plan/execute over the 50-rule table with cooldowns.

    Knowledge is the per-rule last-fired step. When no rule matches, the agent
    falls back to the fixed-threshold policy's behavior.
    """

    def __init__(
        self,
        rules: Optional[Sequence[MapeKRule]] = None,
        cooldown: Optional[int] = None,
        params: Optional[AnalyticModelParams] = None,
        sla: Optional[SlaSpec] = None,
    ):
        if rules is None:
            loaded, table_cooldown = load_mapek_table()
            rules = loaded
            cooldown = table_cooldown if cooldown is None else cooldown
        self.rules = list(rules)
        self.cooldown = 2 if cooldown is None else cooldown
        self.params = params or _reference_params()
        self.sla = sla or default_sla_spec()
        self._knowledge: dict[str, int] = {}
        self._intent = ""

    def reset(self, task: Task) -> None:
        self._knowledge = {}
        self._intent = task.intent_text

    def decide(
        self,
        intent_text: str,
        last_result: Optional[ToolResult],
        history: Sequence[HistoryEntry],
    ) -> Optional[ToolCall]:
        return mapek_decide(
            self.rules,
            self.cooldown,
            self._knowledge,
            intent_text or self._intent,
            history,
            params=self.params,
            sla=self.sla,
        )


class RemoteAgent:
    """Drives an external policy over the decide wire format.

    The remote answers {"call": {"tool", "args"}} or {"stop": true}. Anything
    unparseable becomes a deliberately invalid call (recorded as a structural
    rejection, feeding the format penalty); transport failure stops the episode.
    """

    HISTORY_WINDOW = 5

    def __init__(self, base_url: str, client=None, timeout: float = 10.0):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(base_url=self.base_url, timeout=timeout)
        self._task_id = ""

    def reset(self, task: Task) -> None:
        self._task_id = task.task_id

    def decide(
        self,
        intent_text: str,
        last_result: Optional[ToolResult],
        history: Sequence[HistoryEntry],
    ) -> Optional[ToolCall]:
        import httpx

        from .tools import result_to_dict

        window = [
            {
                "step_index": e.step_index,
                "tool": e.call.name,
                "args": list(e.call.args),
                "result": result_to_dict(e.result),
            }
            for e in list(history)[-self.HISTORY_WINDOW:]
        ]
        payload = {
            "schema_version": 1,
            "task_id": self._task_id,
            "intent_text": intent_text,
            "step_index": len(history),
            "last_result": result_to_dict(last_result) if last_result is not None else None,
            "history": window,
        }
        try:
            resp = self._client.post("/decide", json=payload)
        except httpx.HTTPError:
            return None  # transport failure: stop, episode fails
        if resp.status_code != 200:
            return None
        try:
            doc = resp.json()
        except ValueError:
            return ToolCall("__unparseable_remote_output__", (resp.text[:200],))
        if isinstance(doc, Mapping) and doc.get("stop") is True:
            return None
        if isinstance(doc, Mapping) and isinstance(doc.get("call"), Mapping):
            call = doc["call"]
            tool = call.get("tool")
            args = call.get("args", [])
            if isinstance(tool, str) and isinstance(args, list):
                return ToolCall(tool, tuple(args))
        return ToolCall("__unparseable_remote_output__", (str(doc)[:200],))
