"""Tiered benchmark harness: suites, SR/SPL scoring, curation, holdout
tooling, frontier selection, and cross-model gap analysis.

Suites are generated from synthetic traces at held-out topology seeds using
the same annotator that mines training seeds, so evaluation tasks share the
training distribution's mechanics without sharing its instances. The leakage
filter and the separability probe quantify whatever textual overlap remains.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .dynamics import AnalyticModel
from .episode import (
    DEFAULT_STEP_BUDGETS,
    Outcome,
    SuccessRule,
    Task,
    Tier,
    Trajectory,
    replay,
    run_episode,
    tier_for_length,
)
from .state import (
    DegradationEvent,
    DegradationKind,
    SlaSpec,
    default_sla_spec,
)
from .synthesis import KIND_TARGET_METRIC, TraceAnnotator, rouge_l, tokenize
from .traceio import (
    ScenarioConfig,
    check_seed_ranges_disjoint,
    load_suite_doc,
    record_to_state,
    save_suite_doc,
    synth_trace,
)

__all__ = [
    "TRAIN_SEED_RANGE",
    "HOLDOUT_SEED_RANGE",
    "BenchSuite",
    "TaskOutcome",
    "EvalReport",
    "format_report_table",
    "evaluate",
    "curate_exclude_easy",
    "leakage_filter",
    "separability_probe",
    "frontier_select",
    "CrossReplayReport",
    "cross_replay_gap",
    "generate_suite",
]

TRAIN_SEED_RANGE = (1, 50)
HOLDOUT_SEED_RANGE = (51, 80)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchSuite:
    """A task set plus the topology-seed range that produced it."""

    suite_id: str
    tasks: tuple[Task, ...]
    seed_range: tuple[int, int] = HOLDOUT_SEED_RANGE
    holdout: bool = True

    def __post_init__(self) -> None:
        seen = set()
        for t in self.tasks:
            if t.task_id in seen:
                raise ValueError(f"duplicate task id {t.task_id!r}")
            seen.add(t.task_id)
            if tier_for_length(t.reference_length) is not t.tier:
                raise ValueError(
                    f"task {t.task_id}: tier {t.tier.value} does not match "
                    f"reference_length {t.reference_length}")
        if self.holdout:
            check_seed_ranges_disjoint(TRAIN_SEED_RANGE, self.seed_range)

    def __len__(self) -> int:
        return len(self.tasks)

    def by_tier(self) -> dict[Tier, list[Task]]:
        out: dict[Tier, list[Task]] = {t: [] for t in Tier}
        for task in self.tasks:
            out[task.tier].append(task)
        return out

    def task_by_id(self, task_id: str) -> Task:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)

    def restricted_to(self, tier: Tier, suffix: Optional[str] = None) -> "BenchSuite":
        return BenchSuite(
            suite_id=self.suite_id + (suffix or f"-{tier.value.lower()}"),
            tasks=tuple(t for t in self.tasks if t.tier is tier),
            seed_range=self.seed_range,
            holdout=self.holdout,
        )

    def save(self, path: str) -> None:
        save_suite_doc(self.suite_id, list(self.tasks), self.seed_range,
                       self.holdout, path)

    @classmethod
    def load(cls, path: str) -> "BenchSuite":
        suite_id, tasks, seed_range, holdout = load_suite_doc(path)
        return cls(suite_id=suite_id, tasks=tuple(tasks),
                   seed_range=seed_range, holdout=holdout)


# ---------------------------------------------------------------------------
# Evaluation and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskOutcome:
    task_id: str
    tier: Tier
    outcome: Outcome
    success: bool
    path_length: int
    reference_length: int

    @property
    def spl_term(self) -> float:
        if not self.success:
            return 0.0
        return self.reference_length / max(self.reference_length, self.path_length)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "tier": self.tier.value,
            "outcome": self.outcome.value,
            "success": self.success,
            "path_length": self.path_length,
            "reference_length": self.reference_length,
        }


def _aggregate(outcomes: Sequence[TaskOutcome]) -> tuple[float, float]:
    if not outcomes:
        return 0.0, 0.0
    n = len(outcomes)
    sr = sum(1 for o in outcomes if o.success) / n
    spl = sum(o.spl_term for o in outcomes) / n
    return sr, spl


@dataclass(frozen=True)
class EvalReport:
    """Per-task outcomes plus SR/SPL aggregates, overall and per tier."""

    suite_id: str
    agent_name: str
    model_name: str
    results: tuple[TaskOutcome, ...]

    @property
    def sr(self) -> float:
        return _aggregate(self.results)[0]

    @property
    def spl(self) -> float:
        return _aggregate(self.results)[1]

    def tier_sr(self, tier: Tier) -> Optional[float]:
        sub = [o for o in self.results if o.tier is tier]
        return _aggregate(sub)[0] if sub else None

    def tier_spl(self, tier: Tier) -> Optional[float]:
        sub = [o for o in self.results if o.tier is tier]
        return _aggregate(sub)[1] if sub else None

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "eval_report",
            "suite_id": self.suite_id,
            "agent": self.agent_name,
            "model": self.model_name,
            "sr": self.sr,
            "spl": self.spl,
            "tiers": {
                t.value: {
                    "sr": self.tier_sr(t),
                    "spl": self.tier_spl(t),
                    "count": sum(1 for o in self.results if o.tier is t),
                }
                for t in Tier
            },
            "results": [o.to_dict() for o in self.results],
        }

    def render_table(self) -> str:
        return format_report_table([self])


def format_report_table(reports: Sequence["EvalReport"]) -> str:
    """Fixed-layout text table: one row per report, columns L1 L2 L3 SR SPL."""

    def cell(v: Optional[float]) -> str:
        return "    --" if v is None else f"{v:6.3f}"

    width = max([len("agent")] + [len(r.agent_name) for r in reports])
    lines = [
        f"{'agent':<{width}}  {'L1':>6}  {'L2':>6}  {'L3':>6}  {'SR':>6}  {'SPL':>6}"
    ]
    lines.append("-" * len(lines[0]))
    for r in reports:
        lines.append(
            f"{r.agent_name:<{width}}  "
            f"{cell(r.tier_sr(Tier.L1))}  {cell(r.tier_sr(Tier.L2))}  "
            f"{cell(r.tier_sr(Tier.L3))}  {cell(r.sr)}  {cell(r.spl)}"
        )
    return "\n".join(lines)


def _task_seed(suite_id: str, task_id: str, seed: int) -> int:
    return zlib.crc32(f"bench:{suite_id}:{task_id}:{seed}".encode())


def evaluate(
    agent,
    suite: BenchSuite,
    model,
    seed: int = 0,
    agent_name: str = "agent",
    model_name: str = "analytic",
) -> EvalReport:
    """One episode per task at a per-task derived seed; task-id order."""
    outcomes = []
    for task in sorted(suite.tasks, key=lambda t: t.task_id):
        traj = run_episode(agent, model, task,
                           _task_seed(suite.suite_id, task.task_id, seed))
        outcomes.append(TaskOutcome(
            task_id=task.task_id,
            tier=task.tier,
            outcome=traj.outcome,
            success=traj.outcome is Outcome.SUCCESS,
            path_length=len(traj.entries),
            reference_length=task.reference_length,
        ))
    return EvalReport(
        suite_id=suite.suite_id,
        agent_name=agent_name,
        model_name=model_name,
        results=tuple(outcomes),
    )


# ---------------------------------------------------------------------------
# Curation and holdout tooling
# ---------------------------------------------------------------------------


def curate_exclude_easy(
    tasks: Sequence[Task],
    results: Mapping[str, Mapping[str, float]],
    cutoff: float = 0.8,
) -> list[Task]:
    """Drop a task iff some single probe model's zero-shot rate exceeds cutoff.

    results maps model name -> task id -> success rate; every model must cover
    every candidate task.
    """
    for model_name, rates in results.items():
        missing = [t.task_id for t in tasks if t.task_id not in rates]
        if missing:
            raise ValueError(
                f"results for {model_name!r} missing tasks: {missing[:5]}")
    kept = []
    for task in tasks:
        if any(rates[task.task_id] > cutoff for rates in results.values()):
            continue
        kept.append(task)
    return kept


def leakage_filter(
    eval_tasks: Sequence[Task],
    training_corpus: Sequence[str],
    threshold: float = 0.7,
) -> tuple[list[Task], list[tuple[Task, float]]]:
    """Split tasks into (clean, flagged) by max intent similarity to training.

    Flagged tasks come back with their nearest-neighbour score so the caller
    can replace them; nothing is silently dropped.
    """
    corpus_tokens = [tokenize(text) for text in training_corpus]
    clean: list[Task] = []
    flagged: list[tuple[Task, float]] = []
    for task in eval_tasks:
        toks = tokenize(task.intent_text)
        best = 0.0
        for ct in corpus_tokens:
            best = max(best, rouge_l(toks, ct))
            if best >= 1.0:
                break
        if best >= threshold:
            flagged.append((task, best))
        else:
            clean.append(task)
    return clean, flagged


def separability_probe(
    training_texts: Sequence[str],
    eval_texts: Sequence[str],
    folds: int = 5,
    seed: int = 0,
) -> float:
    """Mean held-out accuracy of a TF-IDF nearest-centroid train-vs-eval probe.

    Near 0.5 means the two text sets are statistically indistinguishable;
    values toward 1.0 expose distributional leakage in the other direction
    (an eval set that is trivially recognizable).
    """
    from sklearn.feature_extraction.text import TfidfVectorizer
    from sklearn.model_selection import StratifiedKFold
    from sklearn.neighbors import NearestCentroid

    if not training_texts or not eval_texts:
        raise ValueError("both text sets must be non-empty")
    if len(training_texts) < folds or len(eval_texts) < folds:
        raise ValueError(
            f"each class needs at least {folds} samples for {folds}-fold CV")

    texts = list(training_texts) + list(eval_texts)
    labels = np.array([0] * len(training_texts) + [1] * len(eval_texts))
    vec = TfidfVectorizer(ngram_range=(1, 2))
    X = vec.fit_transform(texts)

    cv = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    accs = []
    for train_idx, test_idx in cv.split(X, labels):
        clf = NearestCentroid()
        clf.fit(X[train_idx].toarray(), labels[train_idx])
        pred = clf.predict(X[test_idx].toarray())
        accs.append(float(np.mean(pred == labels[test_idx])))
    return float(np.mean(accs))


def frontier_select(
    rates: Mapping[str, float],
    lo: float = 0.1,
    hi: float = 0.9,
) -> list[str]:
    """Task ids whose measured success rate sits inside [lo, hi] inclusive."""
    if lo > hi:
        raise ValueError(f"lo {lo} exceeds hi {hi}")
    for task_id, rate in rates.items():
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"rate for {task_id!r} outside [0, 1]: {rate}")
    return [task_id for task_id, rate in rates.items() if lo <= rate <= hi]


# ---------------------------------------------------------------------------
# Cross-model replay gap
# ---------------------------------------------------------------------------


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    n = len(xs)
    if n != len(ys) or n < 2:
        return None
    mx = sum(xs) / n
    my = sum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sx = math.sqrt(sum(d * d for d in dx))
    sy = math.sqrt(sum(d * d for d in dy))
    if sx < 1e-15 or sy < 1e-15:
        return None  # zero-variance vector: r undefined
    return sum(a * b for a, b in zip(dx, dy)) / (sx * sy)


@dataclass(frozen=True)
class CrossReplayReport:
    """Per-agent SR under both models, deltas, rank agreement, per-tier gaps."""

    agents: tuple[str, ...]
    sr_a: Mapping[str, float]
    sr_b: Mapping[str, float]
    delta: Mapping[str, float]
    pearson_r: Optional[float]
    tier_gaps: Mapping[Tier, Optional[float]]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "cross_replay_report",
            "agents": list(self.agents),
            "sr_a": dict(self.sr_a),
            "sr_b": dict(self.sr_b),
            "delta": dict(self.delta),
            "pearson_r": self.pearson_r,
            "tier_gaps": {t.value: g for t, g in self.tier_gaps.items()},
        }


def cross_replay_gap(
    trajectories_by_agent: Mapping[str, Sequence[Trajectory]],
    model_a,
    model_b,
    tasks: Optional[Mapping[str, Task]] = None,
) -> CrossReplayReport:
    """Replay every agent's trajectories on both models and compare SR.

    delta = SR_B - SR_A per agent; pearson_r correlates the two SR vectors
    across agents (None when either vector has zero variance). Per-tier gaps
    aggregate success deltas over all trajectories of that tier.
    """
    if len(trajectories_by_agent) < 2:
        raise ValueError("need at least two agents for a correlation")
    tasks = tasks or {}

    sr_a: dict[str, float] = {}
    sr_b: dict[str, float] = {}
    tier_counts: dict[Tier, int] = {t: 0 for t in Tier}
    tier_delta: dict[Tier, float] = {t: 0.0 for t in Tier}

    for agent_name in sorted(trajectories_by_agent):
        trajs = trajectories_by_agent[agent_name]
        if not trajs:
            raise ValueError(f"agent {agent_name!r} has no trajectories")
        wins_a = wins_b = 0
        for traj in trajs:
            task = tasks.get(traj.task_id)
            ra = replay(traj, model_a, traj.seed, task=task)
            rb = replay(traj, model_b, traj.seed, task=task)
            sa = ra.outcome is Outcome.SUCCESS
            sb = rb.outcome is Outcome.SUCCESS
            wins_a += sa
            wins_b += sb
            tier = task.tier if task is not None else tier_for_length(len(traj.entries))
            tier_counts[tier] += 1
            tier_delta[tier] += float(sb) - float(sa)
        sr_a[agent_name] = wins_a / len(trajs)
        sr_b[agent_name] = wins_b / len(trajs)

    agents = tuple(sorted(trajectories_by_agent))
    delta = {name: sr_b[name] - sr_a[name] for name in agents}
    r = _pearson([sr_a[n] for n in agents], [sr_b[n] for n in agents])
    tier_gaps = {
        t: (tier_delta[t] / tier_counts[t] if tier_counts[t] else None)
        for t in Tier
    }
    return CrossReplayReport(
        agents=agents, sr_a=sr_a, sr_b=sr_b, delta=delta,
        pearson_r=r, tier_gaps=tier_gaps,
    )


# ---------------------------------------------------------------------------
# Suite generation
# ---------------------------------------------------------------------------

_METRIC_RULE_KIND = {
    "latency": "metric_below",
    "loss": "metric_below",
    "edge_load": "metric_below",
    "throughput": "metric_above",
}

_BOUND_KEY = {
    "latency": "max_latency_ms",
    "loss": "max_loss_rate",
    "throughput": "min_throughput_mbps",
    "edge_load": "max_edge_load",
}

_BREACH_PATTERNS = ("midlife_congestion", "early_fade", "outage_burst", "edge_squeeze")

_PATTERN_CODE = {
    "midlife_congestion": "cong",
    "early_fade": "fade",
    "outage_burst": "outg",
    "edge_squeeze": "edge",
    "double_fault": "dual",
    "none": "flat",
}

_AUDIT_INTENTS = (
    "Survey current conditions on the {s} slice and confirm the service bounds hold.",
    "Run a routine health check on {s} and verify the slice is compliant.",
    "Take a fresh reading of the {s} slice and confirm it is inside its service envelope.",
)

_MISSION_INTENTS = (
    "Complete the area survey mission: plan the route, task the fleet, and validate completion against the mission record.",
    "Run the relay coverage mission end to end and confirm every required step is logged.",
    "Execute the inspection mission plan, then validate that the mission log covers all required steps.",
)

_DUAL_INTENTS = (
    "A link fade followed by an edge overload is hitting the {s} slice: keep loss under {x:g} and edge load under {y:g}, then verify.",
    "Two faults in sequence on {s}: clear the fade so loss stays under {x:g}, then relieve the edge so edge load stays under {y:g}, and verify.",
)


def _seed_row_index(task_id: str) -> int:
    # annotator ids look like seed-<topology>-<row>
    return int(task_id.rsplit("-", 1)[1])


def generate_suite(
    suite_id: str = "holdout-v1",
    seed_range: tuple[int, int] = HOLDOUT_SEED_RANGE,
    duration_s: int = 120,
    seed: int = 0,
    model: Optional[AnalyticModel] = None,
    sla: Optional[SlaSpec] = None,
    handover_tasks_per_seed: int = 2,
    training_corpus: Optional[Sequence[str]] = None,
    probe_results: Optional[Mapping[str, Mapping[str, float]]] = None,
    cutoff: float = 0.8,
    leakage_threshold: float = 0.7,
) -> BenchSuite:
    """Derive a tiered suite from synthetic traces at held-out topology seeds.

    Per topology seed: the four single-fault patterns yield L2 remediation
    tasks via the decision-point annotator (plus a capped number of handover
    tasks); a fault-free trace yields L1 audit tasks; the double-fault pattern
    yields an L3 two-phase task, alongside two L3 mission tasks. When a
    training corpus or probe results are supplied, leakage-flagged tasks are
    dropped for replacement and over-easy tasks excluded.
    """
    model = model or AnalyticModel.reference()
    sla = sla or default_sla_spec()
    annotator = TraceAnnotator(model=model, sla=sla)
    budgets = DEFAULT_STEP_BUDGETS

    tasks: list[Task] = []
    lo, hi = seed_range
    for topo in range(lo, hi + 1):
        # L2: one task per breach decision point, handovers capped.
        handovers_kept = 0
        for pattern in _BREACH_PATTERNS:
            cfg = ScenarioConfig(topology_seed=topo, duration_s=duration_s,
                                 failure_pattern=pattern)
            records = synth_trace(
                cfg, zlib.crc32(f"suite:{suite_id}:{seed}:{topo}:{pattern}".encode()))
            windows = cfg.degradation_windows()
            for traj in annotator.annotate(cfg, records):
                row = _seed_row_index(traj.task_id)
                record = records[row]
                is_handover = any(
                    e.call.name == "request_handover" for e in traj.entries)
                tid = (f"{suite_id}-t{topo:03d}-{_PATTERN_CODE[pattern]}"
                       f"-r{row:03d}")
                if is_handover:
                    if handovers_kept >= handover_tasks_per_seed:
                        continue
                    handovers_kept += 1
                    tasks.append(Task(
                        task_id=tid + "-ho",
                        intent_text=traj.intent_text,
                        tier=Tier.L2,
                        initial_state=record_to_state(record),
                        success_rule=SuccessRule("all", subrules=(
                            SuccessRule("tool_called", tool="request_handover"),
                            SuccessRule("verified"),
                        )),
                        reference_length=len(traj.entries),
                        step_budget=budgets[Tier.L2],
                    ))
                    continue
                hit = [w for w in windows if w[1] <= record.time_s < w[2]]
                if not hit:
                    continue
                kind, severity = hit[0][0], hit[0][3]
                metric = KIND_TARGET_METRIC[kind]
                bounds_arg = traj.entries[-1].call.args[1]
                bound = float(bounds_arg[_BOUND_KEY[metric]])
                tasks.append(Task(
                    task_id=tid,
                    intent_text=traj.intent_text,
                    tier=Tier.L2,
                    initial_state=record_to_state(record),
                    success_rule=SuccessRule(
                        _METRIC_RULE_KIND[metric], metric=metric, bound=bound),
                    reference_length=len(traj.entries),
                    step_budget=budgets[Tier.L2],
                    degradations=(DegradationEvent(
                        kind=kind, onset_step=0,
                        duration_steps=budgets[Tier.L2] + 5,
                        severity=severity),),
                ))

        # L1: audit tasks from a fault-free trace.
        cfg0 = ScenarioConfig(topology_seed=topo, duration_s=duration_s,
                              failure_pattern="none")
        flat = synth_trace(
            cfg0, zlib.crc32(f"suite:{suite_id}:{seed}:{topo}:none".encode()))
        for j, row in enumerate((duration_s // 4, (3 * duration_s) // 4)):
            record = flat[row]
            intent = _AUDIT_INTENTS[(topo + j) % len(_AUDIT_INTENTS)].format(
                s=record.slice.value)
            tasks.append(Task(
                task_id=f"{suite_id}-t{topo:03d}-flat-r{row:03d}",
                intent_text=intent,
                tier=Tier.L1,
                initial_state=record_to_state(record),
                success_rule=SuccessRule(
                    "sla_within", bounds=sla.for_slice(record.slice)),
                reference_length=2,
                step_budget=budgets[Tier.L1],
            ))

        # L3: two mission tasks plus one two-phase fault task.
        for j in (0, 1):
            record = flat[10 + 20 * j]
            tasks.append(Task(
                task_id=f"{suite_id}-t{topo:03d}-msn{j}",
                intent_text=_MISSION_INTENTS[(topo + j) % len(_MISSION_INTENTS)],
                tier=Tier.L3,
                initial_state=record_to_state(record),
                success_rule=SuccessRule("all", subrules=(
                    SuccessRule("tool_called", tool="validate_mission_completion"),
                    SuccessRule("verified"),
                )),
                reference_length=8,
                step_budget=budgets[Tier.L3],
            ))
        cfg2 = ScenarioConfig(topology_seed=topo, duration_s=duration_s,
                              failure_pattern="double_fault")
        dual = synth_trace(
            cfg2, zlib.crc32(f"suite:{suite_id}:{seed}:{topo}:dual".encode()))
        w = cfg2.degradation_windows()
        first_row = int(w[0][1])
        record = dual[first_row]
        slc = record.slice
        x = sla.for_slice(slc).max_loss_rate
        y = sla.for_slice(slc).max_edge_load
        intent = _DUAL_INTENTS[topo % len(_DUAL_INTENTS)].format(
            s=slc.value, x=x, y=y)
        tasks.append(Task(
            task_id=f"{suite_id}-t{topo:03d}-dual-r{first_row:03d}",
            intent_text=intent,
            tier=Tier.L3,
            initial_state=record_to_state(record),
            success_rule=SuccessRule("all", subrules=(
                SuccessRule("metric_below", metric="loss", bound=x),
                SuccessRule("metric_below", metric="edge_load", bound=y),
            )),
            reference_length=8,
            step_budget=budgets[Tier.L3],
            degradations=(
                DegradationEvent(kind=DegradationKind.LINK_FADE, onset_step=0,
                                 duration_steps=budgets[Tier.L3] + 5,
                                 severity=w[0][3]),
                DegradationEvent(kind=DegradationKind.EDGE_OVERLOAD, onset_step=2,
                                 duration_steps=budgets[Tier.L3] + 5,
                                 severity=w[1][3]),
            ),
        ))

    if training_corpus is not None:
        tasks, _flagged = leakage_filter(tasks, training_corpus, leakage_threshold)
    if probe_results is not None:
        tasks = curate_exclude_easy(tasks, probe_results, cutoff)

    return BenchSuite(
        suite_id=suite_id,
        tasks=tuple(sorted(tasks, key=lambda t: t.task_id)),
        seed_range=seed_range,
        holdout=True,
    )
