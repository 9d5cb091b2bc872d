"""Benchmark harness: suites, metrics, curation, cross-model replay."""

import pytest
from hypothesis import given, settings, strategies as st

from slicegym.bench import (
    BenchSuite,
    EvalReport,
    HOLDOUT_SEED_RANGE,
    TRAIN_SEED_RANGE,
    TaskOutcome,
    _pearson,
    cross_replay_gap,
    curate_exclude_easy,
    evaluate,
    format_report_table,
    frontier_select,
    generate_suite,
    leakage_filter,
    separability_probe,
)
from slicegym.dynamics import AnalyticModel
from slicegym.episode import (
    Outcome,
    ScriptedAgent,
    SuccessRule,
    Task,
    Tier,
    run_episode,
    tier_for_length,
)
from slicegym.state import NetworkState, SliceType
from slicegym.tools import ToolCall

from tests.test_episode import make_task, verify_call


def outcome(task_id="t", tier=Tier.L1, success=True, path=2, ref=2):
    return TaskOutcome(
        task_id=task_id, tier=tier,
        outcome=Outcome.SUCCESS if success else Outcome.FAILURE,
        success=success, path_length=path, reference_length=ref)


def report(results, agent="agent"):
    return EvalReport(suite_id="s", agent_name=agent, model_name="analytic",
                      results=tuple(results))


class TestSuite:
    def _tasks(self, n=3):
        return tuple(
            Task(task_id=f"t{i}", intent_text=f"audit pass {i}", tier=Tier.L1,
                 initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3),
                 success_rule=SuccessRule("verified"), reference_length=2,
                 step_budget=12)
            for i in range(n))

    def test_duplicate_ids_rejected(self):
        tasks = self._tasks(2)
        with pytest.raises(ValueError, match="duplicate"):
            BenchSuite("s", (tasks[0], tasks[0]))

    def test_holdout_seed_discipline(self):
        tasks = self._tasks()
        with pytest.raises(ValueError, match="overlap"):
            BenchSuite("s", tasks, seed_range=(40, 60), holdout=True)
        BenchSuite("s", tasks, seed_range=(40, 60), holdout=False)
        BenchSuite("s", tasks, seed_range=HOLDOUT_SEED_RANGE, holdout=True)
        assert TRAIN_SEED_RANGE == (1, 50)
        assert HOLDOUT_SEED_RANGE == (51, 80)

    def test_lookup_and_restriction(self):
        suite = BenchSuite("s", self._tasks())
        assert suite.task_by_id("t1").task_id == "t1"
        with pytest.raises(KeyError):
            suite.task_by_id("zzz")
        only = suite.restricted_to(Tier.L1)
        assert len(only) == 3 and only.suite_id == "s-l1"
        assert len(suite.restricted_to(Tier.L3)) == 0
        assert suite.by_tier()[Tier.L1] == list(suite.tasks)

    def test_save_load_round_trip(self, tmp_path):
        suite = BenchSuite("s", self._tasks())
        path = str(tmp_path / "suite.json")
        suite.save(path)
        assert BenchSuite.load(path) == suite


class TestMetrics:
    def test_spl_term(self):
        assert outcome(success=False).spl_term == 0.0
        assert outcome(path=2, ref=2).spl_term == 1.0
        assert outcome(path=1, ref=2).spl_term == 1.0  # beating the reference caps at 1
        assert outcome(path=4, ref=2).spl_term == 0.5

    def test_hand_computed_aggregate(self):
        # one success at twice the reference length, one failure
        r = report([outcome("a", path=2, ref=1), outcome("b", success=False)])
        assert r.sr == 0.5
        assert r.spl == 0.25

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 40), st.integers(1, 12)),
                    min_size=1, max_size=30))
    def test_spl_never_exceeds_sr(self, rows):
        results = [
            outcome(f"t{i}", success=s, path=max(p, r), ref=r)
            for i, (s, p, r) in enumerate(rows)]
        rep = report(results)
        assert rep.spl <= rep.sr + 1e-12
        assert 0.0 <= rep.spl and rep.sr <= 1.0

    def test_tier_slices_and_table(self):
        r = report([outcome("a", tier=Tier.L1), outcome("b", tier=Tier.L2,
                                                        success=False)],
                   agent="threshold-rule")
        assert r.tier_sr(Tier.L1) == 1.0
        assert r.tier_sr(Tier.L2) == 0.0
        assert r.tier_sr(Tier.L3) is None
        table = format_report_table([r])
        assert "threshold-rule" in table
        assert "--" in table  # the empty L3 column
        lines = table.splitlines()
        assert len(lines) == 3
        assert lines[0].split() == ["agent", "L1", "L2", "L3", "SR", "SPL"]

    def test_report_to_dict_shape(self):
        d = report([outcome()]).to_dict()
        assert d["kind"] == "eval_report"
        assert d["tiers"]["L1"]["count"] == 1
        assert d["results"][0]["task_id"] == "t"


class TestPearson:
    def test_perfect_correlation(self):
        assert _pearson([0.2, 0.5, 0.8], [0.3, 0.6, 0.9]) == pytest.approx(1.0, abs=1e-12)
        assert _pearson([0.0, 1.0], [1.0, 0.0]) == pytest.approx(-1.0, abs=1e-12)

    def test_undefined_cases(self):
        assert _pearson([0.5, 0.5], [0.1, 0.9]) is None  # zero variance
        assert _pearson([1.0], [1.0]) is None
        assert _pearson([1.0, 2.0], [1.0]) is None


class TestEvaluate:
    def _suite(self):
        tasks = tuple(
            Task(task_id=f"t{i}", intent_text=f"routine audit {i}", tier=Tier.L1,
                 initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3),
                 success_rule=SuccessRule("verified"), reference_length=2,
                 step_budget=12)
            for i in range(3))
        return BenchSuite("desk", tasks)

    def test_scripted_agent_full_marks(self, model):
        agent = ScriptedAgent([ToolCall("read_telemetry", ()), verify_call()])
        rep = evaluate(agent, self._suite(), model, seed=1, agent_name="scripted")
        assert rep.sr == 1.0 and rep.spl == 1.0
        assert rep.agent_name == "scripted"
        assert all(o.path_length == 2 for o in rep.results)
        assert [o.task_id for o in rep.results] == ["t0", "t1", "t2"]

    def test_deterministic(self, model):
        agent = ScriptedAgent([ToolCall("read_telemetry", ()), verify_call()])
        a = evaluate(agent, self._suite(), model, seed=1)
        agent2 = ScriptedAgent([ToolCall("read_telemetry", ()), verify_call()])
        b = evaluate(agent2, self._suite(), model, seed=1)
        assert a == b


class TestCuration:
    def _tasks(self):
        return [
            Task(task_id=f"t{i}", intent_text=t, tier=Tier.L1,
                 initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3),
                 success_rule=SuccessRule("verified"), reference_length=2,
                 step_budget=12)
            for i, t in enumerate([
                "keep the embb slice within its envelope",
                "restore throughput after the outage window",
                "confirm loss stays inside budget on mmtc"])]

    def test_exclude_easy_drops_above_cutoff(self):
        tasks = self._tasks()
        results = {
            "probe-a": {"t0": 0.9, "t1": 0.2, "t2": 0.8},
            "probe-b": {"t0": 0.1, "t1": 0.85, "t2": 0.3},
        }
        kept = curate_exclude_easy(tasks, results, cutoff=0.8)
        # t0 dropped by probe-a, t1 by probe-b; t2 sits at the cutoff and stays
        assert [t.task_id for t in kept] == ["t2"]

    def test_exclude_easy_requires_full_coverage(self):
        with pytest.raises(ValueError, match="missing"):
            curate_exclude_easy(self._tasks(), {"probe": {"t0": 0.5}})

    def test_leakage_filter_flags_verbatim(self):
        tasks = self._tasks()
        corpus = [tasks[0].intent_text, "an unrelated training sentence"]
        clean, flagged = leakage_filter(tasks, corpus, threshold=0.7)
        assert [t.task_id for t in clean] == ["t1", "t2"]
        [(bad, score)] = flagged
        assert bad.task_id == "t0" and score == 1.0

    def test_leakage_filter_passes_a_069_pair(self):
        base = "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima mike"
        near = "alpha bravo charlie delta echo foxtrot golf hotel india x1 x2 x3 x4"
        # LCS 9 over 13+13 tokens: F1 = 18/26 ~ 0.692, under the 0.7 line
        task = Task(task_id="near", intent_text=near, tier=Tier.L1,
                    initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01,
                                               80.0, 0.3),
                    success_rule=SuccessRule("verified"), reference_length=2,
                    step_budget=12)
        clean, flagged = leakage_filter([task], [base], threshold=0.7)
        assert clean == [task] and flagged == []

    def test_frontier_select(self):
        rates = {"a": 0.05, "b": 0.1, "c": 0.5, "d": 0.9, "e": 0.95}
        assert frontier_select(rates) == ["b", "c", "d"]
        with pytest.raises(ValueError):
            frontier_select({"a": 1.2})
        with pytest.raises(ValueError):
            frontier_select({}, lo=0.9, hi=0.1)


class TestSeparability:
    def test_validation(self):
        with pytest.raises(ValueError):
            separability_probe([], ["x"] * 5)
        with pytest.raises(ValueError):
            separability_probe(["a b"] * 3, ["c d"] * 8, folds=5)

    def test_identical_distribution_is_chance_level(self):
        import numpy as np

        rng = np.random.default_rng(0)
        vocab = ["slice", "latency", "verify", "restore", "edge", "loss",
                 "throughput", "audit", "confirm", "budget"]

        def sentence():
            return " ".join(rng.choice(vocab, size=6, replace=True))

        texts = [sentence() for _ in range(60)]
        acc = separability_probe(texts[:30], texts[30:], seed=3)
        assert 0.3 <= acc <= 0.7

    def test_disjoint_vocabularies_separate(self):
        train = [f"alpha bravo charlie delta echo {i}" for i in range(20)]
        holdout = [f"zulu yankee xray whiskey victor {i}" for i in range(20)]
        assert separability_probe(train, holdout, seed=3) >= 0.95


def sensitive_task(task_id):
    """Succeeds on the reference model, fails when EMBB latency scales x1.5."""
    return Task(
        task_id=task_id,
        intent_text=f"hold latency under 25 ms on {task_id}",
        tier=Tier.L1,
        initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3),
        success_rule=SuccessRule("metric_below", metric="latency", bound=25.0),
        reference_length=2,
        step_budget=12,
    )


def sensitive_trajectory(model, task, seed):
    agent = ScriptedAgent([
        ToolCall("switch_network_slice", ("EMBB", "EMBB")), verify_call()])
    traj = run_episode(agent, model, task, seed)
    assert traj.outcome is Outcome.SUCCESS
    return traj


class TestCrossReplay:
    def _fixtures(self, model):
        tasks = {f"s{i}": sensitive_task(f"s{i}") for i in range(3)}
        trajs = {
            "agent-x": [sensitive_trajectory(model, tasks["s0"], 11),
                        sensitive_trajectory(model, tasks["s1"], 12)],
            "agent-y": [sensitive_trajectory(model, tasks["s2"], 13)],
        }
        return tasks, trajs

    def test_needs_two_agents(self, model):
        tasks, trajs = self._fixtures(model)
        with pytest.raises(ValueError):
            cross_replay_gap({"solo": trajs["agent-x"]}, model, model, tasks)
        with pytest.raises(ValueError, match="no trajectories"):
            cross_replay_gap({"a": trajs["agent-x"], "b": []}, model, model, tasks)

    def test_identical_models_are_gap_free(self, model):
        tasks, trajs = self._fixtures(model)
        # give the agents different SR so the correlation is defined
        failing = sensitive_trajectory(model, tasks["s0"], 14)
        failing = failing.__class__(
            task_id=failing.task_id, entries=failing.entries[:1],
            outcome=Outcome.FAILURE, provenance=failing.provenance,
            intent_text=failing.intent_text, seed=failing.seed)
        trajs["agent-y"] = trajs["agent-y"] + [failing]
        rep = cross_replay_gap(trajs, model, model, tasks)
        assert all(d == 0.0 for d in rep.delta.values())
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert rep.sr_a["agent-x"] == 1.0
        assert rep.sr_a["agent-y"] == 0.5

    def test_perturbed_model_opens_a_gap(self, model):
        tasks, trajs = self._fixtures(model)
        scaled = AnalyticModel(
            model.params.with_scaled_baseline(SliceType.EMBB, "latency_ms", 1.5),
            model.registry)
        rep = cross_replay_gap(trajs, model, scaled, tasks)
        assert any(abs(d) > 0 for d in rep.delta.values())
        assert rep.delta["agent-x"] == -1.0  # every replay flips to failure
        assert rep.tier_gaps[Tier.L1] == -1.0
        assert rep.tier_gaps[Tier.L3] is None

    def test_report_serializes(self, model):
        tasks, trajs = self._fixtures(model)
        d = cross_replay_gap(trajs, model, model, tasks).to_dict()
        assert d["kind"] == "cross_replay_report"
        assert set(d["agents"]) == {"agent-x", "agent-y"}


class TestGenerateSuite:
    def test_small_suite_shape(self):
        suite = generate_suite("mini", seed_range=(51, 52), duration_s=120, seed=3)
        assert suite.holdout and suite.seed_range == (51, 52)
        assert len(suite) >= 10
        by_tier = suite.by_tier()
        assert by_tier[Tier.L1] and by_tier[Tier.L2] and by_tier[Tier.L3]
        ids = [t.task_id for t in suite.tasks]
        assert len(set(ids)) == len(ids)
        for t in suite.tasks:
            assert tier_for_length(t.reference_length) is t.tier
            assert t.intent_text

    def test_generation_is_deterministic(self):
        a = generate_suite("mini", seed_range=(51, 51), duration_s=120, seed=3)
        b = generate_suite("mini", seed_range=(51, 51), duration_s=120, seed=3)
        assert a == b

    def test_leakage_and_probe_hooks(self):
        base = generate_suite("mini", seed_range=(51, 51), duration_s=120, seed=3)
        corpus = [base.tasks[0].intent_text]
        filtered = generate_suite("mini", seed_range=(51, 51), duration_s=120,
                                  seed=3, training_corpus=corpus)
        assert len(filtered) < len(base)
        rates = {t.task_id: (1.0 if i == 0 else 0.0)
                 for i, t in enumerate(base.tasks)}
        probed = generate_suite("mini", seed_range=(51, 51), duration_s=120,
                                seed=3, probe_results={"probe": rates})
        assert len(probed) == len(base) - 1
