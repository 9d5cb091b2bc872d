"""Trajectory synthesis: similarity scoring, the seed pool, the grow loop.

rouge_l gets checked against a memoized recursive LCS written here from the
definition; the library's one-row dynamic program never touches this file.
"""

import json
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicegym.dynamics import AnalyticModel
from slicegym.episode import Outcome, Provenance, Tier, Trajectory
from slicegym.state import (
    DegradationEvent,
    DegradationKind,
    HistoryEntry,
    NetworkState,
    SliceType,
)
from slicegym.synthesis import (
    CandidateTrajectory,
    GeneratorUnavailable,
    SeedPool,
    SynthesisRejection,
    TemplateGenerator,
    TraceAnnotator,
    annotate_seeds,
    canonical_text,
    dedup_and_grow,
    default_initial_state,
    detect_decision_points,
    expand,
    load_pool,
    rouge_l,
    run_iterations,
    save_pool,
    tokenize,
    trajectory_tokens,
    verify_execute,
)
from slicegym.tools import Ok, ToolCall, ToolError, build_catalog, validate_call
from slicegym.traceio import ScenarioConfig, synth_trace

from tests.test_traceio import rec


# -- independent scoring oracle ---------------------------------------------

def oracle_lcs(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def oracle_rouge(a, b):
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    lcs = oracle_lcs(a, b)
    if lcs == 0:
        return 0.0
    precision = lcs / len(b)
    recall = lcs / len(a)
    return 2.0 * precision * recall / (precision + recall)


VOCAB = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]
token_seqs = st.lists(st.sampled_from(VOCAB), max_size=10)


class TestRougeL:
    def test_edge_cases(self):
        assert rouge_l([], []) == 1.0
        assert rouge_l(["a"], []) == 0.0
        assert rouge_l([], ["a"]) == 0.0
        assert rouge_l("x y z", "x y z") == 1.0
        assert rouge_l(["a", "b"], ["c", "d"]) == 0.0

    def test_hand_example(self):
        # LCS("the cat sat", "the cat ran") = 2; P = R = 2/3
        assert rouge_l("the cat sat", "the cat ran") == pytest.approx(2 / 3)

    def test_strings_are_case_folded(self):
        assert rouge_l("Switch The Slice", "switch the slice") == 1.0

    @settings(max_examples=300, deadline=None)
    @given(token_seqs, token_seqs)
    def test_matches_oracle_exactly(self, a, b):
        assert rouge_l(a, b) == oracle_rouge(a, b)

    @settings(max_examples=150, deadline=None)
    @given(token_seqs, token_seqs)
    def test_symmetric_and_bounded(self, a, b):
        s = rouge_l(a, b)
        assert s == rouge_l(b, a)
        assert 0.0 <= s <= 1.0


class TestCanonicalText:
    def test_flattens_names_and_literals(self):
        calls = [
            ToolCall("edge_offload", ({"task_id": "t7", "demand": 0.2},
                                      {"node_id": "mec-core", "load": 0.4})),
            ToolCall("heartbeat", ("uav-1",)),
        ]
        text = canonical_text("shed some load", calls)
        assert text.split() == [
            "shed", "some", "load", "edge_offload", "t7", "0.2", "mec-core",
            "0.4", "heartbeat", "uav-1"]

    def test_tokenize_folds_case(self):
        assert tokenize("Switch EMBB") == ["switch", "embb"]


def tiny_traj(intent, tool="read_telemetry", args=(), task_id="x"):
    s = default_initial_state()
    e = HistoryEntry(0, s, ToolCall(tool, args), Ok({}), s)
    return Trajectory(task_id, (e,), Outcome.SUCCESS, Provenance.GOLDEN,
                      intent_text=intent, seed=0)


class TestSeedPool:
    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            SeedPool(threshold=0.0)
        with pytest.raises(ValueError):
            SeedPool(threshold=1.5)
        SeedPool(threshold=1.0)

    def test_exact_duplicate_rejected_at_one(self):
        pool = SeedPool()
        ok, _, _ = pool.admit(tiny_traj("watch the uplink closely"))
        assert ok and len(pool) == 1
        ok, score, nearest = pool.admit(tiny_traj("watch the uplink closely"))
        assert not ok
        assert score == 1.0
        assert nearest == pool.members[0].member_id

    def test_distinct_members_admitted(self):
        pool = SeedPool()
        texts = ["restore the faded link now",
                 "audit battery levels across the fleet",
                 "confirm throughput meets the floor today"]
        for t in texts:
            ok, score, _ = pool.admit(tiny_traj(t))
            assert ok, (t, score)
        assert len(pool) == 3

    def test_pairwise_invariant_holds(self):
        pool = SeedPool()
        rng = np.random.default_rng(8)
        for i in range(30):
            words = rng.choice(VOCAB, size=rng.integers(3, 9), replace=True)
            pool.admit(tiny_traj(" ".join(words), task_id=f"t{i}"))
        members = pool.members
        assert len(members) >= 2
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                s = rouge_l(list(members[i].tokens), list(members[j].tokens))
                assert s < pool.threshold, (members[i].member_id, members[j].member_id)

    def test_max_similarity_matches_brute_force(self):
        pool = SeedPool()
        rng = np.random.default_rng(9)
        for i in range(25):
            words = rng.choice(VOCAB, size=rng.integers(3, 9), replace=True)
            pool.admit(tiny_traj(" ".join(words), task_id=f"t{i}"))
        for _ in range(50):
            probe = list(rng.choice(VOCAB, size=rng.integers(1, 10), replace=True))
            got, _ = pool.max_similarity(probe)
            want = max(oracle_rouge(probe, list(m.tokens)) for m in pool.members)
            assert got == want

    def test_tier_counts_ignore_error_entries(self):
        # four entries, one of them an error: planned length 3 -> L1
        s = default_initial_state()
        entries = tuple(
            HistoryEntry(i, s, ToolCall("read_telemetry", ()), r, s)
            for i, r in enumerate([Ok({}), ToolError("SLICE_MISMATCH", "x"),
                                   Ok({}), Ok({})]))
        traj = Trajectory("t", entries, Outcome.SUCCESS, Provenance.ERROR_RECOVERY,
                          intent_text="repair drill", seed=0)
        pool = SeedPool()
        pool.admit(traj)
        assert pool.members[0].tier is Tier.L1
        assert pool.tier_counts()[Tier.L1] == 1
        assert pool.provenance_counts()[Provenance.ERROR_RECOVERY] == 1

    def test_explicit_tier_wins(self):
        pool = SeedPool()
        pool.admit(tiny_traj("tier override check"), tier=Tier.L3)
        assert pool.members[0].tier is Tier.L3


class TestCandidate:
    def test_needs_calls_and_consistent_tier(self):
        with pytest.raises(ValueError):
            CandidateTrajectory("x", (), Tier.L1)
        with pytest.raises(ValueError):
            CandidateTrajectory("x", (ToolCall("read_telemetry", ()),) * 5, Tier.L1)
        CandidateTrajectory("x", (ToolCall("read_telemetry", ()),) * 5, Tier.L2)

    def test_default_initial_state_is_baseline(self, model):
        s = default_initial_state()
        b = model.params.slice_baselines[SliceType.EMBB]
        assert s == NetworkState(SliceType.EMBB, b.latency_ms, b.jitter_ms,
                                 b.loss_rate, b.throughput_mbps, 0.3)


class TestTemplateGenerator:
    def _demos(self):
        cfg = ScenarioConfig(3, 100, failure_pattern="midlife_congestion")
        return annotate_seeds([(cfg, synth_trace(cfg, 7))])

    def test_proposals_are_structurally_sound(self):
        gen = TemplateGenerator()
        registry = build_catalog()
        demos = self._demos()
        schemas = []
        for seed in range(12):
            rng = np.random.default_rng(seed)
            cand = gen.propose(demos, schemas, degradation=bool(seed % 2), rng=rng)
            names = [c.name for c in cand.calls]
            for call in cand.calls:
                if call.name == "__bogus_tool__":
                    continue  # sloppy-injection probe, repaired downstream
                got = validate_call(registry, call)
                assert isinstance(got, ToolCall), (names, got)
            if seed % 2:
                assert cand.degradations
            else:
                assert not cand.degradations

    def test_deterministic_per_rng_seed(self):
        gen = TemplateGenerator()
        demos = self._demos()
        a = gen.propose(demos, [], True, np.random.default_rng(5))
        b = gen.propose(demos, [], True, np.random.default_rng(5))
        assert a == b


class StubGenerator:
    """Fixed proposal plus a repair lookup table, for exercising one path."""

    def __init__(self, candidate, repairs=None, fail_after=None):
        self.candidate = candidate
        self.repairs = dict(repairs or {})
        self.fail_after = fail_after
        self.calls = 0

    def propose(self, demonstrations, schemas, degradation, rng):
        self.calls += 1
        if self.fail_after is not None and self.calls > self.fail_after:
            raise GeneratorUnavailable("backend gone")
        return self.candidate

    def repair(self, candidate, step_index, error):
        return self.repairs.get(step_index)


def clean_candidate():
    state = default_initial_state()
    loose = {"max_latency_ms": 10000.0, "max_jitter_ms": 10000.0,
             "max_loss_rate": 1.0, "min_throughput_mbps": 0.0,
             "max_edge_load": 1.0}
    return CandidateTrajectory(
        "routine compliance sweep",
        (ToolCall("read_telemetry", ()),
         ToolCall("verify_sla_compliance", (state.to_dict(), loose))),
        Tier.L1)


def broken_candidate():
    state = default_initial_state()
    loose = {"max_latency_ms": 10000.0, "max_jitter_ms": 10000.0,
             "max_loss_rate": 1.0, "min_throughput_mbps": 0.0,
             "max_edge_load": 1.0}
    # wrong from_slice: the first call earns a SLICE_MISMATCH
    return CandidateTrajectory(
        "move the slice over",
        (ToolCall("switch_network_slice", ("URLLC", "MMTC")),
         ToolCall("verify_sla_compliance", (state.to_dict(), loose))),
        Tier.L1)


@pytest.fixture()
def seed_pool():
    cfg_a = ScenarioConfig(3, 120, failure_pattern="midlife_congestion")
    cfg_b = ScenarioConfig(5, 120, failure_pattern="edge_squeeze")
    pool = SeedPool()
    for s in annotate_seeds([(cfg_a, synth_trace(cfg_a, 7)),
                             (cfg_b, synth_trace(cfg_b, 8))]):
        pool.admit(s)
    assert len(pool) >= 3
    return pool


class TestExpand:
    def test_empty_pool_raises(self):
        with pytest.raises(ValueError):
            expand(SeedPool(), StubGenerator(clean_candidate()), 0.0, 4, 1)

    def test_clean_candidate_passes(self, seed_pool):
        got = expand(seed_pool, StubGenerator(clean_candidate()), 0.0, 4, 1)
        assert got == clean_candidate()

    def test_unknown_tool_rejected(self, seed_pool):
        cand = CandidateTrajectory("x", (ToolCall("warp_drive", ()),), Tier.L1)
        got = expand(seed_pool, StubGenerator(cand), 0.0, 4, 1)
        assert got == SynthesisRejection("UNKNOWN_TOOL", step_index=0)

    def test_missing_degradation_rejected(self, seed_pool):
        got = expand(seed_pool, StubGenerator(clean_candidate()), 1.0, 4, 1)
        assert got == SynthesisRejection("MISSING_DEGRADATION")

    def test_no_recovery_subsequence_rejected(self, seed_pool):
        cand = CandidateTrajectory(
            "watch it degrade", (ToolCall("read_telemetry", ()),) * 3, Tier.L1,
            degradations=(DegradationEvent(DegradationKind.CONGESTION, 0, 5, 0.8),))
        got = expand(seed_pool, StubGenerator(cand), 1.0, 4, 1)
        assert got == SynthesisRejection("NO_RECOVERY_SUBSEQUENCE")

    def test_unexpected_degradation_rejected(self, seed_pool):
        cand = CandidateTrajectory(
            "x", (ToolCall("switch_network_slice", ("EMBB", "URLLC")),), Tier.L1,
            degradations=(DegradationEvent(DegradationKind.CONGESTION, 0, 5, 0.8),))
        got = expand(seed_pool, StubGenerator(cand), 0.0, 4, 1)
        assert got == SynthesisRejection("UNEXPECTED_DEGRADATION")


class TestVerifyExecute:
    def test_clean_run_is_golden(self, model):
        traj = verify_execute(clean_candidate(), model, StubGenerator(None), seed=3)
        assert isinstance(traj, Trajectory)
        assert traj.provenance is Provenance.GOLDEN
        assert traj.outcome is Outcome.SUCCESS
        assert len(traj.entries) == 2

    def test_repair_produces_adjacent_error_ok_pair(self, model):
        fix = {0: ToolCall("switch_network_slice", ("EMBB", "MMTC"))}
        traj = verify_execute(broken_candidate(), model,
                              StubGenerator(None, repairs=fix), seed=3)
        assert isinstance(traj, Trajectory)
        assert traj.provenance is Provenance.ERROR_RECOVERY
        first, second = traj.entries[0], traj.entries[1]
        assert isinstance(first.result, ToolError)
        assert isinstance(second.result, Ok)
        assert first.call.name == second.call.name == "switch_network_slice"
        assert traj.outcome is Outcome.SUCCESS

    def test_structural_failures_are_not_repaired(self, model):
        cand = CandidateTrajectory(
            "x", (ToolCall("read_telemetry", ("extra",)),), Tier.L1)
        got = verify_execute(cand, model, StubGenerator(None, repairs={}), seed=3)
        assert got == SynthesisRejection("STRUCTURAL", step_index=0, code="BAD_ARITY")

    def test_no_repair_offered(self, model):
        got = verify_execute(broken_candidate(), model, StubGenerator(None), seed=3)
        assert got == SynthesisRejection(
            "NO_REPAIR", step_index=0, code="SLICE_MISMATCH")

    def test_repair_must_keep_the_tool(self, model):
        fix = {0: ToolCall("read_telemetry", ())}
        got = verify_execute(broken_candidate(), model,
                             StubGenerator(None, repairs=fix), seed=3)
        assert got == SynthesisRejection(
            "REPAIR_TOOL_MISMATCH", step_index=0, code="SLICE_MISMATCH")

    def test_failing_repair_rejects(self, model):
        fix = {0: ToolCall("switch_network_slice", ("URLLC", "MMTC"))}
        got = verify_execute(broken_candidate(), model,
                             StubGenerator(None, repairs=fix), seed=3)
        assert got == SynthesisRejection(
            "REPAIR_FAILED", step_index=1, code="SLICE_MISMATCH")

    def test_unconfirmed_run_is_failure(self, model):
        cand = CandidateTrajectory(
            "just look around", (ToolCall("read_telemetry", ()),), Tier.L1)
        traj = verify_execute(cand, model, StubGenerator(None), seed=3)
        assert traj.outcome is Outcome.FAILURE
        assert traj.provenance is Provenance.GOLDEN


class TestDedupAndGrow:
    def test_sequential_batch_dedup(self):
        pool = SeedPool()
        batch = [tiny_traj("inspect the uplink budget"),
                 tiny_traj("inspect the uplink budget"),
                 tiny_traj("rotate the standby fleet")]
        pool, report = dedup_and_grow(pool, batch)
        assert len(pool) == 2
        assert len(report.accepted_ids) == 2
        [(idx, score, nearest)] = report.rejections
        assert idx == 1 and score == 1.0 and nearest == report.accepted_ids[0]

    def test_threshold_mismatch_raises(self):
        with pytest.raises(ValueError, match="threshold"):
            dedup_and_grow(SeedPool(0.7), [], threshold=0.5)


class TestRunIterations:
    def test_grows_pool_with_statistics(self, seed_pool, model):
        before = len(seed_pool)
        pool, stats = run_iterations(
            seed_pool, TemplateGenerator(), model, K=2, batch_size=8, seed=13)
        assert len(pool) > before
        assert pool.iteration == 2
        assert len(stats.per_iteration) == 2
        for it in stats.per_iteration:
            assert it.proposed == 8
            assert it.accepted == it.golden + it.error_recovery - sum(
                v for k, v in it.rejections.items() if k == "DUPLICATE")
        assert not stats.interrupted
        assert sum(stats.accepted_tiers.values()) == len(pool) - before

    def test_generator_outage_interrupts_cleanly(self, seed_pool):
        gen = StubGenerator(clean_candidate(), fail_after=3)
        pool, stats = run_iterations(
            seed_pool, gen, AnalyticModel.reference(), K=2, batch_size=10, seed=1)
        assert stats.interrupted
        assert len(stats.per_iteration) == 1
        assert stats.per_iteration[0].proposed == 4  # the failing one included

    def test_tier_quota_throttles_a_single_tier(self, seed_pool, model):
        # a generator that only ever makes L1 work hits the 30 % ceiling fast
        class OnlyL1:
            count = 0
            WORDS = ("one", "two", "three", "four", "five", "six", "seven", "eight")

            def propose(self, demonstrations, schemas, degradation, rng):
                i = self.count
                self.count += 1
                state = default_initial_state()
                bounds = {"max_latency_ms": 1000.0 + 7 * i,
                          "max_jitter_ms": 900.0 + 11 * i,
                          "max_loss_rate": 0.5 + i * 0.001,
                          "min_throughput_mbps": i * 0.01,
                          "max_edge_load": 0.8 + i * 0.002}
                return CandidateTrajectory(
                    f"audit pass {self.WORDS[i]} compliance sweep",
                    (ToolCall("read_telemetry", ()),
                     ToolCall("verify_sla_compliance", (state.to_dict(), bounds))),
                    Tier.L1)

            def repair(self, candidate, step_index, error):
                return None

        pool, stats = run_iterations(
            seed_pool, OnlyL1(), model, K=1, batch_size=8, seed=1, p_deg=0.0)
        rej = stats.per_iteration[0].rejections
        assert rej.get("TIER_QUOTA", 0) == 6
        assert stats.accepted_tiers[Tier.L1] == 2


class TestPersistence:
    def test_round_trip(self, seed_pool, tmp_path):
        pool_path = str(tmp_path / "pool.jsonl")
        manifest_path = str(tmp_path / "manifest.json")
        save_pool(seed_pool, pool_path, manifest_path, run_info={"seed": 13})
        back = load_pool(pool_path, manifest_path)
        assert len(back) == len(seed_pool)
        assert [m.member_id for m in back] == [m.member_id for m in seed_pool]
        assert [m.tier for m in back] == [m.tier for m in seed_pool]
        assert back.threshold == seed_pool.threshold
        assert back.iteration == seed_pool.iteration
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["kind"] == "forge_manifest"
        assert man["run_info"] == {"seed": 13}

    def test_rejects_foreign_manifest(self, seed_pool, tmp_path):
        pool_path = str(tmp_path / "pool.jsonl")
        manifest_path = tmp_path / "manifest.json"
        save_pool(seed_pool, pool_path, str(manifest_path))
        doc = json.loads(manifest_path.read_text())
        doc["kind"] = "suite"
        manifest_path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="manifest"):
            load_pool(pool_path, str(manifest_path))

    def test_rejects_corrupt_checkpoint(self, tmp_path):
        # two identical members cannot coexist under the invariant
        pool_path = str(tmp_path / "pool.jsonl")
        manifest_path = str(tmp_path / "manifest.json")
        from slicegym.traceio import write_trajectories

        twin = tiny_traj("the same words twice")
        write_trajectories([twin, twin], pool_path)
        manifest = {"schema_version": 1, "kind": "forge_manifest",
                    "threshold": 0.7, "iteration": 0,
                    "member_ids": ["m00001", "m00002"],
                    "member_tiers": ["L1", "L1"], "run_info": {}}
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh)
        with pytest.raises(ValueError, match="dedup invariant"):
            load_pool(pool_path, manifest_path)


class TestDecisionPoints:
    def test_breach_handover_and_flag_onsets(self):
        rows = [
            rec(0.0),
            rec(1.0, latency_ms=80.0, jitter_ms=5.0),          # breach onset
            rec(2.0, latency_ms=85.0, jitter_ms=5.0),          # still violating
            rec(3.0),                                          # recovered
            rec(4.0, serving_gnb_id="gnb-2"),                  # handover
            rec(5.0, serving_gnb_id="gnb-2", degradation_flag=1),  # flag onset
        ]
        points = detect_decision_points(rows)
        kinds = [(p.index, p.kind) for p in points]
        assert kinds == [(1, "sla_breach"), (4, "handover"), (5, "degradation_onset")]
        assert points[0].detail == "latency"
        assert points[1].detail == "gnb-1->gnb-2"

    def test_no_points_on_a_healthy_trace(self):
        assert detect_decision_points([rec(float(i)) for i in range(5)]) == []


class TestAnnotator:
    def test_breach_seeds_are_execution_verified(self):
        cfg = ScenarioConfig(3, 100, failure_pattern="midlife_congestion")
        rows = synth_trace(cfg, 7)
        seeds = TraceAnnotator().annotate(cfg, rows)
        assert seeds
        for traj in seeds:
            assert traj.provenance is Provenance.REAL_SEED
            assert traj.outcome is Outcome.SUCCESS
            last = traj.entries[-1]
            assert last.call.name == "verify_sla_compliance"
            assert isinstance(last.result, Ok) and last.result.value["compliant"]
            assert traj.intent_text

    def test_annotation_is_deterministic(self):
        cfg = ScenarioConfig(4, 150, failure_pattern="double_fault")
        rows = synth_trace(cfg, 9)
        ann = TraceAnnotator()
        assert ann.annotate(cfg, rows) == ann.annotate(cfg, rows)

    def test_one_seed_per_decision_row(self):
        cfg = ScenarioConfig(3, 100, failure_pattern="midlife_congestion")
        rows = synth_trace(cfg, 7)
        seeds = TraceAnnotator().annotate(cfg, rows)
        assert len({t.task_id for t in seeds}) == len(seeds)

    def test_handover_seeds_from_a_clean_trace(self):
        cfg = ScenarioConfig(2, 200, failure_pattern="none")
        rows = synth_trace(cfg, 11)
        seeds = TraceAnnotator().annotate(cfg, rows)
        assert seeds  # 4 % handover odds over 200 s makes this near-certain
        for traj in seeds:
            names = [e.call.name for e in traj.entries]
            assert "request_handover" in names
            assert traj.outcome is Outcome.SUCCESS

    def test_annotate_seeds_concatenates(self):
        cfg_a = ScenarioConfig(3, 100, failure_pattern="midlife_congestion")
        cfg_b = ScenarioConfig(5, 100, failure_pattern="edge_squeeze")
        rows_a, rows_b = synth_trace(cfg_a, 7), synth_trace(cfg_b, 8)
        combined = annotate_seeds([(cfg_a, rows_a), (cfg_b, rows_b)])
        solo = annotate_seeds([(cfg_a, rows_a)]) + annotate_seeds([(cfg_b, rows_b)])
        assert combined == solo


def test_pool_tokens_cover_intent_and_calls(seed_pool):
    m = seed_pool.members[0]
    toks = trajectory_tokens(m.trajectory)
    assert list(m.tokens) == toks
    assert toks[0] == m.trajectory.intent_text.split()[0].lower()
