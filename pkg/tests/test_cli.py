"""Command-line entry points, exercised through main() with temp configs."""

import json

import pytest

from slicegym.bench import BenchSuite
from slicegym.cli import main
from slicegym.dynamics import AnalyticModel
from slicegym.episode import Outcome
from slicegym.synthesis import load_pool
from slicegym.traceio import read_trace, write_trajectories

from tests.test_bench import sensitive_task, sensitive_trajectory


def write_config(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTraceSynth:
    def test_writes_trace_and_reports_windows(self, tmp_path, capsys):
        out_path = tmp_path / "trace.csv"
        cfg = write_config(tmp_path, "synth.json", {
            "topology_seed": 3, "duration_s": 100,
            "failure_pattern": "midlife_congestion", "output": str(out_path)})
        code, out, _ = run(capsys, "trace", "synth", cfg, "--seed", "7")
        assert code == 0
        assert "wrote 100 records" in out
        assert "window CONGESTION [40s, 60s) severity 0.9" in out
        assert len(read_trace(str(out_path))) == 100

    def test_missing_output_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "synth.json", {"topology_seed": 1,
                                                    "duration_s": 10})
        code, _, err = run(capsys, "trace", "synth", cfg)
        assert code == 2
        assert "error:" in err and "'output'" in err


class TestTraceValidate:
    def _trace(self, tmp_path, capsys, pattern="midlife_congestion"):
        out_path = tmp_path / "t.csv"
        cfg = write_config(tmp_path, "s.json", {
            "topology_seed": 5, "duration_s": 100,
            "failure_pattern": pattern, "output": str(out_path)})
        assert main(["trace", "synth", cfg]) == 0
        capsys.readouterr()
        return out_path

    def test_valid_trace_counts_decision_points(self, tmp_path, capsys):
        trace = self._trace(tmp_path, capsys)
        cfg = write_config(tmp_path, "v.json", {"input": str(trace)})
        code, out, _ = run(capsys, "trace", "validate", cfg)
        assert code == 0
        assert "valid: 100 records" in out
        assert "degradation_onset: 1" in out
        assert "sla_breach" in out

    def test_invalid_trace_is_line_addressed(self, tmp_path, capsys):
        trace = self._trace(tmp_path, capsys)
        lines = trace.read_text().splitlines()
        cells = lines[3].split(",")
        cells[2] = cells[2].lower()  # slice names are uppercase on the wire
        lines[3] = ",".join(cells)
        trace.write_text("\n".join(lines) + "\n")
        cfg = write_config(tmp_path, "v.json", {"input": str(trace)})
        code, out, _ = run(capsys, "trace", "validate", cfg)
        assert code == 1
        assert out.startswith("invalid: line 4:")

    def test_missing_file_is_an_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "v.json", {"input": str(tmp_path / "no.csv")})
        code, _, err = run(capsys, "trace", "validate", cfg)
        assert code == 2
        assert "error:" in err


class TestForgeAndPool:
    def test_forge_run_then_stats(self, tmp_path, capsys):
        pool_path = tmp_path / "pool.jsonl"
        manifest = tmp_path / "manifest.json"
        cfg = write_config(tmp_path, "forge.json", {
            "seed_traces": [
                {"topology_seed": 3, "failure_pattern": "midlife_congestion"},
                {"topology_seed": 5, "failure_pattern": "edge_squeeze"},
            ],
            "duration_s": 120,
            "iterations": 1,
            "batch_size": 6,
            "pool_output": str(pool_path),
            "manifest_output": str(manifest),
        })
        code, out, _ = run(capsys, "forge", "run", cfg, "--seed", "11")
        assert code == 0
        assert "seeded pool with" in out
        assert "iteration 1: proposed 6" in out
        assert "saved" in out and str(pool_path) in out

        pool = load_pool(str(pool_path), str(manifest))
        assert len(pool) > 0
        assert pool.iteration == 1

        stats_cfg = write_config(tmp_path, "stats.json", {
            "pool": str(pool_path), "manifest": str(manifest)})
        code, out, _ = run(capsys, "pool", "stats", stats_cfg)
        assert code == 0
        assert f"pool: {len(pool)} trajectories, iteration 1" in out
        assert "tier L1:" in out and "tier L3:" in out
        assert "provenance" in out

    def test_forge_needs_seed_traces(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "forge.json", {
            "seed_traces": [], "pool_output": "x", "manifest_output": "y"})
        code, _, err = run(capsys, "forge", "run", cfg)
        assert code == 2
        assert "non-empty" in err


class TestBenchEval:
    def test_generate_evaluate_and_save(self, tmp_path, capsys):
        suite_path = tmp_path / "suite.json"
        report_path = tmp_path / "reports.json"
        cfg = write_config(tmp_path, "eval.json", {
            "generate": {"suite_id": "mini", "seed_range": [51, 52],
                         "duration_s": 100, "handover_tasks_per_seed": 1},
            "agents": ["threshold-rule", "mapek"],
            "suite_output": str(suite_path),
            "report_output": str(report_path),
        })
        code, out, _ = run(capsys, "bench", "eval", cfg, "--seed", "3")
        assert code == 0
        assert "suite mini:" in out
        assert "threshold-rule" in out and "mapek" in out
        assert "SR" in out and "SPL" in out

        doc = json.loads(report_path.read_text())
        assert doc["kind"] == "eval_reports"
        assert [r["agent"] for r in doc["reports"]] == ["threshold-rule", "mapek"]
        reloaded = BenchSuite.load(str(suite_path))
        assert reloaded.suite_id == "mini"

        # second pass over the saved suite, one agent only
        cfg2 = write_config(tmp_path, "eval2.json", {
            "suite": str(suite_path), "agents": ["mapek"]})
        code, out, _ = run(capsys, "bench", "eval", cfg2, "--seed", "3")
        assert code == 0
        assert "mapek" in out

    def test_unknown_agent(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "eval.json", {
            "generate": {"seed_range": [51, 51], "duration_s": 60},
            "agents": ["gpt-11"]})
        code, _, err = run(capsys, "bench", "eval", cfg)
        assert code == 2
        assert "unknown agent 'gpt-11'" in err
        assert "mapek, threshold-rule" in err

    def test_needs_a_suite_source(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "eval.json", {"agents": ["mapek"]})
        code, _, err = run(capsys, "bench", "eval", cfg)
        assert code == 2
        assert "either 'suite' or 'generate'" in err


class TestBenchReplay:
    def _fixtures(self, tmp_path):
        model = AnalyticModel.reference()
        tasks = [sensitive_task(f"s{i}") for i in range(3)]
        suite = BenchSuite("replay-suite", tuple(tasks))
        suite_path = tmp_path / "suite.json"
        suite.save(str(suite_path))

        paths = {}
        groups = {"agent-x": tasks[:2], "agent-y": tasks[2:]}
        for name, group in groups.items():
            trajs = [sensitive_trajectory(model, t, 20 + i)
                     for i, t in enumerate(group)]
            p = tmp_path / f"{name}.jsonl"
            write_trajectories(trajs, str(p))
            paths[name] = str(p)
        return suite_path, paths

    def test_identical_models_report_zero_gap(self, tmp_path, capsys):
        suite_path, paths = self._fixtures(tmp_path)
        cfg = write_config(tmp_path, "replay.json", {
            "trajectories": paths, "suite": str(suite_path)})
        code, out, _ = run(capsys, "bench", "replay", cfg)
        assert code == 0
        assert "agent-x: SR(A)=1.000 SR(B)=1.000 delta=+0.000" in out
        assert "L1 gap: +0.000" in out
        assert "L3 gap: n/a" in out

    def test_perturbed_model_reports_the_gap(self, tmp_path, capsys):
        suite_path, paths = self._fixtures(tmp_path)
        report_path = tmp_path / "gap.json"
        cfg = write_config(tmp_path, "replay.json", {
            "trajectories": paths,
            "suite": str(suite_path),
            "perturb": {"slice": "EMBB", "field": "latency_ms", "factor": 1.5},
            "output": str(report_path),
        })
        code, out, _ = run(capsys, "bench", "replay", cfg)
        assert code == 0
        assert "agent-x: SR(A)=1.000 SR(B)=0.000 delta=-1.000" in out
        assert "agent-y: SR(A)=1.000 SR(B)=0.000 delta=-1.000" in out
        assert "L1 gap: -1.000" in out
        doc = json.loads(report_path.read_text())
        assert doc["kind"] == "cross_replay_report"

    def test_needs_two_agents(self, tmp_path, capsys):
        suite_path, paths = self._fixtures(tmp_path)
        cfg = write_config(tmp_path, "replay.json", {
            "trajectories": {"agent-x": paths["agent-x"]}})
        code, _, err = run(capsys, "bench", "replay", cfg)
        assert code == 2
        assert "at least two agent" in err


class TestMainPlumbing:
    def test_config_must_be_an_object(self, tmp_path, capsys):
        p = tmp_path / "cfg.json"
        p.write_text("[]")
        code, _, err = run(capsys, "trace", "validate", str(p))
        assert code == 2
        assert "must hold a JSON object" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "pool", "stats", str(tmp_path / "nope.json"))
        assert code == 2
        assert err.startswith("error:")

    def test_unparseable_arguments_exit_nonzero(self, capsys):
        with pytest.raises(SystemExit):
            main(["trace"])
        capsys.readouterr()
