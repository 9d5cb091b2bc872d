"""Command-line front end.

Six subcommands, each driven by a JSON configuration file plus a --seed flag:

    slicegym trace synth CONFIG     generate a synthetic flow trace
    slicegym trace validate CONFIG  check a trace file and count decision points
    slicegym forge run CONFIG       seed a pool from traces and grow it
    slicegym bench eval CONFIG      run rule-based agents over a task suite
    slicegym bench replay CONFIG    cross-replay trajectories on two models
    slicegym pool stats CONFIG      summarize a saved pool checkpoint

Configuration schemas are documented per handler below; unknown keys are
ignored so configs can carry operator notes.
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from typing import Callable, Mapping, Optional

from .agents import MapeKAgent, ThresholdRuleAgent
from .bench import (
    BenchSuite,
    cross_replay_gap,
    evaluate,
    format_report_table,
    generate_suite,
)
from .dynamics import AnalyticModel
from .episode import Tier
from .state import SliceType
from .synthesis import (
    DEFAULT_DEDUP_THRESHOLD,
    DEFAULT_P_DEG,
    SeedPool,
    TemplateGenerator,
    annotate_seeds,
    detect_decision_points,
    load_pool,
    run_iterations,
    save_pool,
)
from .traceio import (
    ScenarioConfig,
    TraceFormatError,
    read_trace,
    read_trajectories,
    synth_trace,
    write_trace,
)

__all__ = ["main"]

Printer = Callable[[str], None]


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("configuration file must hold a JSON object")
    return doc


def _require(config: Mapping, key: str) -> object:
    if key not in config:
        raise ValueError(f"configuration is missing required key {key!r}")
    return config[key]


def _write_json(doc: Mapping, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# trace synth / trace validate
# ---------------------------------------------------------------------------


def _cmd_trace_synth(config: Mapping, seed: int, out: Printer) -> int:
    """Config: topology_seed, duration_s, [traffic_mix], [failure_pattern], output."""
    output = str(_require(config, "output"))
    scenario = ScenarioConfig.from_dict(config)
    records = synth_trace(scenario, seed)
    write_trace(records, output)
    windows = scenario.degradation_windows()
    out(f"wrote {len(records)} records to {output}")
    for kind, start, end, severity in windows:
        out(f"  window {kind.value} [{start}s, {end}s) severity {severity:g}")
    return 0


def _cmd_trace_validate(config: Mapping, seed: int, out: Printer) -> int:
    """Config: input. Exit 1 with a line-addressed message on format errors."""
    path = str(_require(config, "input"))
    try:
        records = read_trace(path)
    except TraceFormatError as exc:
        where = f"line {exc.line}: " if exc.line is not None else ""
        out(f"invalid: {where}{exc}")
        return 1
    points = detect_decision_points(records)
    by_kind: dict[str, int] = {}
    for p in points:
        by_kind[p.kind] = by_kind.get(p.kind, 0) + 1
    out(f"valid: {len(records)} records, {len(points)} decision points")
    for kind in sorted(by_kind):
        out(f"  {kind}: {by_kind[kind]}")
    return 0


# ---------------------------------------------------------------------------
# forge run
# ---------------------------------------------------------------------------


def _cmd_forge_run(config: Mapping, seed: int, out: Printer) -> int:
    """Config: seed_traces (list of scenario dicts), pool_output, manifest_output,
    [iterations=3], [batch_size=20], [p_deg], [sample_size=4], [dedup_threshold],
    [duration_s=120] as the per-trace default."""
    trace_specs = _require(config, "seed_traces")
    if not isinstance(trace_specs, list) or not trace_specs:
        raise ValueError("seed_traces must be a non-empty list")
    pool_path = str(_require(config, "pool_output"))
    manifest_path = str(_require(config, "manifest_output"))
    iterations = int(config.get("iterations", 3))
    batch_size = int(config.get("batch_size", 20))
    p_deg = float(config.get("p_deg", DEFAULT_P_DEG))
    sample_size = int(config.get("sample_size", 4))
    threshold = float(config.get("dedup_threshold", DEFAULT_DEDUP_THRESHOLD))
    default_duration = int(config.get("duration_s", 120))

    dataset = []
    for i, spec in enumerate(trace_specs):
        scenario = ScenarioConfig.from_dict(
            {"duration_s": default_duration, **spec})
        trace_seed = zlib.crc32(f"forge-trace:{seed}:{i}".encode())
        dataset.append((scenario, synth_trace(scenario, trace_seed)))

    seeds = annotate_seeds(dataset)
    pool = SeedPool(threshold=threshold)
    skipped = 0
    for traj in seeds:
        ok, _, _ = pool.admit(traj)
        skipped += not ok
    out(f"seeded pool with {len(pool)} trajectories"
        + (f" ({skipped} near-duplicates skipped)" if skipped else ""))
    if len(pool) == 0:
        out("no seed trajectories; nothing to grow")
        return 1

    generator = TemplateGenerator()
    model = AnalyticModel.reference()
    pool, stats = run_iterations(
        pool, generator, model, K=iterations, p_deg=p_deg,
        batch_size=batch_size, seed=seed, sample_size=sample_size)

    for it in stats.per_iteration:
        rej = sum(it.rejections.values())
        out(f"iteration {it.iteration}: proposed {it.proposed}, accepted "
            f"{it.accepted} (golden {it.golden}, recovery {it.error_recovery}), "
            f"rejected {rej}, pool {it.pool_size_after}")
    if stats.interrupted:
        out("run interrupted by generator outage; saving partial pool")

    run_info = {
        "seed": seed,
        "iterations": iterations,
        "batch_size": batch_size,
        "p_deg": p_deg,
        "sample_size": sample_size,
        "generator": type(generator).__name__,
        "seed_traces": [s.to_dict() for s, _ in dataset],
        "statistics": stats.to_dict(),
    }
    save_pool(pool, pool_path, manifest_path, run_info=run_info)
    tiers = pool.tier_counts()
    mix = ", ".join(f"{t.value}={tiers[t]}" for t in Tier)
    out(f"saved {len(pool)} trajectories ({mix}) to {pool_path}")
    return 0


# ---------------------------------------------------------------------------
# bench eval / bench replay
# ---------------------------------------------------------------------------

_AGENT_FACTORIES = {
    "threshold-rule": ThresholdRuleAgent,
    "mapek": MapeKAgent,
}


def _make_agent(name: str):
    try:
        return _AGENT_FACTORIES[name]()
    except KeyError:
        known = ", ".join(sorted(_AGENT_FACTORIES))
        raise ValueError(f"unknown agent {name!r}; known agents: {known}")


def _cmd_bench_eval(config: Mapping, seed: int, out: Printer) -> int:
    """Config: suite (path) or generate {suite_id, seed_range, duration_s,
    handover_tasks_per_seed}, agents (names), [suite_output], [report_output]."""
    if "suite" in config:
        suite = BenchSuite.load(str(config["suite"]))
    elif "generate" in config:
        gen = dict(config["generate"])
        lo, hi = gen.get("seed_range", (51, 80))
        suite = generate_suite(
            suite_id=str(gen.get("suite_id", "holdout-v1")),
            seed_range=(int(lo), int(hi)),
            duration_s=int(gen.get("duration_s", 120)),
            seed=seed,
            handover_tasks_per_seed=int(gen.get("handover_tasks_per_seed", 2)),
        )
        if "suite_output" in config:
            suite.save(str(config["suite_output"]))
            out(f"saved generated suite ({len(suite.tasks)} tasks) to "
                f"{config['suite_output']}")
    else:
        raise ValueError("configuration needs either 'suite' or 'generate'")

    agent_names = config.get("agents", list(_AGENT_FACTORIES))
    model = AnalyticModel.reference()
    reports = []
    for name in agent_names:
        agent = _make_agent(str(name))
        reports.append(evaluate(agent, suite, model, seed=seed,
                                agent_name=str(name)))
    out(f"suite {suite.suite_id}: {len(suite.tasks)} tasks, seed {seed}")
    out(format_report_table(reports))
    if "report_output" in config:
        _write_json({
            "schema_version": 1,
            "kind": "eval_reports",
            "reports": [r.to_dict() for r in reports],
        }, str(config["report_output"]))
        out(f"wrote reports to {config['report_output']}")
    return 0


def _perturbed_model(base: AnalyticModel, perturb: Mapping) -> AnalyticModel:
    slc = SliceType(str(_require(perturb, "slice")))
    field_name = str(_require(perturb, "field"))
    factor = float(_require(perturb, "factor"))
    return AnalyticModel(
        base.params.with_scaled_baseline(slc, field_name, factor),
        base.registry)


def _cmd_bench_replay(config: Mapping, seed: int, out: Printer) -> int:
    """Config: trajectories {agent: path, ...}, [suite], [perturb {slice,
    field, factor}], [output]. Without perturb both models are identical."""
    traj_map = _require(config, "trajectories")
    if not isinstance(traj_map, Mapping) or len(traj_map) < 2:
        raise ValueError("trajectories must map at least two agent names to paths")
    by_agent = {str(name): read_trajectories(str(path))
                for name, path in traj_map.items()}

    tasks = None
    if "suite" in config:
        suite = BenchSuite.load(str(config["suite"]))
        tasks = {t.task_id: t for t in suite.tasks}

    model_a = AnalyticModel.reference()
    model_b = (_perturbed_model(model_a, config["perturb"])
               if "perturb" in config else model_a)

    report = cross_replay_gap(by_agent, model_a, model_b, tasks=tasks)
    for name in report.agents:
        out(f"{name}: SR(A)={report.sr_a[name]:.3f} SR(B)={report.sr_b[name]:.3f} "
            f"delta={report.delta[name]:+.3f}")
    r_text = "undefined" if report.pearson_r is None else f"{report.pearson_r:.4f}"
    out(f"rank agreement (pearson r): {r_text}")
    for tier in Tier:
        gap = report.tier_gaps.get(tier)
        out(f"  {tier.value} gap: " + ("n/a" if gap is None else f"{gap:+.3f}"))
    if "output" in config:
        _write_json(report.to_dict(), str(config["output"]))
        out(f"wrote report to {config['output']}")
    return 0


# ---------------------------------------------------------------------------
# pool stats
# ---------------------------------------------------------------------------


def _cmd_pool_stats(config: Mapping, seed: int, out: Printer) -> int:
    """Config: pool (trajectory doc path), manifest (manifest path)."""
    pool = load_pool(str(_require(config, "pool")),
                     str(_require(config, "manifest")))
    out(f"pool: {len(pool)} trajectories, iteration {pool.iteration}, "
        f"dedup threshold {pool.threshold:g}")
    tiers = pool.tier_counts()
    for tier in Tier:
        out(f"  tier {tier.value}: {tiers[tier]}")
    for prov, n in sorted(pool.provenance_counts().items(),
                          key=lambda kv: kv[0].value):
        out(f"  provenance {prov.value}: {n}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_HANDLERS = {
    ("trace", "synth"): _cmd_trace_synth,
    ("trace", "validate"): _cmd_trace_validate,
    ("forge", "run"): _cmd_forge_run,
    ("bench", "eval"): _cmd_bench_eval,
    ("bench", "replay"): _cmd_bench_replay,
    ("pool", "stats"): _cmd_pool_stats,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicegym",
        description="network-slice agent gym: traces, pipelines, benchmarks")
    groups = parser.add_subparsers(dest="group", required=True)
    actions_by_group: dict[str, argparse._SubParsersAction] = {}
    for (group, action), handler in _HANDLERS.items():
        if group not in actions_by_group:
            gp = groups.add_parser(group)
            actions_by_group[group] = gp.add_subparsers(
                dest="action", required=True)
        sub = actions_by_group[group].add_parser(
            action, help=(handler.__doc__ or "").splitlines()[0])
        sub.add_argument("config", help="path to a JSON configuration file")
        sub.add_argument("--seed", type=int, default=0,
                         help="run seed (default 0)")
        sub.set_defaults(handler=handler)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.handler(config, args.seed, out=print)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
