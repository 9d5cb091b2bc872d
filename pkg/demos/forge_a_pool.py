"""Grow a trajectory pool from synthetic traces, end to end.

Synthesizes three faulty flow traces, annotates their decision points into
execution-verified seed trajectories, then grows the pool for two
iterations with the template generator. Prints the accounting at each
stage and leaves pool.jsonl / manifest.json in demo_output/.

    python3 demos/forge_a_pool.py
"""

import pathlib
import sys

from slicegym.dynamics import AnalyticModel
from slicegym.episode import Tier
from slicegym.synthesis import (
    SeedPool,
    TemplateGenerator,
    annotate_seeds,
    run_iterations,
    save_pool,
)
from slicegym.traceio import ScenarioConfig, synth_trace


def main() -> int:
    scenarios = [
        ScenarioConfig(3, 120, failure_pattern="midlife_congestion"),
        ScenarioConfig(5, 120, failure_pattern="edge_squeeze"),
        ScenarioConfig(8, 120, failure_pattern="double_fault"),
    ]
    dataset = [(cfg, synth_trace(cfg, 400 + i)) for i, cfg in enumerate(scenarios)]
    for cfg, records in dataset:
        print(f"trace seed {cfg.topology_seed}: {len(records)} records, "
              f"pattern {cfg.failure_pattern}")

    seeds = annotate_seeds(dataset)
    print(f"\nannotated {len(seeds)} seed trajectories from decision points")

    pool = SeedPool()
    for traj in seeds:
        pool.admit(traj)
    print(f"pool after seeding: {len(pool)} members "
          f"(near-duplicates dropped: {len(seeds) - len(pool)})")

    model = AnalyticModel.reference()
    pool, stats = run_iterations(
        pool, TemplateGenerator(), model, K=2, batch_size=25, seed=11)

    print()
    for it in stats.per_iteration:
        rejected = sum(it.rejections.values())
        print(f"iteration {it.iteration}: proposed {it.proposed}, "
              f"accepted {it.accepted} "
              f"(golden {it.golden}, recovery {it.error_recovery}), "
              f"rejected {rejected} -> pool {it.pool_size_after}")
        for reason, count in sorted(it.rejections.items()):
            print(f"    {reason}: {count}")

    tiers = pool.tier_counts()
    print(f"\nfinal pool: {len(pool)} trajectories, "
          + ", ".join(f"{t.value} {tiers[t]}" for t in Tier))

    out = pathlib.Path(__file__).parent / "demo_output"
    out.mkdir(exist_ok=True)
    save_pool(pool, str(out / "pool.jsonl"), str(out / "manifest.json"),
              run_info={"seed": 11, "iterations": 2})
    print(f"saved to {out / 'pool.jsonl'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
