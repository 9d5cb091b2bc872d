"""Generate a small holdout suite and race the two rule-based baselines.

    python3 demos/benchmark_baselines.py

The suite comes from holdout topology seeds only (51+), so nothing here
overlaps the training range. Expect the MAPE-K loop to beat the one-shot
threshold rule on L2 and L3, and both to fall off as tiers get longer.
"""

import sys

from slicegym.agents import MapeKAgent, ThresholdRuleAgent
from slicegym.bench import evaluate, format_report_table, generate_suite
from slicegym.dynamics import AnalyticModel
from slicegym.episode import Tier


def main() -> int:
    suite = generate_suite("demo-holdout", seed_range=(51, 56),
                           duration_s=120, seed=5)
    by_tier = suite.by_tier()
    mix = ", ".join(f"{t.value} {len(by_tier[t])}" for t in Tier)
    print(f"suite {suite.suite_id}: {len(suite)} tasks ({mix}), "
          f"topology seeds {suite.seed_range[0]}..{suite.seed_range[1]}\n")

    model = AnalyticModel.reference()
    reports = [
        evaluate(ThresholdRuleAgent(), suite, model, seed=2,
                 agent_name="threshold-rule"),
        evaluate(MapeKAgent(), suite, model, seed=2, agent_name="mapek"),
    ]
    print(format_report_table(reports))

    threshold, mapek = reports
    if mapek.sr >= threshold.sr:
        print("\nordering holds: SR(mapek) >= SR(threshold-rule)")
    else:
        print("\nunexpected: threshold rule won this draw")
    return 0


if __name__ == "__main__":
    sys.exit(main())
