"""Synthesize a double-fault flow trace and walk its decision points.

    python3 demos/tour_a_trace.py
"""

import sys

from slicegym.synthesis import detect_decision_points
from slicegym.traceio import ScenarioConfig, synth_trace


def main() -> int:
    cfg = ScenarioConfig(topology_seed=9, duration_s=200,
                         failure_pattern="double_fault")
    print(f"scenario: topology seed {cfg.topology_seed}, {cfg.duration_s}s, "
          f"pattern {cfg.failure_pattern}")
    for kind, start, end, severity in cfg.degradation_windows():
        print(f"  window {kind.value} [{start}s, {end}s) severity {severity:g}")

    records = synth_trace(cfg, seed=23)
    hot = [r for r in records if r.degradation_flag]
    print(f"\n{len(records)} records, {len(hot)} inside fault windows")

    points = detect_decision_points(records)
    print(f"{len(points)} decision points:")
    for p in points:
        print(f"  t={p.time_s:6.1f}s row {p.index:3d} {p.kind:18s} {p.detail}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
