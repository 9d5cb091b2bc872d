"""Run one closed-loop episode against a congested slice and narrate it.

A CONGESTION event lands on step 1. The MAPE-K agent needs two consecutive
clean readings before it will verify, so watch it re-observe after acting.

    python3 demos/drive_an_episode.py [seed]
"""

import sys

from slicegym.agents import MapeKAgent
from slicegym.dynamics import AnalyticModel
from slicegym.episode import SuccessRule, Task, Tier, compute_reward, run_episode
from slicegym.state import (
    DegradationEvent,
    DegradationKind,
    NetworkState,
    SliceType,
    default_sla_spec,
)
from slicegym.tools import Ok


def describe(result):
    if isinstance(result, Ok):
        value = result.value
        if isinstance(value, dict) and len(value) > 4:
            return "Ok({...})"
        return f"Ok({value!r})"
    return f"{result.code}: {result.message}"


def main() -> int:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 7
    task = Task(
        task_id="demo-congestion",
        intent_text="keep the eMBB slice inside its SLA through the burst",
        tier=Tier.L2,
        initial_state=NetworkState(SliceType.EMBB, 20.0, 5.0, 0.01, 80.0, 0.3),
        success_rule=SuccessRule(
            "sla_within", bounds=default_sla_spec().for_slice(SliceType.EMBB)),
        reference_length=5,
        step_budget=16,
        degradations=(DegradationEvent(DegradationKind.CONGESTION, 0, 6, 0.9),),
    )

    model = AnalyticModel.reference()
    traj = run_episode(MapeKAgent(), model, task, seed)

    print(f"task: {task.intent_text}")
    print(f"seed {seed}, budget {task.step_budget}\n")
    for e in traj.entries:
        fault = f"  [{e.degradation_active.kind.value}]" if e.degradation_active else ""
        args = ", ".join("{...}" if isinstance(a, dict) else repr(a)
                         for a in e.call.args)
        print(f"step {e.step_index}: {e.call.name}({args}){fault}")
        print(f"        latency {e.state_after.latency_ms:7.2f} ms   "
              f"throughput {e.state_after.throughput_mbps:6.2f} Mbps   "
              f"-> {describe(e.result)}")

    reward = compute_reward(traj)
    print(f"\noutcome: {traj.outcome.value} in {len(traj.entries)} steps")
    print(f"reward: format {reward.r_format:+.2f}, correct {reward.r_correct:+.2f}, "
          f"total {reward.total:+.2f}")
    return 0 if traj.outcome.value == "SUCCESS" else 1


if __name__ == "__main__":
    sys.exit(main())
