"""Closed-loop gym for network-management agents.

A typed tool catalog over a six-dimensional slice state, an analytic
transition model, an execution-verified trajectory synthesis pipeline, a
tiered benchmark harness with rule-based baselines, trace I/O, and an HTTP
service wrapping all of it. Entry points:

    build_catalog()          the 42-tool registry
    AnalyticModel.reference() the packaged transition model
    run_episode / replay     closed-loop execution
    run_iterations           synthesis pipeline driver
    generate_suite / evaluate benchmark harness
    service.create_app       HTTP facade
"""

from .state import (
    SliceType,
    NetworkState,
    SlaBounds,
    SlaSpec,
    DegradationKind,
    DegradationEvent,
    UavState,
    FleetState,
    HistoryEntry,
    METRIC_DIMENSIONS,
    sla_violations,
    validate_state,
    default_sla_spec,
    default_fleet,
)
from .tools import (
    EffectClass,
    ToolSignature,
    ToolCall,
    Ok,
    ToolError,
    CallRejection,
    REJECTION_CODES,
    build_catalog,
    validate_call,
    effect_of,
    sample_call,
    export_schema,
    export_domain_schemas,
)
from .dynamics import (
    SliceBaseline,
    KindMultipliers,
    AnalyticModelParams,
    TransitionOutput,
    AnalyticModel,
    RemoteTransitionModel,
    SEMANTIC_ERROR_CODES,
    RESOLUTION_MAP,
    calibrate,
    load_params,
    save_params,
)
from .episode import (
    Outcome,
    Provenance,
    Tier,
    tier_for_length,
    DEFAULT_STEP_BUDGETS,
    SuccessRule,
    rule_holds,
    Task,
    Trajectory,
    ScriptedAgent,
    step_once,
    run_episode,
    replay,
    compute_reward,
)
from .traceio import (
    FlowTraceRecord,
    TraceFormatError,
    ScenarioConfig,
    synth_trace,
    parse_trace,
    format_trace,
    read_trace,
    write_trace,
    write_trajectories,
    read_trajectories,
)
from .agents import (
    ThresholdRuleConfig,
    ThresholdRuleAgent,
    MapeKAgent,
    RemoteAgent,
    load_mapek_table,
)
from .synthesis import (
    rouge_l,
    SeedPool,
    TemplateGenerator,
    TraceAnnotator,
    annotate_seeds,
    detect_decision_points,
    expand,
    verify_execute,
    dedup_and_grow,
    run_iterations,
    save_pool,
    load_pool,
)
from .bench import (
    BenchSuite,
    EvalReport,
    evaluate,
    generate_suite,
    cross_replay_gap,
    curate_exclude_easy,
    leakage_filter,
    separability_probe,
    frontier_select,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # state
    "SliceType", "NetworkState", "SlaBounds", "SlaSpec", "DegradationKind",
    "DegradationEvent", "UavState", "FleetState", "HistoryEntry",
    "METRIC_DIMENSIONS", "sla_violations", "validate_state",
    "default_sla_spec", "default_fleet",
    # tools
    "EffectClass", "ToolSignature", "ToolCall", "Ok", "ToolError",
    "CallRejection", "REJECTION_CODES", "build_catalog", "validate_call",
    "effect_of", "sample_call", "export_schema", "export_domain_schemas",
    # dynamics
    "SliceBaseline", "KindMultipliers", "AnalyticModelParams",
    "TransitionOutput", "AnalyticModel", "RemoteTransitionModel",
    "SEMANTIC_ERROR_CODES", "RESOLUTION_MAP", "calibrate", "load_params",
    "save_params",
    # episodes
    "Outcome", "Provenance", "Tier", "tier_for_length",
    "DEFAULT_STEP_BUDGETS", "SuccessRule", "rule_holds", "Task", "Trajectory",
    "ScriptedAgent", "step_once", "run_episode", "replay", "compute_reward",
    # trace and trajectory I/O
    "FlowTraceRecord", "TraceFormatError", "ScenarioConfig", "synth_trace",
    "parse_trace", "format_trace", "read_trace", "write_trace",
    "write_trajectories", "read_trajectories",
    # agents
    "ThresholdRuleConfig", "ThresholdRuleAgent", "MapeKAgent", "RemoteAgent",
    "load_mapek_table",
    # synthesis
    "rouge_l", "SeedPool", "TemplateGenerator", "TraceAnnotator",
    "annotate_seeds", "detect_decision_points", "expand", "verify_execute",
    "dedup_and_grow", "run_iterations", "save_pool", "load_pool",
    # benchmark
    "BenchSuite", "EvalReport", "evaluate", "generate_suite",
    "cross_replay_gap", "curate_exclude_easy", "leakage_filter",
    "separability_probe", "frontier_select",
]
