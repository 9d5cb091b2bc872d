"""HTTP service: environment sessions, benchmark runs, and console endpoints.

Sessions wrap the same step_once core the episode runner and replay use, so a
call sequence driven over the wire produces a bit-identical trajectory to the
same sequence driven in-process. Payloads are plain JSON documents with
explicit schema versions; errors are structured and distinct from transport
failures.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .agents import MapeKAgent, ThresholdRuleAgent
from .bench import BenchSuite, EvalReport, evaluate, format_report_table
from .dynamics import AnalyticModel
from .episode import (
    HistoryEntry,
    Outcome,
    Provenance,
    Task,
    Trajectory,
    active_event,
    is_confirming,
    rule_holds,
    step_once,
)
from .state import (
    DegradationEvent,
    DegradationKind,
    FleetState,
    NetworkState,
    default_fleet,
    default_sla_spec,
    sla_violations,
    validate_state,
)
from .synthesis import detect_decision_points
from .tools import ToolCall, build_catalog, export_domain_schemas, export_schema, result_to_dict
from .traceio import TraceFormatError, parse_trace, trajectory_to_lines

__all__ = ["ServiceConfig", "create_app", "create_model_app", "main"]

DEFAULT_BIND = "127.0.0.1:8351"


@dataclass(frozen=True)
class ServiceConfig:
    """Operational knobs; see docs/wire_protocol.md for the endpoint contract."""

    idle_timeout_s: float = 1800.0
    worker_pool_size: int = 4

    @classmethod
    def from_file(cls, path: str) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(
            idle_timeout_s=float(doc.get("idle_timeout_s", 1800.0)),
            worker_pool_size=int(doc.get("worker_pool_size", 4)),
        )


@dataclass
class _Session:
    session_id: str
    model: AnalyticModel
    state: NetworkState
    fleet: FleetState
    seed: int
    intent_text: str = ""
    task: Optional[Task] = None
    entries: list = dc_field(default_factory=list)
    schedule: list = dc_field(default_factory=list)
    cleared: set = dc_field(default_factory=set)
    success: bool = False
    last_touched: float = dc_field(default_factory=time.monotonic)
    lock: threading.Lock = dc_field(default_factory=threading.Lock)

    def outcome(self) -> Outcome:
        if self.success:
            return Outcome.SUCCESS
        if self.task is not None and len(self.entries) >= self.task.step_budget:
            return Outcome.BUDGET_EXHAUSTED
        return Outcome.FAILURE

    def trajectory(self) -> Trajectory:
        return Trajectory(
            task_id=self.task.task_id if self.task else self.session_id,
            entries=tuple(self.entries),
            outcome=self.outcome(),
            provenance=Provenance.EVAL,
            intent_text=self.intent_text,
            seed=self.seed,
        )


def _event_doc(event: Optional[DegradationEvent]) -> Optional[dict]:
    return event.to_dict() if event is not None else None


def create_app(
    config: Optional[ServiceConfig] = None,
    model: Optional[AnalyticModel] = None,
) -> FastAPI:
    cfg = config or ServiceConfig()
    base_model = model or AnalyticModel.reference()
    registry = build_catalog()
    sla = default_sla_spec()

    app = FastAPI(title="network agent gym", version="1")
    # browser consoles are served from a separate origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, _Session] = {}
    suites: dict[str, BenchSuite] = {}
    reports: dict[str, Future] = {}
    registry_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=cfg.worker_pool_size)

    def sweep_idle() -> None:
        now = time.monotonic()
        with registry_lock:
            stale = [
                sid for sid, s in sessions.items()
                if now - s.last_touched > cfg.idle_timeout_s
            ]
            for sid in stale:
                del sessions[sid]

    def get_session(session_id: str) -> _Session:
        sweep_idle()
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        session.last_touched = time.monotonic()
        return session

    def find_task(task_id: str) -> Optional[Task]:
        with registry_lock:
            for suite in suites.values():
                for task in suite.tasks:
                    if task.task_id == task_id:
                        return task
        return None

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions")
    def create_session(payload: dict = Body(...)) -> dict:
        sweep_idle()
        seed = int(payload.get("seed", 0))
        task: Optional[Task] = None
        schedule: list[DegradationEvent] = []
        intent = str(payload.get("intent_text", ""))

        if "task_id" in payload:
            task = find_task(str(payload["task_id"]))
            if task is None:
                raise HTTPException(status_code=404, detail="unknown task id")
            state = task.initial_state
            fleet = task.initial_fleet
            schedule = list(task.degradations)
            intent = task.intent_text
        elif "initial_state" in payload:
            try:
                state = NetworkState.from_dict(payload["initial_state"])
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=f"bad initial state: {exc}")
            problem = validate_state(state)
            if problem is not None:
                raise HTTPException(status_code=422, detail=problem)
            fleet = default_fleet()
        else:
            raise HTTPException(
                status_code=422, detail="payload needs task_id or initial_state")

        session = _Session(
            session_id=uuid.uuid4().hex[:12],
            model=base_model.reseeded(seed),
            state=state,
            fleet=fleet,
            seed=seed,
            intent_text=intent,
            task=task,
            schedule=schedule,
        )
        with registry_lock:
            sessions[session.session_id] = session
        return {
            "schema_version": 1,
            "session_id": session.session_id,
            "state": state.to_dict(),
            "step_count": 0,
            "task_id": task.task_id if task else None,
        }

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str) -> dict:
        session = get_session(session_id)
        _, event = active_event(session.schedule, len(session.entries), session.cleared)
        return {
            "schema_version": 1,
            "session_id": session.session_id,
            "state": session.state.to_dict(),
            "fleet": session.fleet.to_dict(),
            "violations": sla_violations(session.state, sla),
            "active_degradation": _event_doc(event),
            "step_count": len(session.entries),
            "outcome_so_far": session.outcome().value,
        }

    @app.post("/sessions/{session_id}/call")
    def session_call(session_id: str, payload: dict = Body(...)) -> dict:
        session = get_session(session_id)
        tool = payload.get("tool")
        args = payload.get("args", [])
        if not isinstance(tool, str) or not isinstance(args, list):
            raise HTTPException(status_code=422, detail="payload needs tool and args")
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a step is already in flight")
        try:
            call = ToolCall(tool, tuple(args))
            idx, event = active_event(
                session.schedule, len(session.entries), session.cleared)
            entry, next_state, next_fleet, resolved = step_once(
                session.model, registry, session.state, session.fleet,
                call, event, session.entries,
            )
            session.entries.append(entry)
            session.state = next_state
            session.fleet = next_fleet
            if resolved and idx is not None:
                session.cleared.add(idx)
            if is_confirming(call.name, entry.result):
                if session.task is None or rule_holds(
                        session.task.success_rule, next_state, session.entries):
                    session.success = True
        finally:
            session.lock.release()

        return {
            "schema_version": 1,
            "step_index": entry.step_index,
            "result": result_to_dict(entry.result),
            "state": session.state.to_dict(),
            "violations": sla_violations(session.state, sla),
            "degradation_active": _event_doc(entry.degradation_active),
            "step_count": len(session.entries),
        }

    @app.post("/sessions/{session_id}/degradation")
    def inject_degradation(session_id: str, payload: dict = Body(...)) -> dict:
        session = get_session(session_id)
        try:
            event = DegradationEvent(
                kind=DegradationKind(str(payload["kind"])),
                onset_step=int(payload.get("onset_step", len(session.entries))),
                duration_steps=int(payload.get("duration_steps", 5)),
                severity=float(payload.get("severity", 0.8)),
            )
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad degradation: {exc}")
        with session.lock:
            session.schedule.append(event)
        return {"schema_version": 1, "acknowledged": True, "event": event.to_dict()}

    @app.get("/sessions/{session_id}/trajectory")
    def session_trajectory(session_id: str) -> PlainTextResponse:
        session = get_session(session_id)
        lines = trajectory_to_lines(session.trajectory())
        return PlainTextResponse("\n".join(lines) + "\n")

    # -- catalog and annotation --------------------------------------------

    @app.get("/catalog")
    def catalog() -> dict:
        return {
            "schema_version": 1,
            "tools": export_schema(registry),
            "domains": export_domain_schemas(),
        }

    @app.post("/annotate")
    def annotate(payload: dict = Body(...)) -> dict:
        text = payload.get("trace_csv")
        if not isinstance(text, str):
            raise HTTPException(status_code=422, detail="payload needs trace_csv")
        try:
            records = parse_trace(text)
        except TraceFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        points = detect_decision_points(records, sla)
        return {
            "schema_version": 1,
            "points": [
                {"index": p.index, "time_s": p.time_s, "kind": p.kind,
                 "detail": p.detail}
                for p in points
            ],
        }

    # -- suites and benchmarks ---------------------------------------------

    @app.post("/suites")
    def register_suite(payload: dict = Body(...)) -> dict:
        if payload.get("kind") != "suite" or payload.get("schema_version") != 1:
            raise HTTPException(status_code=422, detail="not a version-1 suite document")
        try:
            tasks = tuple(Task.from_dict(t) for t in payload["tasks"])
            lo, hi = payload["seed_range"]
            suite = BenchSuite(
                suite_id=str(payload["suite_id"]),
                tasks=tasks,
                seed_range=(int(lo), int(hi)),
                holdout=bool(payload.get("holdout", True)),
            )
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"bad suite document: {exc}")
        with registry_lock:
            suites[suite.suite_id] = suite
        return {"schema_version": 1, "suite_id": suite.suite_id,
                "task_count": len(suite)}

    _AGENTS = {
        "threshold-rule": ThresholdRuleAgent,
        "mapek": MapeKAgent,
    }

    @app.post("/benchmarks")
    def run_benchmark(payload: dict = Body(...)) -> dict:
        suite_id = payload.get("suite_id")
        descriptor = payload.get("agent")
        seed = int(payload.get("seed", 0))
        with registry_lock:
            suite = suites.get(suite_id)
        if suite is None:
            raise HTTPException(status_code=404, detail="unknown suite id")
        factory = _AGENTS.get(descriptor)
        if factory is None:
            raise HTTPException(
                status_code=422,
                detail=f"unknown agent descriptor; expected one of {sorted(_AGENTS)}")
        report_id = uuid.uuid4().hex[:12]

        def job() -> EvalReport:
            return evaluate(factory(), suite, base_model, seed,
                            agent_name=descriptor)

        with registry_lock:
            reports[report_id] = executor.submit(job)
        return {"schema_version": 1, "report_id": report_id}

    @app.get("/reports/{report_id}")
    def get_report(report_id: str) -> dict:
        with registry_lock:
            future = reports.get(report_id)
        if future is None:
            raise HTTPException(status_code=404, detail="unknown report id")
        if not future.done():
            return {"schema_version": 1, "status": "running"}
        try:
            report = future.result()
        except Exception as exc:
            return {"schema_version": 1, "status": "failed", "error": str(exc)}
        return {
            "schema_version": 1,
            "status": "done",
            "report": report.to_dict(),
            "table": format_report_table([report]),
        }

    return app


# ---------------------------------------------------------------------------
# Transition-model server (counterpart of dynamics.RemoteTransitionModel)
# ---------------------------------------------------------------------------


class _PlaceholderEntry:
    """Stands in for history the step wire format does not carry."""

    __slots__ = ("call",)

    def __init__(self):
        self.call = ToolCall("", ())


def create_model_app(model: Optional[AnalyticModel] = None) -> FastAPI:
    """Serve a transition model over the step wire format.

    The wire carries only the step index, not the history, so answers that
    inspect recent calls (check_handover_status) see an empty window.
    """
    m = model or AnalyticModel.reference()
    app = FastAPI(title="transition model", version="1")

    @app.post("/step")
    def step(payload: dict = Body(...)) -> dict:
        try:
            state = NetworkState.from_dict(payload["state"])
            fleet = FleetState.from_dict(payload["fleet"])
            call = ToolCall(payload["call"]["tool"], tuple(payload["call"]["args"]))
            deg = payload.get("degradation")
            event = DegradationEvent.from_dict(deg) if deg else None
            step_index = int(payload.get("step_index", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad step payload: {exc}")
        history = [_PlaceholderEntry() for _ in range(step_index)]
        try:
            out = m.step(state, fleet, call, event, history=history)
        except KeyError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "schema_version": 1,
            "next_state": out.next_state.to_dict(),
            "next_fleet": out.next_fleet.to_dict(),
            "result": result_to_dict(out.result),
            "annotation": out.annotation,
        }

    return app


def main() -> None:
    """Run the service; bind address from SLICEGYM_BIND, config from argv."""
    import sys

    import uvicorn

    config = ServiceConfig.from_file(sys.argv[1]) if len(sys.argv) > 1 else ServiceConfig()
    bind = os.environ.get("SLICEGYM_BIND", DEFAULT_BIND)
    host, _, port = bind.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1",
                port=int(port or 8351))


if __name__ == "__main__":
    main()
