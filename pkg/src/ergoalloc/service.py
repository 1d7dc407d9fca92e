"""HTTP surface for driving sessions from the operator console.

Plain JSON request/response plus one server-sent-event stream per session.
Every schema carries an explicit `v` field.  Mutations to one session are
serialized through a per-session lock; reads return immutable snapshots, and
the event stream fans out the append-only log in order.
"""
from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .aog import GraphError, graph_from_dict
from .calibration import CalibrationError, models_from_dict
from .ergo import (
    ErgoError,
    WearVector,
    angle_trace_from_rows,
    band_table_from_dict,
    config_from_dict,
    config_to_dict,
    score_trace_from_dict,
)
from .planner import PlanningError, plan_to_dict
from .session import (
    CompletionEvidence,
    SessionError,
    SessionState,
    complete_action,
    export_log,
    override,
    start_session,
    suggest_next,
)

API_VERSION = 1


class CreateSessionRequest(BaseModel):
    v: int = API_VERSION
    session_id: Optional[str] = None
    graph: dict
    calibration: dict
    config: Optional[dict] = None
    bands: Optional[dict] = None
    initial_wear: dict
    robot_durations: Optional[dict] = None
    wall_clock: bool = False  # live operation: durations default to elapsed time


class CompleteRequest(BaseModel):
    v: int = API_VERSION
    action: str
    worker: str
    duration_s: Optional[float] = None
    angle_trace: Optional[list] = None  # rows of [t, shoulder, elbow, wrist, trunk, neck]
    score_trace: Optional[dict] = None


class OverrideRequest(BaseModel):
    v: int = API_VERSION
    action: str
    worker: str


@dataclass
class SessionRecord:
    state: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list = field(default_factory=list)


class SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._records: dict[str, SessionRecord] = {}
        self._counter = 0

    def create(self, state: SessionState, session_id: str | None) -> str:
        with self._lock:
            if session_id is None:
                self._counter += 1
                session_id = f"s-{self._counter:04d}"
            if session_id in self._records:
                raise SessionError(f"session {session_id!r} already exists")
            self._records[session_id] = SessionRecord(state=state)
            return session_id

    def get(self, session_id: str) -> SessionRecord:
        with self._lock:
            rec = self._records.get(session_id)
        if rec is None:
            raise KeyError(session_id)
        return rec

    def delete(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._records:
                raise KeyError(session_id)
            del self._records[session_id]

    def ids(self) -> list:
        with self._lock:
            return sorted(self._records)


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message, "details": details}},
    )


def _event_dict(event) -> dict:
    return {"v": API_VERSION, "t": event.t, "kind": event.kind, "payload": event.payload}


def state_body(session_id: str, state: SessionState) -> dict:
    suggestion = None
    if state.pending is not None:
        suggestion = {"action": state.pending[0], "worker": state.pending[1]}
    return {
        "v": API_VERSION,
        "session_id": session_id,
        "complete": state.is_complete,
        "clock": state.clock,
        "wear": state.wear.as_dict(),
        "wear_t": state.wear.t,
        "solved": sorted(state.progress.solved),
        "history": [
            {"action": h.action, "worker": h.worker, "t": h.t} for h in state.progress.history
        ],
        "suggestion": suggestion,
        "plan": plan_to_dict(state.last_plan) if state.last_plan is not None else None,
        "config": config_to_dict(state.config),
        "workers": [{"id": w.id, "kind": w.kind} for w in state.graph.workers],
        "nodes": [
            {"id": n.id, "pieces": sorted(n.pieces)} for n in state.graph.nodes.values()
        ],
    }


def _publish(rec: SessionRecord, new_state: SessionState) -> None:
    fresh = new_state.events[len(rec.state.events):]
    rec.state = new_state
    for q in rec.subscribers:
        for event in fresh:
            q.put(event)


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="ergoalloc service", version="0.1.0")
    app.state.store = store if store is not None else SessionStore()

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        code = {
            GraphError: "graph-error",
            PlanningError: "planning-error",
            ErgoError: "ergo-error",
            CalibrationError: "calibration-error",
            SessionError: "session-error",
        }.get(type(exc), "bad-request")
        return _error(400, code, str(exc))

    def _get_record(session_id: str) -> SessionRecord:
        return app.state.store.get(session_id)

    @app.post("/v1/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        if req.v != API_VERSION:
            return _error(400, "version-mismatch", f"expected v={API_VERSION}, got {req.v}")
        graph = graph_from_dict(req.graph)
        models = models_from_dict(req.calibration.get("actions", req.calibration))
        config = config_from_dict(req.config or {})
        bands = band_table_from_dict(req.bands) if req.bands else None
        wear = WearVector.from_mapping(req.initial_wear)
        state = start_session(
            graph=graph,
            models=models,
            config=config,
            initial_wear=wear,
            robot_durations=req.robot_durations or {},
            band_table=bands,
            wall_clock=req.wall_clock,
        )
        if not state.is_complete:
            _, state = suggest_next(state)
        session_id = app.state.store.create(state, req.session_id)
        return state_body(session_id, state)

    @app.get("/v1/sessions")
    def list_sessions():
        return {"v": API_VERSION, "sessions": app.state.store.ids()}

    @app.get("/v1/sessions/{session_id}")
    def get_state(session_id: str):
        try:
            rec = _get_record(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        return state_body(session_id, rec.state)

    @app.delete("/v1/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        try:
            app.state.store.delete(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")

    @app.post("/v1/sessions/{session_id}/complete")
    def post_completion(session_id: str, req: CompleteRequest):
        if req.v != API_VERSION:
            return _error(400, "version-mismatch", f"expected v={API_VERSION}, got {req.v}")
        try:
            rec = _get_record(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        with rec.lock:
            evidence = None
            if req.angle_trace is not None:
                evidence = CompletionEvidence(
                    angle_trace=angle_trace_from_rows(req.angle_trace),
                    duration_s=req.duration_s,
                )
            elif req.score_trace is not None:
                evidence = CompletionEvidence(
                    score_trace=score_trace_from_dict(req.score_trace),
                    duration_s=req.duration_s,
                )
            elif req.duration_s is not None:
                evidence = CompletionEvidence(duration_s=req.duration_s)
            try:
                state = complete_action(rec.state, req.action, req.worker, evidence)
            except GraphError as exc:
                return _error(409, "not-enabled", str(exc))
            if not state.is_complete:
                _, state = suggest_next(state)
            _publish(rec, state)
            return state_body(session_id, state)

    @app.post("/v1/sessions/{session_id}/override")
    def post_override(session_id: str, req: OverrideRequest):
        if req.v != API_VERSION:
            return _error(400, "version-mismatch", f"expected v={API_VERSION}, got {req.v}")
        try:
            rec = _get_record(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        with rec.lock:
            try:
                state = override(rec.state, req.action, req.worker)
            except SessionError as exc:
                return _error(409, "not-enabled", str(exc))
            _publish(rec, state)
            return state_body(session_id, state)

    @app.get("/v1/sessions/{session_id}/log")
    def get_log(session_id: str):
        try:
            rec = _get_record(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        return StreamingResponse(iter([export_log(rec.state)]), media_type="application/x-ndjson")

    @app.get("/v1/sessions/{session_id}/events")
    def event_stream(session_id: str, replay: int = 0):
        """SSE stream of session events in log order.

        `replay=1` closes after the backlog, for log-style consumers; the
        default keeps the stream open for live events.
        """
        try:
            rec = _get_record(session_id)
        except KeyError:
            return _error(404, "unknown-session", f"no session {session_id!r}")

        live_queue: queue.Queue | None = None
        with rec.lock:
            backlog = rec.state.events
            if not replay:
                live_queue = queue.Queue()
                rec.subscribers.append(live_queue)

        def generate():
            try:
                seq = 0
                for event in backlog:
                    yield f"id: {seq}\ndata: {json.dumps(_event_dict(event), sort_keys=True)}\n\n"
                    seq += 1
                if live_queue is None:
                    return
                while True:
                    try:
                        event = live_queue.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"id: {seq}\ndata: {json.dumps(_event_dict(event), sort_keys=True)}\n\n"
                    seq += 1
            finally:
                if live_queue is not None:
                    with rec.lock:
                        if live_queue in rec.subscribers:
                            rec.subscribers.remove(live_queue)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app


def serve(host: str = "127.0.0.1", port: int = 8765) -> None:
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
