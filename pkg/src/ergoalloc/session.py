"""Online allocation loop: recost, replan, suggest, execute, repeat.

A session owns the graph, the wear state of the single human worker, one
prediction model per action, and an append-only event log.  After every
completed action the human hyper-arcs are re-priced from the current wear and
the graph is re-searched, so the suggested worker tracks the human's actual
condition.  Session states are values: every operation returns a new state.

The event log is self-contained (the start event embeds the full setup), so
replaying a log reproduces the final state bit-exactly.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

from . import aog as _aog
from .aog import AOG, ProgressState, apply_action, graph_from_dict, graph_to_dict, initial_state, validate
from .calibration import models_from_dict, models_to_dict
from .ergo import (
    JOINTS,
    ActionModel,
    AngleTrace,
    CostConfig,
    RulaBandTable,
    RulaScoreTrace,
    WearVector,
    band_table_from_dict,
    band_table_to_dict,
    config_from_dict,
    config_to_dict,
    default_band_table,
    human_cost,
    integrate_wear,
    predict,
    recover_wear,
    score_angle_trace,
    score_trace_from_dict,
    score_trace_to_dict,
)
from .planner import PlanTree, next_action, optimal_plan, plan_to_dict, replan

LOG_VERSION = 1


class SessionError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    t: float
    kind: str  # start | suggestion | completion | override | wear
    payload: Mapping


@dataclass(frozen=True)
class Suggestion:
    action: str
    worker: str
    plan: PlanTree


@dataclass(frozen=True)
class CompletionEvidence:
    """What actually happened during an action.

    A trace (angles or scores) drives the wear update directly; without one
    the action's calibrated model is applied.  `duration_s` overrides the
    nominal duration when no trace fixes it.
    """

    angle_trace: AngleTrace | None = None
    score_trace: RulaScoreTrace | None = None
    duration_s: float | None = None

    @property
    def kind(self) -> str:
        if self.angle_trace is not None:
            return "angle_trace"
        if self.score_trace is not None:
            return "score_trace"
        return "model"


@dataclass(frozen=True)
class SessionState:
    graph: AOG
    models: Mapping[str, ActionModel]
    config: CostConfig
    band_table: RulaBandTable
    robot_durations: Mapping[str, float]
    wear: WearVector
    progress: ProgressState
    clock: float
    events: tuple
    pending: tuple | None = None  # (action, worker) of the live suggestion
    last_plan: PlanTree | None = None
    # live operation: completions without an explicit duration take the real
    # elapsed time instead of the nominal one; logs always record the realized
    # duration, so replays stay deterministic on the logical clock
    wall_clock: bool = False
    now: Callable[[], float] = field(default=time.monotonic, repr=False, compare=False)
    wall_anchor: float = 0.0

    @property
    def is_complete(self) -> bool:
        return _aog.is_complete(self.graph, self.progress)


def _setup_payload(session: SessionState) -> dict:
    return {
        "graph": graph_to_dict(session.graph),
        "models": models_to_dict(session.models),
        "config": config_to_dict(session.config),
        "bands": band_table_to_dict(session.band_table),
        "robot_durations": dict(sorted(session.robot_durations.items())),
        "initial_wear": {"values": list(session.wear.values), "t": session.wear.t},
    }


def start_session(
    graph: AOG,
    models: Mapping[str, ActionModel],
    config: CostConfig,
    initial_wear: WearVector,
    robot_durations: Mapping[str, float] | None = None,
    band_table: RulaBandTable | None = None,
    wall_clock: bool = False,
    now: Callable[[], float] = time.monotonic,
) -> SessionState:
    """Open a session at t = 0 with every leaf built and nothing assembled."""
    violations = validate(graph)
    if violations:
        raise SessionError(
            f"graph is invalid: {violations[0].rule} on {violations[0].subject}"
            + (f" (+{len(violations) - 1} more)" if len(violations) > 1 else "")
        )
    humans = graph.human_worker_ids()
    if len(humans) != 1:
        raise SessionError(f"exactly one human worker is required, found {len(humans)}")
    missing = sorted(a for a in graph.actions if a not in models)
    if missing:
        raise SessionError(f"missing action models for: {missing}")
    for action, model in models.items():
        if not isinstance(model, ActionModel):
            raise SessionError(f"model for {action!r} is not an ActionModel")

    session = SessionState(
        graph=graph,
        models=dict(models),
        config=config,
        band_table=band_table if band_table is not None else default_band_table(),
        robot_durations=dict(robot_durations or {}),
        wear=WearVector(values=initial_wear.values, t=0.0),
        progress=initial_state(graph),
        clock=0.0,
        events=(),
        wall_clock=wall_clock,
        now=now,
        wall_anchor=now() if wall_clock else 0.0,
    )
    start_event = Event(t=0.0, kind="start", payload=_setup_payload(session))
    return replace(session, events=(start_event,))


def recost(session: SessionState) -> dict:
    """Fresh cost per hyper-arc: humans pay the predicted risk-band sum,
    robots pay the fixed robot cost."""
    costs: dict[str, float] = {}
    human_by_action: dict[str, float] = {}
    for arc in session.graph.arcs.values():
        kind = session.graph.worker(arc.worker).kind
        if kind == "robot":
            costs[arc.id] = session.config.robot_cost
        else:
            if arc.action not in human_by_action:
                model = session.models.get(arc.action)
                if model is None:
                    raise SessionError(f"no model for action {arc.action!r}")
                human_by_action[arc.action] = human_cost(
                    predict(session.wear, model), session.config
                )
            costs[arc.id] = human_by_action[arc.action]
    return costs


def suggest_next(session: SessionState) -> tuple:
    """Recost, replan, and pick the next (action, worker); logs the suggestion."""
    if session.is_complete:
        raise SessionError("assembly is already complete")
    costs = recost(session)
    plan = replan(session.graph, session.progress, costs)
    action, worker = next_action(plan, session.progress)
    suggestion = Suggestion(action=action, worker=worker, plan=plan)
    event = Event(
        t=session.clock,
        kind="suggestion",
        payload={"action": action, "worker": worker, "plan": plan_to_dict(plan)},
    )
    new = replace(
        session,
        events=session.events + (event,),
        pending=(action, worker),
        last_plan=plan,
    )
    return suggestion, new


def _resolve_duration(session: SessionState, action: str, worker_kind: str,
                      evidence: CompletionEvidence | None) -> float:
    if evidence is not None and evidence.duration_s is not None:
        d = float(evidence.duration_s)
    elif session.wall_clock:
        d = max(0.0, session.now() - session.wall_anchor - session.clock)
    elif worker_kind == "robot":
        d = float(session.robot_durations.get(action, session.models[action].duration_s))
    else:
        d = float(session.models[action].duration_s)
    if d < 0:
        raise SessionError(f"negative duration {d}")
    return d


def complete_action(
    session: SessionState,
    action: str,
    worker: str,
    evidence: CompletionEvidence | None = None,
) -> SessionState:
    """Advance progress and wear after an executed action.

    Human execution charges wear (from the evidence trace when present,
    otherwise through the action's model); robot execution lets the human
    rest, discharging every joint over the action duration.
    """
    worker_kind = session.graph.worker(worker).kind
    model = session.models.get(action)
    if model is None:
        raise SessionError(f"no model for action {action!r}")

    trace: RulaScoreTrace | None = None
    model_error = None
    if evidence is not None and evidence.angle_trace is not None:
        trace = score_angle_trace(evidence.angle_trace, session.band_table)
    elif evidence is not None and evidence.score_trace is not None:
        trace = evidence.score_trace

    if worker_kind == "human":
        if trace is not None:
            duration = trace.duration_s
            new_wear = integrate_wear(session.wear, trace, session.config.capacity).final(
                t0=session.wear.t
            )
            modeled = predict(session.wear, model)
            model_error = {
                j: new_wear[j] - modeled[j] for j in JOINTS
            }
        else:
            duration = _resolve_duration(session, action, worker_kind, evidence)
            new_wear = WearVector(
                values=predict(session.wear, model).values, t=session.wear.t + duration
            )
    else:
        duration = _resolve_duration(session, action, worker_kind, evidence)
        new_wear = recover_wear(session.wear, duration, session.config)

    new_progress = apply_action(
        session.progress, session.graph, action, worker, t=session.clock + duration
    )
    new_clock = session.clock + duration

    payload: dict = {
        "action": action,
        "worker": worker,
        "duration_s": duration,
        "evidence": evidence.kind if evidence is not None else "model",
    }
    if trace is not None:
        payload["score_trace"] = score_trace_to_dict(trace)
    if model_error is not None:
        payload["model_error"] = model_error
    completion = Event(t=new_clock, kind="completion", payload=payload)
    snapshot = Event(
        t=new_clock,
        kind="wear",
        payload={"values": list(new_wear.values), "t": new_wear.t},
    )
    return replace(
        session,
        wear=new_wear,
        progress=new_progress,
        clock=new_clock,
        events=session.events + (completion, snapshot),
        pending=None,
    )


def override(session: SessionState, action: str, worker: str) -> SessionState:
    """Replace the live suggestion with an operator-chosen enabled pair."""
    session.graph.worker(worker)
    enabled = {
        (a.action, a.worker) for a in session.graph.enabled_arcs(session.progress.solved)
    }
    if (action, worker) not in enabled:
        raise SessionError(f"({action!r}, {worker!r}) is not enabled")
    event = Event(
        t=session.clock,
        kind="override",
        payload={
            "action": action,
            "worker": worker,
            "replaced": list(session.pending) if session.pending else None,
        },
    )
    return replace(session, events=session.events + (event,), pending=(action, worker))


def offline_allocation(session: SessionState) -> tuple:
    """The one-shot assignment a non-adaptive planner would fix at t = 0,
    as (action, worker) pairs in action-id order."""
    if session.progress.history:
        raise SessionError("offline allocation requires a fresh session")
    costs = recost(session)
    plan = optimal_plan(session.graph, session.progress, costs)
    return tuple(sorted((s.action, s.worker) for s in plan.steps))


# ---------------------------------------------------------------------------
# event log


def export_log(session: SessionState) -> str:
    """Line-delimited event records; the start line embeds the whole setup."""
    lines = [
        json.dumps(
            {"v": LOG_VERSION, "t": e.t, "kind": e.kind, "payload": e.payload},
            sort_keys=True,
        )
        for e in session.events
    ]
    return "\n".join(lines) + "\n"


def replay_log(text: str) -> SessionState:
    """Re-execute an exported log from scratch.

    Wear snapshots are derived events and are skipped; they re-emerge from
    the replayed completions.
    """
    records = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec.get("v") != LOG_VERSION:
            raise SessionError(f"line {i + 1}: unsupported log version {rec.get('v')!r}")
        records.append(rec)
    if not records or records[0]["kind"] != "start":
        raise SessionError("log must begin with a start event")

    setup = records[0]["payload"]
    session = start_session(
        graph=graph_from_dict(setup["graph"]),
        models=models_from_dict(setup["models"]),
        config=config_from_dict(setup["config"]),
        initial_wear=WearVector(
            values=tuple(setup["initial_wear"]["values"]),
            t=float(setup["initial_wear"]["t"]),
        ),
        robot_durations=setup.get("robot_durations", {}),
        band_table=band_table_from_dict(setup["bands"]),
    )
    for rec in records[1:]:
        kind = rec["kind"]
        payload = rec["payload"]
        if kind == "suggestion":
            _, session = suggest_next(session)
        elif kind == "override":
            session = override(session, payload["action"], payload["worker"])
        elif kind == "completion":
            evidence = None
            if payload.get("score_trace") is not None:
                evidence = CompletionEvidence(
                    score_trace=score_trace_from_dict(payload["score_trace"])
                )
            else:
                evidence = CompletionEvidence(duration_s=payload["duration_s"])
            session = complete_action(session, payload["action"], payload["worker"], evidence)
        elif kind == "wear":
            continue
        else:
            raise SessionError(f"unknown event kind {kind!r}")
    return session


def snapshot_to_dict(session: SessionState) -> dict:
    """Versioned point-in-time snapshot restorable without re-running the log."""
    return {
        "v": LOG_VERSION,
        "setup": session.events[0].payload,
        "wear": {"values": list(session.wear.values), "t": session.wear.t},
        "solved": sorted(session.progress.solved),
        "history": [[h.action, h.worker, h.t] for h in session.progress.history],
        "clock": session.clock,
        "pending": list(session.pending) if session.pending else None,
        "events": [
            {"t": e.t, "kind": e.kind, "payload": e.payload} for e in session.events
        ],
    }


def session_from_snapshot(data: Mapping) -> SessionState:
    if data.get("v") != LOG_VERSION:
        raise SessionError(f"unsupported snapshot version {data.get('v')!r}")
    setup = data["setup"]
    return SessionState(
        graph=graph_from_dict(setup["graph"]),
        models=models_from_dict(setup["models"]),
        config=config_from_dict(setup["config"]),
        band_table=band_table_from_dict(setup["bands"]),
        robot_durations=dict(setup.get("robot_durations", {})),
        wear=WearVector(values=tuple(data["wear"]["values"]), t=float(data["wear"]["t"])),
        progress=ProgressState(
            solved=frozenset(data["solved"]),
            history=tuple(
                _aog.HistoryEntry(action=a, worker=w, t=float(t))
                for a, w, t in data["history"]
            ),
        ),
        clock=float(data["clock"]),
        events=tuple(
            Event(t=float(e["t"]), kind=str(e["kind"]), payload=e["payload"])
            for e in data["events"]
        ),
        pending=tuple(data["pending"]) if data.get("pending") else None,
    )


def save_snapshot(session: SessionState, path) -> None:
    Path(path).write_text(json.dumps(snapshot_to_dict(session), sort_keys=True) + "\n")


def load_snapshot(path) -> SessionState:
    return session_from_snapshot(json.loads(Path(path).read_text()))


def state_digest(session: SessionState) -> str:
    """Stable hash over everything observable about the session."""
    doc = {
        "solved": sorted(session.progress.solved),
        "history": [[h.action, h.worker, h.t] for h in session.progress.history],
        "wear": {"values": list(session.wear.values), "t": session.wear.t},
        "clock": session.clock,
        "pending": list(session.pending) if session.pending else None,
        "events": [
            {"t": e.t, "kind": e.kind, "payload": e.payload} for e in session.events
        ],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# scripted scenarios (used by the CLI replay command and the test fixtures)


def scenario_to_dict(
    graph: AOG,
    models: Mapping[str, ActionModel],
    config: CostConfig,
    initial_wear: WearVector,
    robot_durations: Mapping[str, float] | None = None,
    capacity_: float | None = None,
    name: str = "scenario",
) -> dict:
    return {
        "v": 1,
        "name": name,
        "graph": graph_to_dict(graph),
        "calibration": {
            "v": 1,
            "capacity": capacity_ if capacity_ is not None else config.capacity,
            "actions": models_to_dict(models),
        },
        "config": config_to_dict(config),
        "initial_wear": {j: initial_wear[j] for j in JOINTS},
        "robot_durations": dict(sorted((robot_durations or {}).items())),
        "mode": "follow",
    }


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: str
    worker: str
    plan_cost: float
    wear_after: Mapping[str, float]


def run_scenario(data: Mapping) -> tuple:
    """Drive a session from a scenario file; returns (final session, step rows).

    "follow" mode executes every suggestion with model-based wear updates; a
    "steps" list can override the worker or action per step instead.
    """
    if data.get("v") != 1:
        raise SessionError(f"unsupported scenario version {data.get('v')!r}")
    session = start_session(
        graph=graph_from_dict(data["graph"]),
        models=models_from_dict(data["calibration"]["actions"]),
        config=config_from_dict(data.get("config", {})),
        initial_wear=WearVector.from_mapping(data["initial_wear"]),
        robot_durations=data.get("robot_durations", {}),
    )
    script = data.get("steps")
    rows: list[StepRecord] = []
    step = 0
    max_steps = int(data.get("max_steps", 10_000))
    while not session.is_complete and step < max_steps:
        suggestion, session = suggest_next(session)
        action, worker = suggestion.action, suggestion.worker
        directive = script[step] if script and step < len(script) else {}
        want_action = directive.get("action", action)
        want_worker = directive.get("worker", worker)
        if (want_action, want_worker) != (action, worker):
            session = override(session, want_action, want_worker)
            action, worker = want_action, want_worker
        evidence = None
        if directive.get("duration_s") is not None:
            evidence = CompletionEvidence(duration_s=float(directive["duration_s"]))
        session = complete_action(session, action, worker, evidence)
        step += 1
        rows.append(
            StepRecord(
                step=step,
                action=action,
                worker=worker,
                plan_cost=suggestion.plan.total_cost,
                wear_after=session.wear.as_dict(),
            )
        )
    return session, rows
