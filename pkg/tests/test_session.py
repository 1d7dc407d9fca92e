import itertools
import math
import random

import pytest

from ergoalloc.aog import GraphError, Worker, build_graph, generate_linear_assembly
from ergoalloc.ergo import (
    DEFAULT_CAPACITY,
    JOINTS,
    ActionModel,
    CostConfig,
    ErgoError,
    WearVector,
    constant_score_trace,
)
from ergoalloc.fixtures import (
    OFFLINE_ALLOCATION,
    ONLINE_ALLOCATION,
    ROBOT_DURATION_S,
    corner_joint_config,
    corner_joint_graph,
    corner_joint_initial_wear,
    corner_joint_models,
    corner_joint_scenario,
)
from ergoalloc.session import (
    CompletionEvidence,
    SessionError,
    complete_action,
    export_log,
    offline_allocation,
    override,
    recost,
    replay_log,
    run_scenario,
    start_session,
    state_digest,
    suggest_next,
)


def fixture_session(config=None, wear=None):
    return start_session(
        graph=corner_joint_graph(),
        models=corner_joint_models(),
        config=config or corner_joint_config(),
        initial_wear=wear if wear is not None else corner_joint_initial_wear(),
        robot_durations=ROBOT_DURATION_S,
    )


def uniform_models(graph, alpha=1.0, duration=10.0):
    return {
        action: ActionModel(action, {j: alpha for j in JOINTS}, duration_s=duration)
        for action in graph.actions
    }


def drive_to_completion(session):
    sequence = []
    while not session.is_complete:
        suggestion, session = suggest_next(session)
        sequence.append((suggestion.action, suggestion.worker))
        session = complete_action(session, suggestion.action, suggestion.worker)
    return session, tuple(sequence)


# -- start_session ----------------------------------------------------------


def test_start_accepts_reference_and_zero_wear():
    fixture_session()
    fixture_session(wear=WearVector(values=(0.0,) * 5))


def test_start_rejects_out_of_range_wear():
    with pytest.raises(ErgoError):
        fixture_session(wear=WearVector(values=(1.0, 0.1, 0.1, 0.1, 0.1)))


def test_start_rejects_missing_models():
    models = corner_joint_models()
    del models["a3"]
    with pytest.raises(SessionError, match="a3"):
        start_session(
            corner_joint_graph(), models, corner_joint_config(), corner_joint_initial_wear()
        )


def test_start_rejects_invalid_graph_and_multihuman():
    graph = generate_linear_assembly(2, 2)  # w00 human, w01 robot
    two_humans = build_graph(
        "ab", lambda s, p: True, [Worker("h1", "human"), Worker("h2", "human")]
    )
    with pytest.raises(SessionError, match="exactly one human"):
        start_session(
            two_humans,
            uniform_models(two_humans),
            CostConfig(),
            WearVector(values=(0.0,) * 5),
        )
    start_session(graph, uniform_models(graph), CostConfig(), WearVector(values=(0.0,) * 5))


# -- recost -------------------------------------------------------------------


def test_recost_reference_cost_for_first_action():
    session = fixture_session()
    costs = recost(session)
    for arc in session.graph.arcs.values():
        if arc.action == "a1" and arc.worker == "human":
            assert costs[arc.id] == 32.0
        if arc.worker == "robot":
            assert costs[arc.id] == 35.0


def test_recost_all_low_wear_gives_minimum_cost():
    graph = corner_joint_graph()
    session = start_session(
        graph,
        uniform_models(graph, alpha=1.0),
        corner_joint_config(),
        WearVector(values=(0.1,) * 5),
        ROBOT_DURATION_S,
    )
    costs = recost(session)
    for arc in graph.arcs.values():
        if arc.worker == "human":
            assert costs[arc.id] == 5.0


def test_recost_high_prediction_dominates():
    graph = corner_joint_graph()
    models = uniform_models(graph, alpha=1.0)
    models["a1"] = ActionModel(
        "a1",
        {"shoulder": 0.2, "elbow": 1.0, "wrist": 1.0, "trunk": 1.0, "neck": 1.0},
        duration_s=10.0,
    )
    session = start_session(
        graph, models, corner_joint_config(), WearVector(values=(0.5, 0.1, 0.1, 0.1, 0.1))
    )
    costs = recost(session)
    for arc in graph.arcs.values():
        if arc.action == "a1" and arc.worker == "human":
            assert costs[arc.id] >= 104.0


# -- suggestions ----------------------------------------------------------------


def test_first_two_suggestions_match_reference_run():
    session = fixture_session()
    s1, session = suggest_next(session)
    assert (s1.action, s1.worker) == ("a1", "human")
    session = complete_action(session, s1.action, s1.worker)
    s2, session = suggest_next(session)
    assert (s2.action, s2.worker) == ("a2", "robot")


def test_single_costly_action_goes_to_robot():
    graph = generate_linear_assembly(2, 2)
    models = {
        "j01": ActionModel("j01", {j: 0.2 for j in JOINTS}, duration_s=10.0)
    }
    session = start_session(
        graph, models, CostConfig(), WearVector(values=(0.5,) * 5)
    )
    suggestion, session = suggest_next(session)
    assert suggestion.worker == "w01"
    assert session.graph.worker("w01").kind == "robot"


def test_suggest_after_completion_rejected():
    session = fixture_session()
    session, _ = drive_to_completion(session)
    with pytest.raises(SessionError, match="complete"):
        suggest_next(session)


# -- completion and wear accounting ----------------------------------------------


def test_human_completion_with_trace_increases_all_joints():
    session = fixture_session()
    before = session.wear
    trace = constant_score_trace(3.0, 20.0, dt=0.25)
    session = complete_action(
        session, "a1", "human", CompletionEvidence(score_trace=trace)
    )
    for j in JOINTS:
        assert session.wear[j] > before[j]
    assert session.clock == pytest.approx(20.0)


def test_robot_completion_applies_exact_recovery():
    session = fixture_session()
    before = session.wear
    session = complete_action(session, "a1", "robot")
    d = ROBOT_DURATION_S["a1"]
    config = corner_joint_config()
    factor = math.exp(-config.recovery_rate * d / config.capacity)
    for j, v in zip(JOINTS, before.values):
        assert session.wear[j] == v * factor
        assert session.wear[j] < v


def test_model_and_trace_updates_agree_for_calibrated_trace():
    graph = corner_joint_graph()
    g, d = 3.0, 18.0
    alpha = math.exp(-g * d / DEFAULT_CAPACITY)
    models = {
        action: ActionModel(action, {j: alpha for j in JOINTS}, duration_s=d)
        for action in graph.actions
    }
    wear0 = WearVector(values=(0.2, 0.1, 0.3, 0.05, 0.4))
    by_model = start_session(graph, models, CostConfig(), wear0)
    by_trace = start_session(graph, models, CostConfig(), wear0)
    by_model = complete_action(by_model, "a1", "human")
    trace = constant_score_trace(g, d)
    by_trace = complete_action(by_trace, "a1", "human", CompletionEvidence(score_trace=trace))
    for j in JOINTS:
        assert abs(by_model.wear[j] - by_trace.wear[j]) < 1e-9
    completion = [e for e in by_trace.events if e.kind == "completion"][0]
    assert max(abs(v) for v in completion.payload["model_error"].values()) < 1e-9


def test_completion_requires_enabled_action():
    session = fixture_session()
    with pytest.raises(GraphError, match="not enabled"):
        complete_action(session, "a2", "human")
    session = complete_action(session, "a1", "human")
    with pytest.raises(GraphError, match="not enabled"):
        complete_action(session, "a1", "human")


def test_completion_rejects_negative_duration():
    session = fixture_session()
    with pytest.raises(SessionError, match="negative duration"):
        complete_action(session, "a1", "human", CompletionEvidence(duration_s=-3.0))


# -- override ---------------------------------------------------------------------


def test_override_to_robot_switches_wear_accounting():
    session = fixture_session()
    _, session = suggest_next(session)
    assert session.pending == ("a1", "human")
    session = override(session, "a1", "robot")
    assert session.pending == ("a1", "robot")
    before = session.wear
    session = complete_action(session, *session.pending)
    for j in JOINTS:
        assert session.wear[j] < before[j]


def test_override_to_other_enabled_action_logged():
    session = fixture_session()
    _, session = suggest_next(session)
    session = override(session, "a1", "robot")
    events = [e.kind for e in session.events]
    assert events.count("override") == 1
    assert [e for e in session.events if e.kind == "override"][0].payload["replaced"] == [
        "a1",
        "human",
    ]


def test_override_rejects_disabled_action():
    session = fixture_session()
    with pytest.raises(SessionError, match="not enabled"):
        override(session, "a5", "robot")


# -- offline allocation --------------------------------------------------------------


def test_offline_allocation_matches_reference_rows():
    session = fixture_session()
    assert offline_allocation(session) == OFFLINE_ALLOCATION


def test_offline_allocation_free_robot_takes_everything():
    session = fixture_session(config=CostConfig(robot_cost=1e-9))
    assert all(worker == "robot" for _, worker in offline_allocation(session))


def test_offline_allocation_is_optimal_fixed_assignment():
    graph = generate_linear_assembly(3, 2)
    rng = random.Random(3)
    models = {
        action: ActionModel(
            action,
            {j: rng.uniform(0.3, 1.0) for j in JOINTS},
            duration_s=10.0,
        )
        for action in graph.actions
    }
    session = start_session(graph, models, CostConfig(), WearVector(values=(0.4,) * 5))
    costs = recost(session)
    human_cost_of = {}
    for arc in graph.arcs.values():
        if graph.worker(arc.worker).kind == "human":
            human_cost_of[arc.action] = costs[arc.id]
    best = min(
        sum(
            human_cost_of[a] if who == "h" else session.config.robot_cost
            for a, who in zip(sorted(graph.actions), combo)
        )
        for combo in itertools.product("hr", repeat=len(graph.actions))
    )
    from ergoalloc.planner import optimal_plan

    plan = optimal_plan(graph, session.progress, costs)
    assert plan.total_cost == pytest.approx(best)


def test_offline_allocation_requires_fresh_session():
    session = fixture_session()
    session = complete_action(session, "a1", "human")
    with pytest.raises(SessionError, match="fresh"):
        offline_allocation(session)


# -- full replay fixture ---------------------------------------------------------------


def test_online_run_reproduces_reference_table():
    session, sequence = drive_to_completion(fixture_session())
    assert sequence == ONLINE_ALLOCATION
    assert len(session.progress.history) == 5


def test_scenario_runner_matches_direct_drive():
    session, rows = run_scenario(corner_joint_scenario())
    assert tuple((r.action, r.worker) for r in rows) == ONLINE_ALLOCATION
    assert session.is_complete


# -- event log ----------------------------------------------------------------------


def test_export_then_replay_reproduces_digest():
    session, _ = drive_to_completion(fixture_session())
    text = export_log(session)
    replayed = replay_log(text)
    assert state_digest(replayed) == state_digest(session)


def test_fixture_log_contains_five_completions():
    session, _ = drive_to_completion(fixture_session())
    kinds = [e.kind for e in session.events]
    assert kinds.count("completion") == 5
    assert kinds.count("wear") == 5
    assert kinds[0] == "start"


def test_fresh_session_exports_only_start_event():
    text = export_log(fixture_session())
    lines = [l for l in text.splitlines() if l.strip()]
    assert len(lines) == 1
    assert '"kind": "start"' in lines[0]


def test_replay_with_trace_evidence_is_bit_exact():
    session = fixture_session()
    _, session = suggest_next(session)
    trace = constant_score_trace(2.5, 12.0, dt=0.5)
    session = complete_action(session, "a1", "human", CompletionEvidence(score_trace=trace))
    _, session = suggest_next(session)
    session = complete_action(session, *session.pending)
    assert state_digest(replay_log(export_log(session))) == state_digest(session)


def test_replay_rejects_bad_logs():
    with pytest.raises(SessionError, match="start"):
        replay_log('{"v": 1, "t": 0, "kind": "completion", "payload": {}}\n')
    with pytest.raises(SessionError, match="version"):
        replay_log('{"v": 9, "t": 0, "kind": "start", "payload": {}}\n')


# -- invariants ------------------------------------------------------------------------


def test_wear_never_reaches_one_even_under_abuse():
    graph = generate_linear_assembly(6, 2)
    models = uniform_models(graph, alpha=0.05, duration=300.0)
    session = start_session(
        graph, models, CostConfig(), WearVector(values=(0.95,) * 5)
    )
    while not session.is_complete:
        arcs = sorted(graph.enabled_arcs(session.progress.solved), key=lambda a: a.id)
        human_arcs = [a for a in arcs if a.worker == "w00"]
        session = complete_action(session, human_arcs[0].action, "w00")
        for v in session.wear.values:
            assert v < 1.0


def test_robot_actions_strictly_lower_every_joint():
    session = fixture_session()
    wear_before = session.wear
    session = complete_action(session, "a1", "robot")
    for j in JOINTS:
        assert session.wear[j] < wear_before[j]


def test_identical_sessions_have_identical_digests():
    a, _ = drive_to_completion(fixture_session())
    b, _ = drive_to_completion(fixture_session())
    assert state_digest(a) == state_digest(b)


# -- snapshots and wall-clock mode --------------------------------------------------


def test_snapshot_round_trip_preserves_digest(tmp_path):
    from ergoalloc.session import load_snapshot, save_snapshot, session_from_snapshot, snapshot_to_dict

    session = fixture_session()
    _, session = suggest_next(session)
    session = complete_action(session, *session.pending)
    _, session = suggest_next(session)

    assert state_digest(session_from_snapshot(snapshot_to_dict(session))) == state_digest(session)
    path = tmp_path / "session.snapshot.json"
    save_snapshot(session, path)
    restored = load_snapshot(path)
    assert state_digest(restored) == state_digest(session)
    assert restored.pending == session.pending
    # a restored session keeps working
    restored = complete_action(restored, *restored.pending)
    assert len(restored.progress.history) == 2


def test_snapshot_version_checked():
    from ergoalloc.session import session_from_snapshot

    with pytest.raises(SessionError, match="version"):
        session_from_snapshot({"v": 7})


def test_wall_clock_mode_uses_elapsed_time():
    fake = iter([100.0, 117.5]).__next__  # anchor, then completion time
    session = start_session(
        graph=corner_joint_graph(),
        models=corner_joint_models(),
        config=corner_joint_config(),
        initial_wear=corner_joint_initial_wear(),
        robot_durations=ROBOT_DURATION_S,
        wall_clock=True,
        now=fake,
    )
    session = complete_action(session, "a1", "human")
    assert session.clock == pytest.approx(17.5)
    completion = [e for e in session.events if e.kind == "completion"][0]
    assert completion.payload["duration_s"] == pytest.approx(17.5)
    # the log records realized durations, so replay needs no wall clock
    assert state_digest(replay_log(export_log(session))) == state_digest(session)


def test_wall_clock_explicit_duration_wins():
    session = start_session(
        graph=corner_joint_graph(),
        models=corner_joint_models(),
        config=corner_joint_config(),
        initial_wear=corner_joint_initial_wear(),
        robot_durations=ROBOT_DURATION_S,
        wall_clock=True,
        now=lambda: 0.0,
    )
    session = complete_action(session, "a1", "human", CompletionEvidence(duration_s=12.0))
    assert session.clock == 12.0
