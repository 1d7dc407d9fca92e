"""Corner-joint demo task: a pinned end-to-end fixture for replay tests.

The task assembles a corner joint (cj) with two equal side profiles (s1, s2)
and one shorter leg (leg) on a shared workbench.  Placing the corner joint on
the bench and placing the finished part on the output table are modeled as
relaxed assemblies against two virtual fixture pieces (bench, out), which
keeps every action a two-to-one merge:

    a1  put cj on the bench          {cj} + {bench}
    a2  mate s1 with the assembly    {s1} + (supersets of {bench, cj})
    a3  mate s2 with the assembly    {s2} + ...
    a4  mate leg with the assembly   {leg} + ...
    a5  move the result to the table {bench+cj+leg+s1+s2} + {out}

a1 is forced first and a5 last; a2/a3/a4 are order-free, which gives 15 nodes
and 14 structural merges (28 hyper-arcs with two workers).

Fixture procedure for the coefficient table: the initial wear puts shoulder,
trunk and neck in the medium risk band and elbow and wrist in the low band.
Coefficients were then chosen against the band thresholds (0.25 / 0.75) so
that, stepping the session with model-based updates:

  1. every action predicted from the initial wear stays at 3 medium + 2 low
     (cost 32 < robot 35) -- so a one-shot plan assigns everything to the
     human, and the first live suggestion is (a1, human);
  2. after the human performs a1, every remaining human option would push
     elbow and wrist over the lower threshold (5 medium, cost 50 > 35), so
     the robot takes a2 (lowest action id among equal-cost robot steps);
  3. 60 s of robot work discharges the human enough that predictions for a3
     and a4 are all-low (cost 5), so the human takes a3, then a4;
  4. the final placement has markedly lower coefficients (a long stretch to
     the output table), predicting 5 medium joints (cost 50 > 35): robot.

The first three actions share one reach-and-pick motion toward the far side
of the bench, so they share one coefficient set; a4 picks from the near side
(higher alpha everywhere, shoulder nearly idle); a5 is the most wearing.
All margins to a band threshold are at least 0.012, so the replayed
allocation sequence human, robot, human, human, robot is float-safe.
"""
from __future__ import annotations

from .aog import AOG, Worker, build_graph
from .ergo import JOINTS, ActionModel, CostConfig, WearVector
from .session import scenario_to_dict

PIECES = ("bench", "cj", "s1", "s2", "leg", "out")

WORKERS = (Worker(id="human", kind="human"), Worker(id="robot", kind="robot"))

INITIAL_WEAR = {
    "shoulder": 0.3,
    "elbow": 0.1,
    "wrist": 0.1,
    "trunk": 0.45,
    "neck": 0.5,
}

_REACH_PICK_ALPHA = {
    "shoulder": 0.90,
    "elbow": 0.90,
    "wrist": 0.90,
    "trunk": 0.94,
    "neck": 0.94,
}

ALPHA = {
    "a1": dict(_REACH_PICK_ALPHA),
    "a2": dict(_REACH_PICK_ALPHA),
    "a3": dict(_REACH_PICK_ALPHA),
    "a4": {"shoulder": 0.97, "elbow": 0.91, "wrist": 0.91, "trunk": 0.95, "neck": 0.96},
    "a5": {"shoulder": 0.80, "elbow": 0.85, "wrist": 0.85, "trunk": 0.82, "neck": 0.80},
}

HUMAN_DURATION_S = {"a1": 25.0, "a2": 25.0, "a3": 25.0, "a4": 15.0, "a5": 40.0}
ROBOT_DURATION_S = {"a1": 30.0, "a2": 60.0, "a3": 60.0, "a4": 30.0, "a5": 90.0}

ONLINE_ALLOCATION = (
    ("a1", "human"),
    ("a2", "robot"),
    ("a3", "human"),
    ("a4", "human"),
    ("a5", "robot"),
)
OFFLINE_ALLOCATION = (
    ("a1", "human"),
    ("a2", "human"),
    ("a3", "human"),
    ("a4", "human"),
    ("a5", "human"),
)

_CORE = frozenset({"bench", "cj", "s1", "s2", "leg"})


def _split_action(subset: frozenset, left: frozenset, right: frozenset) -> str | None:
    sides = (left, right)
    if set(sides) == {frozenset({"bench"}), frozenset({"cj"})}:
        return "a1"
    if frozenset({"out"}) in sides:
        other = right if left == frozenset({"out"}) else left
        return "a5" if other == _CORE else None
    for piece, action in (("s1", "a2"), ("s2", "a3"), ("leg", "a4")):
        single = frozenset({piece})
        if single in sides:
            other = right if left == single else left
            if {"bench", "cj"} <= other and "out" not in other:
                return action
    return None


def corner_joint_graph() -> AOG:
    return build_graph(
        pieces=PIECES,
        feasible_splits=lambda s, ab: _split_action(s, *ab) is not None,
        workers=WORKERS,
        action_namer=_split_action,
    )


def corner_joint_models() -> dict:
    return {
        action: ActionModel(
            action=action, alpha=dict(ALPHA[action]), duration_s=HUMAN_DURATION_S[action]
        )
        for action in ALPHA
    }


def corner_joint_config() -> CostConfig:
    return CostConfig()


def corner_joint_initial_wear() -> WearVector:
    return WearVector(values=tuple(INITIAL_WEAR[j] for j in JOINTS))


def corner_joint_scenario() -> dict:
    return scenario_to_dict(
        graph=corner_joint_graph(),
        models=corner_joint_models(),
        config=corner_joint_config(),
        initial_wear=corner_joint_initial_wear(),
        robot_durations=ROBOT_DURATION_S,
        name="corner-joint",
    )


def corner_joint_create_request(session_id: str = "corner-joint-demo") -> dict:
    """Body for the service's create-session endpoint, from the scenario."""
    scenario = corner_joint_scenario()
    return {
        "v": 1,
        "session_id": session_id,
        "graph": scenario["graph"],
        "calibration": scenario["calibration"],
        "config": scenario["config"],
        "initial_wear": scenario["initial_wear"],
        "robot_durations": scenario["robot_durations"],
    }


def build_protocol_trace() -> list:
    """Drive the fixture through the live service and record every exchange.

    The recorded bodies double as the operator console's test fixture, so the
    console is exercised against exactly what the service serves.
    """
    from fastapi.testclient import TestClient

    from .service import create_app

    client = TestClient(create_app())
    create_body = corner_joint_create_request()
    resp = client.post("/v1/sessions", json=create_body)
    trace = [
        {
            "label": "create",
            "request": {"method": "POST", "path": "/v1/sessions", "body": create_body},
            "response": {"status": resp.status_code, "body": resp.json()},
        }
    ]
    session_id = resp.json()["session_id"]
    step = 0
    while not resp.json()["complete"]:
        suggestion = resp.json()["suggestion"]
        body = {"v": 1, "action": suggestion["action"], "worker": suggestion["worker"]}
        step += 1
        path = f"/v1/sessions/{session_id}/complete"
        resp = client.post(path, json=body)
        trace.append(
            {
                "label": f"complete-{step}",
                "request": {"method": "POST", "path": path, "body": body},
                "response": {"status": resp.status_code, "body": resp.json()},
            }
        )
    return trace
