import json
import socket
import threading
import time
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from ergoalloc.fixtures import (
    ONLINE_ALLOCATION,
    build_protocol_trace,
    corner_joint_create_request,
)
from ergoalloc.service import create_app

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def client():
    return TestClient(create_app())


def create_fixture_session(client, session_id="corner-joint-demo"):
    resp = client.post("/v1/sessions", json=corner_joint_create_request(session_id))
    assert resp.status_code == 201, resp.text
    return resp.json()


def sse_events(text):
    events = []
    for line in text.splitlines():
        if line.startswith("data: "):
            events.append(json.loads(line[len("data: "):]))
    return events


def test_create_echoes_initial_wear_and_suggestion(client):
    body = create_fixture_session(client)
    assert body["wear"] == {
        "shoulder": 0.3, "elbow": 0.1, "wrist": 0.1, "trunk": 0.45, "neck": 0.5,
    }
    assert body["suggestion"] == {"action": "a1", "worker": "human"}
    assert body["plan"]["total_cost"] == 160.0
    assert body["config"]["v_th1"] == 0.25 and body["config"]["v_th2"] == 0.75
    assert body["complete"] is False


def test_full_drive_matches_reference_sequence(client):
    body = create_fixture_session(client)
    sid = body["session_id"]
    seen = []
    while not body["complete"]:
        s = body["suggestion"]
        seen.append((s["action"], s["worker"]))
        resp = client.post(
            f"/v1/sessions/{sid}/complete",
            json={"v": 1, "action": s["action"], "worker": s["worker"]},
        )
        assert resp.status_code == 200, resp.text
        body = resp.json()
    assert tuple(seen) == ONLINE_ALLOCATION
    assert body["suggestion"] is None
    assert body["complete"] is True
    assert len(body["history"]) == 5


def test_duplicate_completion_conflicts(client):
    sid = create_fixture_session(client)["session_id"]
    first = client.post(
        f"/v1/sessions/{sid}/complete", json={"v": 1, "action": "a1", "worker": "human"}
    )
    assert first.status_code == 200
    second = client.post(
        f"/v1/sessions/{sid}/complete", json={"v": 1, "action": "a1", "worker": "human"}
    )
    assert second.status_code == 409
    assert second.json()["error"]["code"] == "not-enabled"


def test_get_state_is_idempotent(client):
    sid = create_fixture_session(client)["session_id"]
    a = client.get(f"/v1/sessions/{sid}")
    b = client.get(f"/v1/sessions/{sid}")
    assert a.status_code == b.status_code == 200
    assert a.json() == b.json()


def test_override_updates_suggestion(client):
    sid = create_fixture_session(client)["session_id"]
    resp = client.post(
        f"/v1/sessions/{sid}/override", json={"v": 1, "action": "a1", "worker": "robot"}
    )
    assert resp.status_code == 200
    assert resp.json()["suggestion"] == {"action": "a1", "worker": "robot"}
    bad = client.post(
        f"/v1/sessions/{sid}/override", json={"v": 1, "action": "a5", "worker": "robot"}
    )
    assert bad.status_code == 409


def test_unknown_session_and_version_mismatch(client):
    assert client.get("/v1/sessions/ghost").status_code == 404
    body = corner_joint_create_request("v-check")
    body["v"] = 99
    resp = client.post("/v1/sessions", json=body)
    assert resp.status_code == 400
    assert resp.json()["error"]["code"] == "version-mismatch"


def test_list_and_delete_sessions(client):
    create_fixture_session(client, "one")
    create_fixture_session(client, "two")
    assert client.get("/v1/sessions").json()["sessions"] == ["one", "two"]
    assert client.delete("/v1/sessions/one").status_code == 204
    assert client.get("/v1/sessions").json()["sessions"] == ["two"]
    assert client.delete("/v1/sessions/one").status_code == 404


def test_completion_with_angle_trace(client):
    sid = create_fixture_session(client)["session_id"]
    rows = [[t * 0.5, 30.0, 80.0, 5.0, 10.0, 5.0] for t in range(20)]
    resp = client.post(
        f"/v1/sessions/{sid}/complete",
        json={"v": 1, "action": "a1", "worker": "human", "angle_trace": rows},
    )
    assert resp.status_code == 200
    wear = resp.json()["wear"]
    assert wear["shoulder"] > 0.3  # charged by the posture trace


def test_event_stream_replays_log_in_order(client):
    sid = create_fixture_session(client)["session_id"]
    client.post(f"/v1/sessions/{sid}/complete", json={"v": 1, "action": "a1", "worker": "human"})
    stream = client.get(f"/v1/sessions/{sid}/events?replay=1")
    assert stream.status_code == 200
    events = sse_events(stream.text)
    log_lines = [
        json.loads(line)
        for line in client.get(f"/v1/sessions/{sid}/log").text.splitlines()
        if line.strip()
    ]
    assert [e["kind"] for e in events] == [e["kind"] for e in log_lines]
    assert [e["payload"] for e in events] == [e["payload"] for e in log_lines]
    again = sse_events(client.get(f"/v1/sessions/{sid}/events?replay=1").text)
    assert again == events


def test_protocol_trace_fixture_is_current():
    committed = json.loads((FIXTURES_DIR / "protocol_trace.json").read_text())
    live = json.loads(json.dumps(build_protocol_trace()))
    assert live == committed


def test_corner_joint_fixture_file_is_current():
    from ergoalloc.fixtures import corner_joint_scenario

    committed = json.loads((FIXTURES_DIR / "corner_joint.json").read_text())
    assert json.loads(json.dumps(corner_joint_scenario())) == committed


def test_live_event_stream_pushes_mutations():
    import uvicorn

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    server = uvicorn.Server(
        uvicorn.Config(create_app(), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.time() + 10
        while not server.started:
            assert time.time() < deadline, "server did not start"
            time.sleep(0.02)
        base = f"http://127.0.0.1:{port}"
        created = httpx.post(
            f"{base}/v1/sessions", json=corner_joint_create_request("live"), timeout=10
        ).json()
        sid = created["session_id"]
        suggestion = created["suggestion"]

        def complete_soon():
            time.sleep(0.3)
            httpx.post(
                f"{base}/v1/sessions/{sid}/complete",
                json={"v": 1, "action": suggestion["action"], "worker": suggestion["worker"]},
                timeout=10,
            )

        poker = threading.Thread(target=complete_soon, daemon=True)
        poker.start()
        kinds = []
        with httpx.stream("GET", f"{base}/v1/sessions/{sid}/events", timeout=20) as resp:
            for line in resp.iter_lines():
                if line.startswith("data: "):
                    kinds.append(json.loads(line[len("data: "):])["kind"])
                if len(kinds) >= 5:
                    break
        poker.join(timeout=5)
        assert kinds == ["start", "suggestion", "completion", "wear", "suggestion"]
    finally:
        server.should_exit = True
        thread.join(timeout=5)
