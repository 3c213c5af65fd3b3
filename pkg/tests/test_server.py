import json
import socket

import pytest

from vrr.agent import TrainConfig, _level_stream, perception_warmup, \
    train_from_demonstrations
from vrr.server import PROTO_VERSION, start_background


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=90)
        self.file = self.sock.makefile("rw")

    def send(self, **msg):
        self.file.write(json.dumps(msg) + "\n")
        self.file.flush()

    def recv(self):
        return json.loads(self.file.readline())

    def rpc(self, n=1, **msg):
        self.send(**msg)
        replies = [self.recv() for _ in range(n)]
        return replies[0] if n == 1 else replies

    def close(self):
        self.sock.close()


@pytest.fixture(scope="module")
def server():
    srv, port, _ = start_background()
    yield port
    srv.shutdown()


def test_hello(server):
    c = Client(server)
    reply = c.rpc(type="hello", proto_version=PROTO_VERSION)
    assert reply == {"type": "hello", "proto_version": PROTO_VERSION}
    c.close()


def test_create_returns_initial_state(server):
    c = Client(server)
    created, state = c.rpc(2, type="create", config={
        "game": "sokoban", "size": 7, "boxes": 1, "seed": 3,
        "mode": "human_demo", "learn": True})
    assert created["type"] == "created"
    assert state["type"] == "state"
    assert state["shape"] == [7, 7]
    assert not state["done"]
    assert state["sprites"]  # sprite hashes for the console renderer
    c.close()


def test_duplicate_creates_get_distinct_ids(server):
    c = Client(server)
    cfg = {"game": "sokoban", "size": 7, "seed": 3, "mode": "human_demo"}
    a, _ = c.rpc(2, type="create", config=dict(cfg))
    b, _ = c.rpc(2, type="create", config=dict(cfg))
    assert a["session"] != b["session"]
    c.close()


def test_invalid_config_and_unknown_session(server):
    c = Client(server)
    err = c.rpc(type="create", config={"game": "sokoban", "size": 2})
    assert err["type"] == "error"
    err2 = c.rpc(type="act", session="missing", action_id=0)
    assert err2["type"] == "error"
    err3 = c.rpc(type="bogus")
    assert err3["type"] == "error"
    c.close()


def test_act_records_and_reports_new_rules(server):
    c = Client(server)
    created, state = c.rpc(2, type="create", config={
        "game": "sokoban", "size": 7, "seed": 11, "mode": "human_demo",
        "learn": True})
    sid = created["session"]
    delta = c.rpc(type="act", session=sid, action_id=3)
    assert delta["type"] == "delta"
    assert delta["rule_count"] >= 1
    exported = c.rpc(type="export", session=sid)
    assert exported["records"] == 1
    assert exported["log"].startswith("vrr-log 1")
    c.close()


def test_act_after_win_is_an_error(server):
    c = Client(server)
    created, _ = c.rpc(2, type="create", config={
        "game": "sokoban", "size": 7, "seed": 25, "mode": "agent_watch",
        "learn": True})
    sid = created["session"]
    for _ in range(60):
        plan, state = c.rpc(2, type="agent_step", session=sid)
        assert plan["kind"] != "exhausted"
        if state["done"]:
            break
    assert state["done"]
    err = c.rpc(type="agent_step", session=sid)
    assert err["type"] == "error"
    c.close()


def test_agent_watch_plans_and_predicted_frames(server):
    c = Client(server)
    created, _ = c.rpc(2, type="create", config={
        "game": "sokoban", "size": 7, "seed": 31, "mode": "agent_watch",
        "learn": True})
    sid = created["session"]
    plan, state = c.rpc(2, type="agent_step", session=sid)
    assert plan["type"] == "plan"
    assert plan["kind"] in ("win", "explore")
    assert len(plan["predicted"]) == len(plan["actions"])
    assert plan["executed"] >= 1
    c.close()


def test_protocol_parity_with_offline_import():
    """Live learning through act(), exported and re-imported offline, gives a
    byte-identical rule table (the wire/agent parity contract)."""
    srv, port, _ = start_background()
    try:
        c = Client(port)
        seed = 77
        created, _state = c.rpc(2, type="create", config={
            "game": "sokoban", "size": 7, "boxes": 1, "seed": seed,
            "mode": "human_demo", "learn": True})
        sid = created["session"]
        from vrr import gridworld as gw
        level = gw.generate_sokoban(seed, 7, 1)
        actions = gw.solve(level)
        last = None
        for a in actions:
            last = c.rpc(type="act", session=sid, action_id=a)
            assert last["type"] == "delta"
        assert last["done"] and last["reward"] == 1.0
        exported = c.rpc(type="export", session=sid)
        c.close()

        # offline: same warm-up config reproduces the session's pipeline
        tc = TrainConfig(kind="sokoban", size=7, n_boxes=1, seed=seed)
        pipeline = perception_warmup(_level_stream(tc, "warm"),
                                     tc.warmup_steps, 16, tc.seed)
        offline = pipeline.new_ruleset("sokoban")
        train_from_demonstrations(exported["log"], offline)

        live = srv.registry.sessions[sid].rules
        assert offline.save() == live.save()
    finally:
        srv.shutdown()


def test_ws_bridge_speaks_same_protocol():
    import base64
    import hashlib
    import os
    srv, port, ws = start_background(ws_port=0)
    try:
        ws_port = ws.getsockname()[1]
        s = socket.create_connection(("127.0.0.1", ws_port), timeout=30)
        key = base64.b64encode(os.urandom(16)).decode()
        s.sendall((f"GET / HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\n"
                   f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
                   f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
        resp = b""
        while b"\r\n\r\n" not in resp:
            resp += s.recv(4096)
        expect = base64.b64encode(hashlib.sha1(
            (key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode()).digest()).decode()
        assert expect in resp.decode()

        payload = json.dumps({"type": "hello", "proto_version": 1}).encode()
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        s.sendall(bytes([0x81, 0x80 | len(payload)]) + mask + masked)
        head = s.recv(2)
        assert head[0] == 0x81
        length = head[1] & 0x7F
        body = b""
        while len(body) < length:
            body += s.recv(length - len(body))
        assert json.loads(body) == {"type": "hello", "proto_version": 1}
        s.close()
    finally:
        srv.shutdown()
