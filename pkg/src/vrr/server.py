"""Local session service: environments, live rule learning, plan inspection.

Protocol: one JSON object per line over a localhost TCP socket (and the same
payloads over an optional WebSocket bridge for the browser console). Message
types:

    -> {"type":"hello","proto_version":1}
    <- {"type":"hello","proto_version":1}
    -> {"type":"create","config":{"game":..,"size":..,"boxes":..,"rotation":..,
                                  "seed":..,"mode":"human_demo"|"agent_watch",
                                  "learn":true,"rules_path":null}}
    <- {"type":"created","session":ID} followed by a state message
    -> {"type":"act","session":ID,"action_id":N}
    <- {"type":"delta","session":ID,"cells":[[r,c,id]..],"reward":..,
        "done":..,"new_rules":[..],"rule_count":N}
    -> {"type":"agent_step","session":ID}
    <- {"type":"plan","session":ID,"kind":..,"actions":[..],"predicted":[..],
        "executed":N} followed by a state message
    -> {"type":"export","session":ID}
    <- {"type":"export","session":ID,"log":"..."}
    <- {"type":"error","code":..,"msg":..} on any failure

The server never advances an environment except on an explicit client
message; within a session, messages are processed strictly in arrival order.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import socketserver
import struct
import threading

import numpy as np

from . import gridworld as gw
from .agent import (ObservationPipeline, TrainConfig, TrajectoryRecord,
                    _level_stream, perception_warmup, write_trajectory_log)
from .errors import VrrError
from .gridworld import objects as obj
from .harness import load_artifacts
from .planner import DEFAULT_BUDGET, EXHAUSTED, EXPLORE, bfs_plan, replay_plan
from .rules import RuleSet

PROTO_VERSION = 1


def _rle(grid: np.ndarray) -> list[list[int]]:
    flat = grid.flatten()
    out = []
    val, count = int(flat[0]), 1
    for v in flat[1:]:
        if int(v) == val:
            count += 1
        else:
            out.append([val, count])
            val, count = int(v), 1
    out.append([val, count])
    return out


class Session:
    """One live environment plus its rules, recording, and lock."""

    def __init__(self, sid: str, config: dict):
        self.sid = sid
        self.config = config
        self.mode = config.get("mode", "human_demo")
        self.learn = bool(config.get("learn", True))
        self.budget = int(config.get("budget", DEFAULT_BUDGET))
        self.lock = threading.Lock()
        self.records: list[TrajectoryRecord] = []
        self.episode = 0

        game = config["game"]
        size = int(config["size"])
        if game not in (obj.SOKOBAN, obj.DOORKEY):
            raise VrrError(f"unknown game {game!r}")
        if size < 5:
            raise VrrError("size must be >= 5")
        self.level = gw.generate(game, int(config.get("seed", 0)), size,
                                 int(config.get("boxes", 1)),
                                 int(config.get("rotation", 0)))
        rules_path = config.get("rules_path")
        if rules_path:
            self.rules, self.pipeline = load_artifacts(rules_path)
            if self.rules.kind != game:
                raise VrrError(
                    f"rule file is for {self.rules.kind!r}, session wants {game!r}")
        else:
            tc = TrainConfig(kind=game, size=size,
                             n_boxes=int(config.get("boxes", 1)),
                             seed=int(config.get("seed", 0)))
            self.pipeline = perception_warmup(_level_stream(tc, "warm"),
                                              tc.warmup_steps, 16, tc.seed)
            self.rules = self.pipeline.new_ruleset(game)
        self.obs = self.pipeline.observe(self.level)
        self.pos = self.pipeline.locate(self.obs)

    # -- payload builders -------------------------------------------------

    def state_payload(self) -> dict:
        return {
            "type": "state",
            "session": self.sid,
            "shape": list(self.obs.shape),
            "grid": _rle(self.obs),
            "agent": list(self.pos),
            "done": self.level.done,
            "reward": self.records[-1].reward if self.records else 0.0,
            "rule_count": len(self.rules),
            "sprites": {str(i): self.pipeline.vocab.tile_sha(i)
                        for i in range(len(self.pipeline.vocab))},
        }

    def _rule_payload(self, rule) -> dict:
        return {
            "action": rule.action,
            "reward": rule.reward,
            "identity": rule.identity,
            "before": [list(c) for c in rule.before.cells],
            "after": [list(c) for c in rule.after.cells],
            "ordinal": rule.ordinal,
        }

    # -- message handlers --------------------------------------------------

    def act(self, action: int) -> dict:
        if self.mode != "human_demo":
            raise VrrError("act is only valid in human_demo mode")
        if self.level.done:
            raise VrrError("episode is terminal; create a new session")
        out = gw.step(self.level, action)
        nxt = self.pipeline.observe(out.next_state)
        self.records.append(TrajectoryRecord(
            episode=self.episode, step=len(self.records), action=action,
            reward=out.reward, done=out.done, agent_pos=self.pos,
            s=self.obs, s_next=nxt))
        new_rules = []
        if self.learn:
            learned = self.rules.learn(self.obs, nxt, action, out.reward, self.pos)
            if learned is not None:
                new_rules.append(self._rule_payload(learned))
        changed = [[int(r), int(c), int(nxt[r, c])]
                   for r, c in np.argwhere(self.obs != nxt)]
        if not out.done:
            self.pos = self.pipeline.track(self.obs, self.pos, nxt)
            self.rules.agent_ids = self.pipeline.identity.ids
        self.level, self.obs = out.next_state, nxt
        return {"type": "delta", "session": self.sid, "cells": changed,
                "reward": out.reward, "done": out.done,
                "new_rules": new_rules, "rule_count": len(self.rules)}

    def agent_step(self) -> dict:
        if self.mode != "agent_watch":
            raise VrrError("agent_step is only valid in agent_watch mode")
        if self.level.done:
            raise VrrError("episode is terminal; create a new session")
        plan = bfs_plan(self.rules, self.obs, self.pos, self.budget)
        predicted: list[dict] = []
        executed = 0
        if plan.kind != EXHAUSTED:
            for pred in replay_plan(self.rules, self.obs, self.pos, plan.actions):
                if pred.next_state is not None:
                    predicted.append({"grid": _rle(pred.next_state),
                                      "reward": pred.reward})
                else:
                    predicted.append({"unknown": True})
            actions = plan.actions
            if plan.kind == EXPLORE and not self.learn:
                actions = actions[:-1]
            for action in actions:
                out = gw.step(self.level, action)
                nxt = self.pipeline.observe(out.next_state)
                self.records.append(TrajectoryRecord(
                    episode=self.episode, step=len(self.records),
                    action=action, reward=out.reward, done=out.done,
                    agent_pos=self.pos, s=self.obs, s_next=nxt))
                if self.learn:
                    self.rules.learn(self.obs, nxt, action, out.reward, self.pos)
                if not out.done:
                    self.pos = self.pipeline.track(self.obs, self.pos, nxt)
                    self.rules.agent_ids = self.pipeline.identity.ids
                self.level, self.obs = out.next_state, nxt
                executed += 1
                if out.done:
                    break
        return {"type": "plan", "session": self.sid, "kind": plan.kind,
                "actions": plan.actions, "predicted": predicted,
                "executed": executed, "rule_count": len(self.rules)}

    def export(self) -> dict:
        self.rules.vocab_hash = self.pipeline.vocab.content_hash()
        log = write_trajectory_log(self.records, self.level.kind,
                                   self.obs.shape,
                                   self.pipeline.vocab.content_hash())
        return {"type": "export", "session": self.sid, "log": log,
                "records": len(self.records)}


class SessionRegistry:
    def __init__(self, rules_path: str | None = None):
        self.rules_path = rules_path
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self._counter = 0

    def create(self, config: dict) -> Session:
        with self.lock:
            self._counter += 1
            sid = f"s{self._counter}"
        if self.rules_path and "rules_path" not in config:
            config["rules_path"] = self.rules_path
        session = Session(sid, config)
        with self.lock:
            self.sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        with self.lock:
            session = self.sessions.get(sid)
        if session is None:
            raise VrrError(f"unknown session {sid!r}")
        return session

    def handle(self, msg: dict) -> list[dict]:
        """Process one message, returning the replies in order."""
        kind = msg.get("type")
        if kind == "hello":
            return [{"type": "hello", "proto_version": PROTO_VERSION}]
        if kind == "create":
            session = self.create(dict(msg.get("config", {})))
            with session.lock:
                return [{"type": "created", "session": session.sid},
                        session.state_payload()]
        if kind in ("act", "agent_step", "export", "state"):
            session = self.get(str(msg.get("session")))
            with session.lock:
                if kind == "act":
                    return [session.act(int(msg["action_id"]))]
                if kind == "agent_step":
                    return [session.agent_step(), session.state_payload()]
                if kind == "export":
                    return [session.export()]
                return [session.state_payload()]
        raise VrrError(f"unknown message type {kind!r}")


def _error_payload(e: Exception) -> dict:
    return {"type": "error", "code": type(e).__name__, "msg": str(e)}


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self):
        registry: SessionRegistry = self.server.registry  # type: ignore[attr-defined]
        for raw in self.rfile:
            line = raw.strip()
            if not line:
                continue
            try:
                replies = registry.handle(json.loads(line))
            except (VrrError, ValueError, KeyError) as e:
                replies = [_error_payload(e)]
            for reply in replies:
                self.wfile.write((json.dumps(reply) + "\n").encode())
            self.wfile.flush()


class LineServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, addr, registry: SessionRegistry):
        super().__init__(addr, _LineHandler)
        self.registry = registry


# -- minimal WebSocket bridge (text frames, no fragmentation) --------------

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _ws_read_frame(sock: socket.socket) -> str | None:
    head = _recv_exact(sock, 2)
    if head is None:
        return None
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        ext = _recv_exact(sock, 2)
        length = struct.unpack(">H", ext)[0]
    elif length == 127:
        ext = _recv_exact(sock, 8)
        length = struct.unpack(">Q", ext)[0]
    mask = _recv_exact(sock, 4) if masked else b"\x00" * 4
    payload = _recv_exact(sock, length) if length else b""
    if payload is None:
        return None
    if opcode == 0x8:  # close
        return None
    data = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return data.decode("utf-8", errors="replace")


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _ws_send_text(sock: socket.socket, text: str) -> None:
    payload = text.encode()
    header = b"\x81"
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 65536:
        header += bytes([126]) + struct.pack(">H", n)
    else:
        header += bytes([127]) + struct.pack(">Q", n)
    sock.sendall(header + payload)


def _ws_client(sock: socket.socket, registry: SessionRegistry) -> None:
    try:
        request = b""
        while b"\r\n\r\n" not in request:
            chunk = sock.recv(4096)
            if not chunk:
                return
            request += chunk
        headers = {}
        for line in request.decode(errors="replace").split("\r\n")[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key", "")
        sock.sendall((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {_ws_accept_key(key)}\r\n\r\n"
        ).encode())
        while True:
            text = _ws_read_frame(sock)
            if text is None:
                return
            try:
                replies = registry.handle(json.loads(text))
            except (VrrError, ValueError, KeyError) as e:
                replies = [_error_payload(e)]
            for reply in replies:
                _ws_send_text(sock, json.dumps(reply))
    finally:
        sock.close()


def _ws_listener(port: int, registry: SessionRegistry) -> socket.socket:
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind(("127.0.0.1", port))
    listener.listen()

    def loop():
        while True:
            try:
                client, _ = listener.accept()
            except OSError:
                return
            threading.Thread(target=_ws_client, args=(client, registry),
                             daemon=True).start()

    threading.Thread(target=loop, daemon=True).start()
    return listener


def serve_forever(port: int = 7601, ws_port: int | None = None,
                  rules_path: str | None = None) -> None:
    registry = SessionRegistry(rules_path)
    server = LineServer(("127.0.0.1", port), registry)
    if ws_port:
        _ws_listener(ws_port, registry)
        print(f"ws bridge on ws://127.0.0.1:{ws_port}")
    print(f"session server on 127.0.0.1:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_background(port: int = 0, ws_port: int | None = None,
                     rules_path: str | None = None):
    """Start a server on an ephemeral port for tests; returns (server, port)."""
    registry = SessionRegistry(rules_path)
    server = LineServer(("127.0.0.1", port), registry)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    ws = _ws_listener(ws_port, registry) if ws_port is not None else None
    return server, server.server_address[1], ws
