"""Live serve endpoint driven by scripted WebSocket and UDP clients."""
import json
import socket
import time

import pytest
from fastapi.testclient import TestClient

from rodmatrix.osc import decode_osc_frame, measure_latency
from rodmatrix.pipeline import parse_session_config
from rodmatrix.server import create_app, parse_client_message


def make_config(**overrides):
    cfg = {"mode": "additive", "osc_listen_port": 0}
    cfg.update(overrides)
    return parse_session_config(cfg)


def recv_until(ws, predicate, limit=60):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if predicate(msg):
            return msg
    raise AssertionError("no matching message within the read limit")


def test_connect_announces_the_current_mode():
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            first = json.loads(ws.receive_text())
            assert first == {"type": "mode", "name": "additive"}


def test_set_rod_zero_reaches_127_then_springs_back():
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"type": "set", "index": 0, "value": 127}))
            frame = recv_until(
                ws, lambda m: m["type"] == "frame" and m["positions"][0] == 127
            )
            assert frame["positions"][0] == 127
            # No further input: one tick of hold, then the spring wins.
            seen = []
            for _ in range(20):
                msg = json.loads(ws.receive_text())
                if msg["type"] != "frame":
                    continue
                seen.append(msg["positions"][0])
                if msg["positions"][0] == 0:
                    break
            assert seen[-1] == 0
            dropping = [v for v in seen if v < 127]
            assert dropping == sorted(dropping, reverse=True)


def test_frame_seq_increments_mod_128():
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            frames = []
            while len(frames) < 5:
                msg = json.loads(ws.receive_text())
                if msg["type"] == "frame":
                    frames.append(msg)
            for a, b in zip(frames, frames[1:]):
                assert b["seq"] == (a["seq"] + 1) % 128
            assert all(len(f["positions"]) == 144 for f in frames)


def test_sculpt_batch_applies_every_update():
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            updates = [
                {"index": 5, "value": 100},
                {"index": 17, "value": 90},
                {"index": 130, "value": 64},
            ]
            ws.send_text(json.dumps({"type": "sculpt", "updates": updates}))
            recv_until(
                ws,
                lambda m: m["type"] == "frame"
                and m["positions"][5] == 100
                and m["positions"][17] == 90
                and m["positions"][130] == 64,
            )


def test_two_clients_with_disjoint_sculpts_are_both_visible():
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
            a.send_text(json.dumps({"type": "sculpt", "updates": [{"index": 3, "value": 100}]}))
            b.send_text(json.dumps({"type": "sculpt", "updates": [{"index": 7, "value": 90}]}))
            recv_until(
                a,
                lambda m: m["type"] == "frame"
                and m["positions"][3] > 0
                and m["positions"][7] > 0,
            )


def test_malformed_messages_get_error_replies_and_the_session_survives():
    bad_messages = [
        "not json",
        json.dumps({"type": "set", "index": 999, "value": 1}),
        json.dumps({"type": "set", "index": 0, "value": 128}),
        json.dumps({"type": "set", "index": 0, "value": 5, "zap": 1}),
        json.dumps({"type": "sculpt", "updates": []}),
        json.dumps({"type": "sculpt"}),
        json.dumps({"type": "teleport"}),
        json.dumps([1, 2, 3]),
    ]
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            for raw in bad_messages:
                ws.send_text(raw)
                reply = recv_until(ws, lambda m: m["type"] == "error")
                assert reply["reason"]
            ws.send_text(json.dumps({"type": "set", "index": 10, "value": 64}))
            recv_until(ws, lambda m: m["type"] == "frame" and m["positions"][10] == 64)


def test_mode_switching_acks_and_enforces_resources(tmp_path):
    with TestClient(create_app(make_config())) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()  # initial mode announcement
            ws.send_text(json.dumps({"type": "mode", "name": "drums"}))
            ack = recv_until(ws, lambda m: m["type"] == "mode")
            assert ack["name"] == "drums"
            ws.send_text(json.dumps({"type": "mode", "name": "granular"}))
            err = recv_until(ws, lambda m: m["type"] == "error")
            assert "source" in err["reason"]
            ws.send_text(json.dumps({"type": "mode", "name": "fm"}))
            assert recv_until(ws, lambda m: m["type"] == "error")["reason"]

    with_source = make_config(mode="granular", source_wav=str(tmp_path / "s.wav"))
    with TestClient(create_app(with_source)) as client:
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"type": "mode", "name": "granular"}))
            assert recv_until(ws, lambda m: m["type"] == "mode")["name"] == "granular"


def test_frames_and_osc_flow_with_no_clients_connected():
    sink = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sink.bind(("127.0.0.1", 0))
    dest_port = sink.getsockname()[1]
    config = make_config(osc_destination=f"127.0.0.1:{dest_port}")
    app = create_app(config)
    with TestClient(app):
        time.sleep(0.7)
        session = app.state.session
        assert session.seq >= 15
        assert session.osc_packets >= 15
    sink.setblocking(False)
    packets = []
    while True:
        try:
            packets.append(sink.recv(4096))
        except BlockingIOError:
            break
    sink.close()
    assert len(packets) >= 10
    frame = decode_osc_frame(packets[0])
    assert len(frame.positions) == 144


def test_running_session_answers_latency_probes():
    app = create_app(make_config())
    with TestClient(app):
        port = app.state.session.osc_bound_port
        stats = measure_latency("127.0.0.1", port, 20)
    assert stats.received == 20
    assert stats.median_ms < 50.0


def test_tick_intervals_stay_near_the_frame_period():
    app = create_app(make_config())
    with TestClient(app):
        time.sleep(2.5)
        times = list(app.state.session.broadcast_times)
    intervals = [b - a for a, b in zip(times, times[1:])]
    assert len(intervals) >= 55
    mean_ms = 1000 * sum(intervals) / len(intervals)
    assert 33.33 * 0.8 <= mean_ms <= 33.33 * 1.2
    within = sum(1 for d in intervals if 33.33 * 0.8 <= d * 1000 <= 33.33 * 1.2)
    assert within / len(intervals) >= 0.9


class TestMessageParsing:
    def setup_method(self):
        self.config = make_config()

    def test_valid_set_and_sculpt(self):
        kind, payload = parse_client_message(
            json.dumps({"type": "set", "index": 3, "value": 7}), self.config
        )
        assert (kind, payload) == ("set", [(3, 7)])
        kind, payload = parse_client_message(
            json.dumps({"type": "sculpt", "updates": [{"index": 0, "value": 1}, {"index": 1, "value": 2}]}),
            self.config,
        )
        assert (kind, payload) == ("set", [(0, 1), (1, 2)])

    def test_type_strictness(self):
        for raw in (
            json.dumps({"type": "set", "index": True, "value": 7}),
            json.dumps({"type": "set", "index": 0, "value": 7.5}),
            json.dumps({"type": "set", "index": 0, "value": True}),
            json.dumps({"type": "set", "index": "0", "value": 7}),
            json.dumps({"type": "mode", "name": "granular", "extra": 1}),
            json.dumps({"type": 7}),
        ):
            kind, _ = parse_client_message(raw, self.config)
            assert kind == "error"
