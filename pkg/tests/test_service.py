"""Session service: REST endpoints, WebSocket protocol, role gating."""
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings
from hypothesis import strategies as st

from camshare.config import EngineConfig
from camshare.engine import Engine
from camshare.protocol import (ROLE_PERMISSIONS, ProtocolError, check_role,
                               message_to_event, parse_client_message)
from camshare.scene import reference_scene
from camshare.service import create_app

ALL_MESSAGE_EXAMPLES = {
    "set_target_pixel": {"type": "set_target_pixel", "u": 640, "v": 360},
    "set_target_3d": {"type": "set_target_3d", "position": [0.6, 0.0, 0.2]},
    "adjust": {"type": "adjust", "kind": "zoom", "magnitude": 1.0},
    "reset": {"type": "reset"},
    "mode_select": {"type": "mode_select", "mode": "robot_led"},
    "annotate_begin": {"type": "annotate_begin"},
    "annotate_end": {"type": "annotate_end"},
    "annotation": {"type": "annotation", "shape": "pin", "points": [[1, 2]]},
    "point_slider": {"type": "point_slider", "enabled": True},
    "freedrive_goal": {"type": "freedrive_goal", "q": [0, 0.4, 1.9, -0.45, 0, 0.15]},
}


@pytest.fixture()
def engine():
    cfg = EngineConfig()
    cfg.solver.test_mode = True
    cfg.session.snapshot_divisor = 1
    return Engine(reference_scene(), cfg)


@pytest.fixture()
def client(engine):
    app = create_app(engine, run_loop=False)
    with TestClient(app) as tc:
        tc.engine = engine
        yield tc


class TestRest:
    def test_health(self, client):
        data = client.get("/health").json()
        assert data["status"] == "ok"
        assert data["tick_rate"] == 60.0

    def test_scene_document(self, client):
        data = client.get("/scene").json()
        assert "robot" in data["scene"]
        assert data["protocol_version"] >= 1

    def test_state_after_tick(self, client):
        client.engine.tick()
        data = client.get("/state").json()
        assert data["tick"] == 1


class TestParse:
    def test_every_message_kind_parses(self):
        for example in ALL_MESSAGE_EXAMPLES.values():
            parse_client_message(json.dumps(example))

    def test_malformed_json_reports_position(self):
        with pytest.raises(ProtocolError) as exc:
            parse_client_message("{bad")
        assert "position" in str(exc.value)

    def test_unknown_type_rejected(self):
        with pytest.raises(ProtocolError):
            parse_client_message({"type": "warp_drive"})

    def test_missing_field_named(self):
        with pytest.raises(ProtocolError) as exc:
            parse_client_message({"type": "adjust", "kind": "zoom"})
        assert "magnitude" in str(exc.value)


class TestRoleGating:
    def test_permission_table(self):
        assert check_role("helper", "point_slider") is None
        assert check_role("worker", "point_slider") is not None
        assert check_role("worker", "freedrive_goal") is None
        assert check_role("helper", "freedrive_goal") is not None
        assert check_role("spectator", "reset") is not None

    @settings(max_examples=120, deadline=None)
    @given(st.sampled_from(["helper", "worker"]),
           st.sampled_from(sorted(ALL_MESSAGE_EXAMPLES)))
    def test_forbidden_pairs_never_produce_events(self, role, msg_type):
        cfg = EngineConfig()
        cfg.solver.test_mode = True
        engine = Engine(reference_scene(), cfg)
        event, err = message_to_event(role, ALL_MESSAGE_EXAMPLES[msg_type],
                                      0.0, engine)
        if msg_type in ROLE_PERMISSIONS[role]:
            assert err is None and event is not None
        else:
            assert event is None and "may not send" in err


class TestWebSocket:
    def test_two_clients_identical_snapshot_streams(self, client):
        with client.websocket_connect("/ws?role=helper") as a, \
                client.websocket_connect("/ws?role=worker") as b:
            for _ in range(5):
                client.engine.tick()
            stream_a = [a.receive_text() for _ in range(5)]
            stream_b = [b.receive_text() for _ in range(5)]
            assert stream_a == stream_b

    def test_set_target_round_trip(self, client):
        with client.websocket_connect("/ws?role=helper") as ws:
            ws.send_text(json.dumps(ALL_MESSAGE_EXAMPLES["set_target_3d"]))
            assert ws.receive_json()["type"] == "ack"
            snap = client.engine.tick()
            np.testing.assert_allclose(snap["mode_state"]["target"],
                                       [0.6, 0.0, 0.2])

    def test_worker_blocked_from_helper_controls(self, client):
        with client.websocket_connect("/ws?role=worker") as ws:
            ws.send_text(json.dumps(ALL_MESSAGE_EXAMPLES["point_slider"]))
            reply = ws.receive_json()
            assert reply["type"] == "error"
            assert "may not send" in reply["message"]

    def test_malformed_json_error_reply(self, client):
        with client.websocket_connect("/ws?role=helper") as ws:
            ws.send_text("{oops")
            reply = ws.receive_json()
            assert reply["type"] == "error"
            assert "position" in reply["message"]

    def test_unknown_role_rejected(self, client):
        from starlette.websockets import WebSocketDisconnect
        with pytest.raises(WebSocketDisconnect):
            with client.websocket_connect("/ws?role=ghost") as ws:
                ws.receive_text()

    def test_annotation_relayed_to_other_client(self, client):
        with client.websocket_connect("/ws?role=helper") as h, \
                client.websocket_connect("/ws?role=worker") as w:
            h.send_text(json.dumps(ALL_MESSAGE_EXAMPLES["annotation"]))
            assert h.receive_json()["type"] == "ack"
            relay = w.receive_json()
            assert relay["type"] == "annotation"
            assert relay["from"] == "helper"
            assert relay["data"]["shape"] == "pin"

    def test_pixel_target_resolves_and_acks(self, client):
        with client.websocket_connect("/ws?role=helper") as ws:
            ws.send_text(json.dumps(ALL_MESSAGE_EXAMPLES["set_target_pixel"]))
            assert ws.receive_json()["type"] == "ack"
            snap = client.engine.tick()
            assert snap["mode_state"]["target"] is not None
