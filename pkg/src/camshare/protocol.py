"""Wire protocol: JSON messages over a persistent duplex connection.

Clients connect with a role claim (helper or worker) and send one JSON
object per command; the server pushes snapshot/ack/error/diagnostic
messages. Scenario files reuse the exact same message schema, so headless
runs exercise the same parsing and gating paths as live consoles.

See docs/protocol.md for the full schema.
"""
from __future__ import annotations

import json
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

PROTOCOL_VERSION = 1

ROLES = ("helper", "worker")


class SetTargetPixel(BaseModel):
    type: Literal["set_target_pixel"]
    u: float
    v: float


class SetTarget3D(BaseModel):
    type: Literal["set_target_3d"]
    position: list[float] = Field(min_length=3, max_length=3)


class Adjust(BaseModel):
    type: Literal["adjust"]
    kind: Literal["zoom", "orbit", "shift"]
    magnitude: float
    direction: tuple[float, float] = (1.0, 0.0)


class Reset(BaseModel):
    type: Literal["reset"]


class ModeSelect(BaseModel):
    type: Literal["mode_select"]
    mode: Literal["helper_led", "robot_led", "worker_led"]


class AnnotateBegin(BaseModel):
    type: Literal["annotate_begin"]


class AnnotateEnd(BaseModel):
    type: Literal["annotate_end"]


class Annotation(BaseModel):
    """Overlay payload relayed between consoles; geometry is opaque here."""
    type: Literal["annotation"]
    shape: Literal["pin", "rectangle", "arrow"]
    points: list[list[float]]


class PointSlider(BaseModel):
    type: Literal["point_slider"]
    enabled: bool


class FreedriveGoal(BaseModel):
    type: Literal["freedrive_goal"]
    q: list[float]


ClientMessage = Annotated[
    Union[SetTargetPixel, SetTarget3D, Adjust, Reset, ModeSelect,
          AnnotateBegin, AnnotateEnd, Annotation, PointSlider, FreedriveGoal],
    Field(discriminator="type"),
]

_adapter: TypeAdapter = TypeAdapter(ClientMessage)

ROLE_PERMISSIONS: dict[str, frozenset[str]] = {
    "helper": frozenset({"set_target_pixel", "set_target_3d", "adjust", "reset",
                         "mode_select", "annotate_begin", "annotate_end",
                         "annotation", "point_slider"}),
    "worker": frozenset({"mode_select", "freedrive_goal"}),
}


class ProtocolError(Exception):
    def __init__(self, message: str, code: str = "bad_message"):
        super().__init__(message)
        self.code = code


def parse_client_message(raw: str | bytes | dict) -> ClientMessage:
    """Validate one inbound message; errors carry a parse position."""
    if isinstance(raw, (str, bytes)):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid JSON at position {exc.pos}: {exc.msg}",
                                "parse_error") from exc
    else:
        data = raw
    if not isinstance(data, dict):
        raise ProtocolError("message must be a JSON object", "parse_error")
    try:
        return _adapter.validate_python(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ProtocolError(f"invalid message field '{loc}': {first['msg']}",
                            "validation_error") from exc


def check_role(role: str, msg_type: str) -> str | None:
    """None when allowed, else a rejection message."""
    allowed = ROLE_PERMISSIONS.get(role)
    if allowed is None:
        return f"unknown role '{role}'"
    if msg_type not in allowed:
        return f"role '{role}' may not send '{msg_type}'"
    return None


def message_to_event(role: str, message: dict | str, timestamp: float, engine):
    """Parse, authorize, and convert one message into an interaction event.

    Returns (event_or_None, error_or_None). Annotation payloads produce a
    relay-only event; pixel targets resolve against the current camera
    pose and scene before entering arbitration.
    """
    from .arbitration import InteractionEvent
    from .kinematics import InvalidInputError

    try:
        msg = parse_client_message(message)
    except ProtocolError as exc:
        return None, str(exc)
    err = check_role(role, msg.type)
    if err is not None:
        return None, err

    if isinstance(msg, SetTargetPixel):
        try:
            target = engine.resolve_click(msg.u, msg.v)
        except InvalidInputError as exc:
            return None, str(exc)
        return InteractionEvent(role, "set_target", timestamp,
                                {"target": target, "pixel": [msg.u, msg.v]}), None
    if isinstance(msg, SetTarget3D):
        return InteractionEvent(role, "set_target", timestamp,
                                {"target": np.asarray(msg.position, dtype=float)}), None
    if isinstance(msg, Adjust):
        return InteractionEvent(role, "adjust", timestamp,
                                {"kind": msg.kind, "magnitude": msg.magnitude,
                                 "direction": list(msg.direction)}), None
    if isinstance(msg, Reset):
        return InteractionEvent(role, "reset", timestamp, {}), None
    if isinstance(msg, ModeSelect):
        return InteractionEvent(role, "mode_select", timestamp, {"mode": msg.mode}), None
    if isinstance(msg, AnnotateBegin):
        return InteractionEvent(role, "annotate_begin", timestamp, {}), None
    if isinstance(msg, AnnotateEnd):
        return InteractionEvent(role, "annotate_end", timestamp, {}), None
    if isinstance(msg, Annotation):
        return InteractionEvent(role, "annotation", timestamp,
                                {"shape": msg.shape, "points": msg.points}), None
    if isinstance(msg, PointSlider):
        return InteractionEvent(role, "point_slider", timestamp,
                                {"enabled": msg.enabled}), None
    if isinstance(msg, FreedriveGoal):
        return InteractionEvent(role, "freedrive_goal", timestamp,
                                {"q": np.asarray(msg.q, dtype=float)}), None
    return None, f"unhandled message type {msg.type}"
