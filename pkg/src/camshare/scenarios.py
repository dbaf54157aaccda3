"""Built-in scenario builders and the scenario file loader.

A scenario file is JSON with an optional scripted actor (keyframed hand
and body trajectories) and a list of timed client commands that reuse the
wire-protocol message schema:

    {"actor": {"keyframes": [{"t": 0.0, "hand": [[x,y,z]*21] | null,
                              "body": [[x,y,z] | null]*25 | null}]},
     "commands": [{"t": 0.1, "role": "helper", "message": {...}}],
     "ticks": 600}
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .engine import ScriptedCommand
from .perception import ActorScript, make_body, make_hand, script_from_dict
from .scene import SceneError


def load_scenario(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise SceneError(f"scenario file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SceneError(f"{p}: scenario must be a JSON object")
    for k, cmd in enumerate(data.get("commands", [])):
        for key in ("t", "role", "message"):
            if key not in cmd:
                raise SceneError(f"{p}: commands[{k}] missing '{key}'")
    return data


def scenario_parts(data: dict) -> tuple[ActorScript | None, list[ScriptedCommand], int]:
    actor = None
    if data.get("actor"):
        actor = script_from_dict(data["actor"])
    commands = [ScriptedCommand(float(c["t"]), str(c["role"]), dict(c["message"]))
                for c in data.get("commands", [])]
    commands.sort(key=lambda c: c.t)
    return actor, commands, int(data.get("ticks", 600))


# --- builders for the shipped scenarios ---

def _hand_keyframes(path_fn, t0: float, t1: float, steps: int,
                    pointing: bool = False, body_pelvis=None) -> list[dict]:
    frames = []
    for k in range(steps + 1):
        t = t0 + (t1 - t0) * k / steps
        wrist = path_fn(t)
        kf = {"t": round(t, 6),
              "hand": make_hand(wrist, forward=(-1, 0, 0.15),
                                pointing=pointing).tolist()}
        if body_pelvis is not None:
            kf["body"] = make_body(body_pelvis).tolist()
        frames.append(kf)
    return frames


def orbit_scenario() -> dict:
    """Look at a desk point, then orbit for 5 s at 60 Hz."""
    target = [0.62, 0.05, 0.08]
    commands = [{"t": 0.1, "role": "helper",
                 "message": {"type": "set_target_3d", "position": target}}]
    # continuous orbit drag: one input per tick for 5 s starting at t=3
    tick = 1.0 / 60.0
    n = 300
    for k in range(n):
        commands.append({"t": round(3.0 + k * tick, 6), "role": "helper",
                         "message": {"type": "adjust", "kind": "orbit",
                                     "magnitude": 0.05, "direction": [1.0, 0.15]}})
    return {"commands": commands, "ticks": 560}


def point_scenario() -> dict:
    """Worker points at a spot; helper enables the slider; camera closes to
    the standoff distance."""
    fingertip_anchor = np.array([0.66, -0.12, 0.16])
    wrist = fingertip_anchor + np.array([0.15, 0.02, -0.03])

    def path(t):
        return wrist

    keyframes = _hand_keyframes(path, 0.0, 8.0, 4, pointing=True)
    commands = [{"t": 0.2, "role": "helper",
                 "message": {"type": "point_slider", "enabled": True}}]
    return {"actor": {"keyframes": keyframes}, "commands": commands, "ticks": 480}


def tracking_scenario() -> dict:
    """Robot-led hand tracking: the hand draws a slow circle for 10 s."""
    center = np.array([0.62, 0.0, 0.22])

    def path(t):
        phase = 2 * math.pi * (t / 10.0)
        return center + np.array([0.04 * math.sin(phase),
                                  0.11 * math.cos(phase),
                                  0.05 * math.sin(phase)])

    keyframes = _hand_keyframes(path, 0.0, 12.0, 240,
                                body_pelvis=np.array([1.25, 0.0, 0.05]))
    commands = [{"t": 0.1, "role": "helper",
                 "message": {"type": "mode_select", "mode": "robot_led"}}]
    return {"actor": {"keyframes": keyframes}, "commands": commands, "ticks": 720}


def collision_scenario() -> dict:
    """Drive the view toward the monitor so the approach must be braked by
    the collision objective, never by contact."""
    commands = [
        {"t": 0.1, "role": "helper",
         "message": {"type": "set_target_3d", "position": [0.62, -0.45, 0.16]}},
    ]
    tick = 1.0 / 60.0
    for k in range(240):
        commands.append({"t": round(2.0 + k * tick, 6), "role": "helper",
                         "message": {"type": "adjust", "kind": "zoom",
                                     "magnitude": 0.6}})
    return {"commands": commands, "ticks": 480}


def brake_scenario() -> dict:
    """Simultaneous worker freedrive and helper adjust latch the brake;
    a reset recovers."""
    goal = [0.15, 0.35, 1.85, -0.40, 0.10, 0.12]
    return {"commands": [
        {"t": 0.1, "role": "worker",
         "message": {"type": "mode_select", "mode": "worker_led"}},
        {"t": 1.0, "role": "worker", "message": {"type": "freedrive_goal", "q": goal}},
        {"t": 1.05, "role": "helper",
         "message": {"type": "adjust", "kind": "zoom", "magnitude": 1.0}},
        {"t": 4.0, "role": "helper", "message": {"type": "reset"}},
    ], "ticks": 480}


BUILTIN_SCENARIOS = {
    "orbit": orbit_scenario,
    "point": point_scenario,
    "tracking": tracking_scenario,
    "collision": collision_scenario,
    "brake": brake_scenario,
}


def write_builtin(outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in BUILTIN_SCENARIOS.items():
        path = outdir / f"{name}.json"
        path.write_text(json.dumps(builder(), indent=None, separators=(",", ":")))
        written.append(path)
    return written


if __name__ == "__main__":
    import sys
    target_dir = sys.argv[1] if len(sys.argv) > 1 else "."
    for p in write_builtin(target_dir):
        print(p)
