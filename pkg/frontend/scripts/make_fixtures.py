#!/usr/bin/env python3
"""Generate console test fixtures from the real engine.

Writes test/fixtures/roundtrip.json (pixel -> server-resolved 3D target,
with the camera pose and intrinsics used) and test/fixtures/snapshots.json
(real snapshots: nominal, braked, annotating, tracking-lost) so the
console tests verify against actual server behavior.

Run from the frontend directory: python3 scripts/make_fixtures.py
"""
import json
import sys
from pathlib import Path

import numpy as np

from camshare.arbitration import InteractionEvent
from camshare.config import EngineConfig
from camshare.engine import Engine
from camshare.scenarios import brake_scenario, scenario_parts
from camshare.scene import reference_scene, reference_scene_dict

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def roundtrip_cases() -> dict:
    cfg = EngineConfig()
    cfg.solver.test_mode = True
    engine = Engine(reference_scene(), cfg)
    # give the camera a non-trivial pose first
    engine.submit_event(InteractionEvent(
        "helper", "set_target", 0.0, {"target": np.array([0.7, 0.25, 0.15])}))
    engine.run_ticks(90)

    from camshare.kinematics import forward_kinematics
    pose = forward_kinematics(engine.scene.model, engine.q)
    intr = engine.scene.intrinsics
    rng = np.random.default_rng(7)
    cases = []
    for _ in range(40):
        u = float(rng.uniform(40, intr.width - 40))
        v = float(rng.uniform(40, intr.height - 40))
        target = engine.resolve_click(u, v)
        cases.append({"u": u, "v": v, "target": [float(x) for x in target]})
    return {
        "camera": {"position": [float(x) for x in pose.position],
                   "quaternion": [float(x) for x in pose.orientation]},
        "intrinsics": {"width": intr.width, "height": intr.height,
                       "hfov_deg": intr.hfov_deg},
        "cases": cases,
    }


def snapshot_cases() -> dict:
    cfg = EngineConfig()
    cfg.solver.test_mode = True
    actor, commands, _ = scenario_parts(brake_scenario())
    engine = Engine(reference_scene(), cfg, actor=actor, scripted_commands=commands)
    snaps = engine.run_ticks(300)
    braked = next(s for s in snaps if s["mode_state"]["braked"])
    nominal = snaps[30]

    cfg2 = EngineConfig()
    cfg2.solver.test_mode = True
    engine2 = Engine(reference_scene(), cfg2)
    engine2.submit_event(InteractionEvent("helper", "annotate_begin", 0.0, {}))
    annotating = engine2.run_ticks(3)[-1]

    tracking_lost = json.loads(json.dumps(nominal))
    tracking_lost["mode_state"]["tracking_lost"] = True
    return {"nominal": nominal, "braked": braked, "annotating": annotating,
            "tracking_lost": tracking_lost}


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "roundtrip.json").write_text(json.dumps(roundtrip_cases(), indent=1))
    (OUT / "snapshots.json").write_text(json.dumps(snapshot_cases(), indent=1))
    (OUT / "scene.json").write_text(json.dumps(reference_scene_dict(), indent=1))
    print(f"fixtures written to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
