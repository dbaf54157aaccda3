"""Scene file loading: robot model, environment shapes, camera intrinsics.

The scene file is JSON. Fixed transforms accept either
{"position": [...], "quaternion": [w,x,y,z]} or {"transform": [16 floats,
row-major]}. Joint limits default to +/- 2 pi when omitted.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import quat_normalize, quat_to_matrix
from .kinematics import JointSpec, LinkWrapper, RobotModel
from .shapes import Capsule, ConvexShape, Cuboid, PlacedShape, Sphere


class SceneError(ValueError):
    """Malformed scene or scenario file; message names the offending field."""


@dataclass(frozen=True)
class Intrinsics:
    width: int = 1280
    height: int = 720
    hfov_deg: float = 60.0

    @property
    def focal(self) -> float:
        return self.width / (2.0 * math.tan(math.radians(self.hfov_deg) / 2.0))

    def project(self, p_cam: np.ndarray) -> tuple[float, float] | None:
        """Camera-frame point (+z forward, +y left, +x up) to pixel, or None if behind."""
        if p_cam[2] <= 1e-9:
            return None
        u = self.width / 2.0 - self.focal * (p_cam[1] / p_cam[2])
        v = self.height / 2.0 - self.focal * (p_cam[0] / p_cam[2])
        return (u, v)

    def back_project(self, u: float, v: float) -> np.ndarray:
        """Pixel to a unit ray direction in the camera frame."""
        d = np.array([(self.height / 2.0 - v) / self.focal,
                      (self.width / 2.0 - u) / self.focal,
                      1.0])
        return d / np.linalg.norm(d)

    def contains(self, u: float, v: float) -> bool:
        return 0.0 <= u < self.width and 0.0 <= v < self.height


@dataclass
class SceneShape:
    shape_id: str
    placed: PlacedShape
    dynamic: bool = False


@dataclass
class Scene:
    model: RobotModel
    reset_config: np.ndarray
    shapes: list[SceneShape]
    intrinsics: Intrinsics = field(default_factory=Intrinsics)
    source: dict = field(default_factory=dict)   # original JSON, kept for logs

    def static_placed(self) -> list[PlacedShape]:
        return [s.placed for s in self.shapes]


def _transform_from(data: dict, where: str) -> tuple[np.ndarray, np.ndarray]:
    if "transform" in data:
        t = np.asarray(data["transform"], dtype=float)
        if t.size != 16:
            raise SceneError(f"{where}: 'transform' must hold 16 row-major floats")
        T = t.reshape(4, 4)
        return T[:3, 3].copy(), T[:3, :3].copy()
    pos = np.asarray(data.get("position", [0.0, 0.0, 0.0]), dtype=float)
    if pos.shape != (3,):
        raise SceneError(f"{where}: 'position' must be a 3-vector")
    quat = np.asarray(data.get("quaternion", [1.0, 0.0, 0.0, 0.0]), dtype=float)
    if quat.shape != (4,):
        raise SceneError(f"{where}: 'quaternion' must be [w, x, y, z]")
    return pos, quat_to_matrix(quat_normalize(quat))


def shape_from_dict(data: dict, where: str) -> ConvexShape:
    kind = data.get("kind")
    params = data.get("params", {})
    try:
        if kind == "sphere":
            return Sphere(float(params["radius"]))
        if kind == "capsule":
            return Capsule(float(params["half_length"]), float(params["radius"]))
        if kind == "cuboid":
            return Cuboid(np.asarray(params["half_extents"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"{where}: bad '{kind}' params: {exc}") from exc
    raise SceneError(f"{where}: unknown shape kind '{kind}'")


def robot_from_dict(data: dict) -> RobotModel:
    joints_data = data.get("joints")
    if not joints_data:
        raise SceneError("robot: 'joints' list is required")
    joints = []
    for k, jd in enumerate(joints_data):
        where = f"robot.joints[{k}]"
        axis = np.asarray(jd.get("axis", [0, 0, 1]), dtype=float)
        if axis.shape != (3,) or np.linalg.norm(axis) == 0:
            raise SceneError(f"{where}: 'axis' must be a nonzero 3-vector")
        pos, rot = _transform_from(jd, where)
        joints.append(JointSpec(axis, pos, rot))
    n = len(joints)

    two_pi = 2.0 * math.pi
    lower = np.asarray(data.get("lower_limits", [-two_pi] * n), dtype=float)
    upper = np.asarray(data.get("upper_limits", [two_pi] * n), dtype=float)

    wrappers = []
    for k, wd in enumerate(data.get("link_wrappers", [])):
        where = f"robot.link_wrappers[{k}]"
        if "link" not in wd:
            raise SceneError(f"{where}: 'link' index is required")
        shape = shape_from_dict(wd, where)
        pos, rot = _transform_from(wd, where)
        wrappers.append(LinkWrapper(int(wd["link"]), shape, pos, rot))

    mount_pos, mount_rot = _transform_from(data.get("camera_mount", {}), "robot.camera_mount")
    return RobotModel(tuple(joints), lower, upper, tuple(wrappers), mount_pos, mount_rot)


def scene_from_dict(data: dict) -> Scene:
    if "robot" not in data:
        raise SceneError("scene: 'robot' section is required")
    model = robot_from_dict(data["robot"])

    reset = np.asarray(data.get("reset_config", model.midpoint_config()), dtype=float)
    if reset.shape != (model.joint_count,):
        raise SceneError("scene: 'reset_config' length must match joint count")
    if np.any(reset < model.lower_limits) or np.any(reset > model.upper_limits):
        raise SceneError("scene: 'reset_config' must lie within joint limits")

    shapes = []
    seen_ids = set()
    for k, sd in enumerate(data.get("shapes", [])):
        where = f"shapes[{k}]"
        sid = sd.get("id", f"shape{k}")
        if sid in seen_ids:
            raise SceneError(f"{where}: duplicate shape id '{sid}'")
        seen_ids.add(sid)
        shape = shape_from_dict(sd, where)
        pos, rot = _transform_from(sd, where)
        shapes.append(SceneShape(sid, PlacedShape(shape, pos, rot, shape_id=sid),
                                 bool(sd.get("dynamic", False))))

    intr_data = data.get("intrinsics", {})
    intrinsics = Intrinsics(int(intr_data.get("width", 1280)),
                            int(intr_data.get("height", 720)),
                            float(intr_data.get("hfov_deg", 60.0)))
    return Scene(model, reset, shapes, intrinsics, source=data)


def load_scene(path: str | Path) -> Scene:
    p = Path(path)
    if not p.exists():
        raise SceneError(f"scene file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{p}: invalid JSON: {exc}") from exc
    try:
        return scene_from_dict(data)
    except SceneError as exc:
        raise SceneError(f"{p}: {exc}") from exc


def reference_scene_dict() -> dict:
    """The built-in desk scene: a 6R arm with wrist pan/tilt, a desk slab,
    and two obstacles. Link lengths are stored here as data, not code."""
    return {
        "robot": {
            "joints": [
                {"axis": [0, 0, 1], "position": [0, 0, 0.0892]},
                {"axis": [0, 1, 0], "position": [0, 0, 0.1519]},
                {"axis": [0, 1, 0], "position": [0, 0, 0.4250]},
                {"axis": [0, 1, 0], "position": [0, 0, 0.3922]},
                {"axis": [0, 0, 1], "position": [0, 0, 0.0946]},
                {"axis": [0, 1, 0], "position": [0, 0, 0.0823]},
            ],
            "lower_limits": [-3.1416, -2.3, -2.7, -2.3, -3.1416, -2.3],
            "upper_limits": [3.1416, 2.3, 2.7, 2.3, 3.1416, 2.3],
            "link_wrappers": [
                {"link": 1, "kind": "capsule",
                 "params": {"half_length": 0.155, "radius": 0.060},
                 "position": [0, 0, 0.215]},
                {"link": 2, "kind": "capsule",
                 "params": {"half_length": 0.145, "radius": 0.050},
                 "position": [0, 0, 0.195]},
                {"link": 4, "kind": "sphere", "params": {"radius": 0.045},
                 "position": [0, 0, 0.040]},
                {"link": 5, "kind": "capsule",
                 "params": {"half_length": 0.050, "radius": 0.050},
                 "position": [0, 0, 0.030]},
            ],
            "camera_mount": {"position": [0, 0, 0.0600],
                             "quaternion": [0, 0, 0, 1]},
        },
        "reset_config": [0.0, 0.40, 1.90, -0.45, 0.0, 0.15],
        "intrinsics": {"width": 1280, "height": 720, "hfov_deg": 60.0},
        "shapes": [
            {"id": "desk", "kind": "cuboid",
             "params": {"half_extents": [0.75, 0.9, 0.025]},
             "position": [0.35, 0.0, -0.025]},
            {"id": "monitor", "kind": "cuboid",
             "params": {"half_extents": [0.05, 0.18, 0.16]},
             "position": [0.62, -0.45, 0.16]},
            {"id": "lamp", "kind": "sphere", "params": {"radius": 0.10},
             "position": [0.25, 0.5, 0.35]},
        ],
    }


def reference_scene() -> Scene:
    return scene_from_dict(reference_scene_dict())
