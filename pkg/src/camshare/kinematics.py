"""Serial-chain forward kinematics and camera-frame conventions.

The camera frame convention is +z forward (optical axis), +y left, +x up,
with world up = +z. Each joint is revolute: its link transform is a fixed
offset followed by a rotation about the joint axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import axis_angle_matrix, matrix_to_quat, normalize, rigid_to_homogeneous


class InvalidInputError(ValueError):
    """Raised when an operation receives structurally invalid input."""


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: fixed parent offset, then rotation about `axis`."""
    axis: np.ndarray                 # unit vector, parent-link frame
    offset_position: np.ndarray      # fixed translation, parent-link frame
    offset_rotation: np.ndarray      # fixed 3x3 rotation, parent-link frame

    def __post_init__(self):
        object.__setattr__(self, "axis", normalize(np.asarray(self.axis, dtype=float)))
        object.__setattr__(self, "offset_position", np.asarray(self.offset_position, dtype=float))
        object.__setattr__(self, "offset_rotation", np.asarray(self.offset_rotation, dtype=float))


@dataclass(frozen=True)
class LinkWrapper:
    """Convex shape attached to a link frame (used for collision terms)."""
    link: int
    shape: "object"                  # ConvexShape; kept loose to avoid an import cycle
    offset_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    offset_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))


@dataclass(frozen=True)
class RobotModel:
    joints: tuple[JointSpec, ...]
    lower_limits: np.ndarray
    upper_limits: np.ndarray
    link_wrappers: tuple[LinkWrapper, ...]
    mount_position: np.ndarray       # camera mount: last link frame -> camera frame
    mount_rotation: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower_limits, dtype=float)
        hi = np.asarray(self.upper_limits, dtype=float)
        if lo.shape != (self.joint_count,) or hi.shape != (self.joint_count,):
            raise InvalidInputError("joint limit arrays must match joint count")
        if not np.all(lo < hi):
            raise InvalidInputError("every lower limit must be strictly below its upper limit")
        for w in self.link_wrappers:
            if not (0 <= w.link < self.joint_count):
                raise InvalidInputError(f"link wrapper references invalid link {w.link}")
        object.__setattr__(self, "lower_limits", lo)
        object.__setattr__(self, "upper_limits", hi)
        object.__setattr__(self, "mount_position", np.asarray(self.mount_position, dtype=float))
        object.__setattr__(self, "mount_rotation", np.asarray(self.mount_rotation, dtype=float))

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    def midpoint_config(self) -> np.ndarray:
        return 0.5 * (self.lower_limits + self.upper_limits)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower_limits, self.upper_limits)


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray
    orientation: np.ndarray          # unit quaternion (w, x, y, z)

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        q = np.asarray(self.orientation, dtype=float)
        if p.shape != (3,) or q.shape != (4,):
            raise InvalidInputError("pose requires a 3-vector position and 4-vector quaternion")
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise InvalidInputError("pose quaternion must be unit length")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)


@dataclass
class KinematicState:
    """FK evaluation cache: world link frames plus joint axes/origins.

    `link_rotations[i]`/`link_positions[i]` is the world frame of link i
    (after joint i's rotation). Joint axes/origins feed the analytic
    Jacobians of the pose-based objectives.
    """
    q: np.ndarray
    link_positions: np.ndarray       # (n, 3)
    link_rotations: np.ndarray       # (n, 3, 3)
    joint_origins: np.ndarray        # (n, 3)
    joint_axes: np.ndarray           # (n, 3) world-frame joint axes
    camera_position: np.ndarray
    camera_rotation: np.ndarray


def check_config(model: RobotModel, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.joint_count,):
        raise InvalidInputError(
            f"expected {model.joint_count} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InvalidInputError("joint angles must be finite")
    return q


def kinematic_state(model: RobotModel, q: np.ndarray) -> KinematicState:
    """Evaluate the chain once, caching everything gradient code needs."""
    q = check_config(model, q)
    n = model.joint_count
    link_positions = np.empty((n, 3))
    link_rotations = np.empty((n, 3, 3))
    joint_origins = np.empty((n, 3))
    joint_axes = np.empty((n, 3))

    R = np.eye(3)
    p = np.zeros(3)
    for i, joint in enumerate(model.joints):
        p = p + R @ joint.offset_position
        R = R @ joint.offset_rotation
        joint_origins[i] = p
        joint_axes[i] = R @ joint.axis
        R = R @ axis_angle_matrix(joint.axis, q[i])
        link_positions[i] = p
        link_rotations[i] = R

    cam_p = p + R @ model.mount_position
    cam_R = R @ model.mount_rotation
    return KinematicState(q, link_positions, link_rotations,
                          joint_origins, joint_axes, cam_p, cam_R)


def forward_kinematics(model: RobotModel, q: np.ndarray) -> CameraPose:
    """Camera pose for a joint configuration (defined for any finite q)."""
    st = kinematic_state(model, q)
    return CameraPose(st.camera_position, matrix_to_quat(st.camera_rotation))


def link_poses(model: RobotModel, q: np.ndarray) -> list[np.ndarray]:
    """World 4x4 transforms of every link frame, base to tip."""
    st = kinematic_state(model, q)
    return [rigid_to_homogeneous(st.link_positions[i], st.link_rotations[i])
            for i in range(model.joint_count)]


def camera_mount_matrix(model: RobotModel) -> np.ndarray:
    return rigid_to_homogeneous(model.mount_position, model.mount_rotation)


def camera_axes(pose: CameraPose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(forward, left, up) unit axes of the camera frame in world coordinates."""
    from .geometry import quat_to_matrix
    R = quat_to_matrix(pose.orientation)
    return R[:, 2].copy(), R[:, 1].copy(), R[:, 0].copy()


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def position_jacobian(state: KinematicState) -> np.ndarray:
    """(3, n) Jacobian of the camera position w.r.t. joint angles."""
    rel = state.camera_position[None, :] - state.joint_origins
    return _cross_rows(state.joint_axes, rel).T


def rotated_vector_jacobian(state: KinematicState, world_vec: np.ndarray) -> np.ndarray:
    """(3, n) Jacobian of a camera-fixed world vector w.r.t. joint angles."""
    return _cross_rows(state.joint_axes, np.broadcast_to(world_vec, state.joint_axes.shape)).T
