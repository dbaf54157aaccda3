"""Objective terms for the per-tick motion optimization.

Each term produces a raw scalar chi(q); the optimizer minimizes the
weighted sum of groove(chi_i(q)). The groove normalization has a narrow
Gaussian basin at its set point plus a polynomial tail, so terms stay
comparable across very different raw units (meters, radians/s, bare
ratios).

Every term exposes an analytic gradient; collision terms differentiate
through witness points supplied by the collision world.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionSummary, CollisionWorld
from .kinematics import (CameraPose, InvalidInputError, KinematicState,
                         RobotModel, kinematic_state, position_jacobian,
                         rotated_vector_jacobian)
from .shapes import PlacedShape, distance_report

WORLD_UP = np.array([0.0, 0.0, 1.0])
DEFAULT_EPSILON = 0.02
DEFAULT_DIST_FLOOR = 1e-4


class TermKind(str, enum.Enum):
    SET_TARGET = "set_target"
    ADJUST = "adjust"
    KEEP_DISTANCE = "keep_distance"
    UPRIGHT = "upright"
    JOINT_VEL = "joint_vel"
    JOINT_ACC = "joint_acc"
    JOINT_JERK = "joint_jerk"
    EE_VEL = "ee_vel"
    JOINT_LIMITS = "joint_limits"
    SELF_COLLISION = "self_collision"
    ENV_COLLISION = "env_collision"


_SMOOTHNESS_ORDER = {TermKind.JOINT_VEL: 1, TermKind.JOINT_ACC: 2, TermKind.JOINT_JERK: 3}
_KINDS_NEEDING_PARAMS = {TermKind.SET_TARGET: ("target",),
                         TermKind.ADJUST: ("delta",),
                         TermKind.KEEP_DISTANCE: ("target", "distance")}


@dataclass(frozen=True)
class GrooveParams:
    """Set point, basin width, and tail strength of the normalization."""
    s: float = 0.0
    c: float = 0.1
    r: float = 10.0

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidInputError("groove width c must be positive")
        if self.r < 0:
            raise InvalidInputError("groove tail strength r must be nonnegative")


def groove(x: float, p: GrooveParams) -> float:
    d = x - p.s
    return float(-np.exp(-(d * d) / (2.0 * p.c * p.c)) + p.r * d ** 4)


def groove_grad(x: float, p: GrooveParams) -> float:
    d = x - p.s
    return float((d / (p.c * p.c)) * np.exp(-(d * d) / (2.0 * p.c * p.c))
                 + 4.0 * p.r * d ** 3)


@dataclass(frozen=True)
class ObjectiveTerm:
    kind: TermKind
    weight: float
    groove: GrooveParams = field(default_factory=GrooveParams)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidInputError("term weight must be nonnegative")
        for key in _KINDS_NEEDING_PARAMS.get(self.kind, ()):
            if key not in self.params:
                raise InvalidInputError(f"{self.kind.value} term requires '{key}'")


@dataclass
class HistoryEntry:
    t: float
    q: np.ndarray
    position: np.ndarray
    orientation: np.ndarray


class MotionHistory:
    """Ring buffer of the last 4 solved configurations and camera poses."""

    DEPTH = 4

    def __init__(self):
        self.entries: list[HistoryEntry] = []

    def append(self, t: float, q: np.ndarray, position: np.ndarray,
               orientation: np.ndarray) -> None:
        if self.entries and t <= self.entries[-1].t:
            raise InvalidInputError("history timestamps must be strictly increasing")
        self.entries.append(HistoryEntry(float(t), np.asarray(q, dtype=float).copy(),
                                         np.asarray(position, dtype=float).copy(),
                                         np.asarray(orientation, dtype=float).copy()))
        if len(self.entries) > self.DEPTH:
            self.entries.pop(0)

    def __len__(self) -> int:
        return len(self.entries)

    def configs(self) -> list[np.ndarray]:
        return [e.q for e in self.entries]

    def last(self) -> HistoryEntry:
        return self.entries[-1]


# --- raw objective values (public surface; the solver uses the fast paths below) ---

def chi_set_target(pose: CameraPose, target: np.ndarray) -> float:
    """Orthogonal distance from the target to the camera's forward ray.

    Targets behind the camera measure distance to the ray origin, so the
    optimizer is never rewarded for lining up a target backwards.
    """
    from .kinematics import camera_axes
    forward, _, _ = camera_axes(pose)
    return _lookat_value(pose.position, forward, np.asarray(target, dtype=float))


def _lookat_value(position: np.ndarray, forward: np.ndarray, target: np.ndarray) -> float:
    u = target - position
    proj = float(u @ forward)
    if proj <= 0.0:
        return float(np.linalg.norm(u))
    return float(np.linalg.norm(u - proj * forward))


def chi_adjust(pose_now: CameraPose, pose_prev: CameraPose, delta: np.ndarray) -> float:
    goal = pose_prev.position + np.asarray(delta, dtype=float)
    return float(np.linalg.norm(goal - pose_now.position))


def chi_keep_distance(pose: CameraPose, target: np.ndarray, d: float) -> float:
    if d <= 0:
        raise InvalidInputError("keep-distance standoff must be positive")
    return float(np.linalg.norm(np.asarray(target, dtype=float) - pose.position) - d)


def chi_upright(pose: CameraPose) -> float:
    """Dot of the camera's left axis with world up; 0 when roll-free."""
    from .kinematics import camera_axes
    _, left, _ = camera_axes(pose)
    return float(left @ WORLD_UP)


def chi_joint_smoothness(history: MotionHistory, order: int) -> float:
    """Weighted norm of the order-th finite difference of the joint path.

    Joints closer to the base carry linearly larger weight (n down to 1)
    because they produce larger camera motion. Returns 0 until the history
    holds order+1 configurations (cold start after a reset).
    """
    if order not in (1, 2, 3):
        raise InvalidInputError("smoothness order must be 1, 2, or 3")
    if len(history) < order + 1:
        return 0.0
    qs = history.configs()
    ts = [e.t for e in history.entries]
    dt = ts[-1] - ts[-2]
    return _smoothness_value(qs[-(order + 1):], order, dt)


def _smoothness_value(qs: list[np.ndarray], order: int, dt: float) -> float:
    coeffs = {1: (1.0, -1.0), 2: (1.0, -2.0, 1.0), 3: (1.0, -3.0, 3.0, -1.0)}[order]
    diff = sum(c * q for c, q in zip(coeffs, reversed(qs)))
    n = diff.shape[0]
    w = np.arange(n, 0, -1, dtype=float)
    return float(np.sqrt(np.sum(w * diff * diff)) / dt ** order)


def chi_ee_vel(history: MotionHistory) -> float:
    if len(history) < 2:
        return 0.0
    return float(np.linalg.norm(history.entries[-1].position - history.entries[-2].position))


def chi_joint_limits(q: np.ndarray, model: RobotModel) -> float:
    z = _limit_ratio(q, model)
    return float(np.sum(0.05 * (z * z) ** 25))


def _limit_ratio(q: np.ndarray, model: RobotModel) -> np.ndarray:
    span = model.upper_limits - model.lower_limits
    return ((np.asarray(q, dtype=float) - model.lower_limits) / span - 0.5) / 0.45


def chi_collision(link_shapes: list[PlacedShape], others: list[PlacedShape],
                  epsilon: float = DEFAULT_EPSILON, mode: str = "env",
                  dist_floor: float = DEFAULT_DIST_FLOOR) -> float:
    """Sum of (5 eps)^2 / dist^2 over shape pairs.

    Self mode pairs the link list against itself, skipping adjacent links;
    env mode pairs every link against every other shape. Distances are
    clamped below at dist_floor to keep the value finite.
    """
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    scale = (5.0 * epsilon) ** 2
    total = 0.0
    if mode == "self":
        m = len(link_shapes)
        for i in range(m - 2):
            for j in range(i + 2, m):
                d = distance_report(link_shapes[i], link_shapes[j]).distance
                total += scale / max(d, dist_floor) ** 2
    elif mode == "env":
        for link in link_shapes:
            for other in others:
                d = distance_report(link, other).distance
                total += scale / max(d, dist_floor) ** 2
    else:
        raise InvalidInputError("mode must be 'self' or 'env'")
    return float(total)


# --- solver-facing evaluation over a full term set ---

@dataclass
class EvalContext:
    """Frozen inputs for one solve: model, history tail, scene, constants."""
    model: RobotModel
    dt: float
    prev_qs: list[np.ndarray]          # oldest..latest past configs (<= 3 used)
    prev_position: np.ndarray | None   # camera position at t-1
    collision_world: CollisionWorld | None
    upright_axis: np.ndarray = field(default_factory=lambda: WORLD_UP.copy())

    @classmethod
    def from_inputs(cls, model: RobotModel, history: MotionHistory, dt: float,
                    env_shapes: list[PlacedShape] | None,
                    epsilon: float = DEFAULT_EPSILON,
                    dist_floor: float = DEFAULT_DIST_FLOOR,
                    need_collision: bool = True) -> "EvalContext":
        world = None
        if need_collision:
            world = CollisionWorld(model, env_shapes or [], epsilon, dist_floor)
        prev_qs = history.configs()
        prev_pos = history.entries[-1].position if len(history) else None
        return cls(model, dt, prev_qs, prev_pos, world)


@dataclass
class TermBreakdown:
    kind: TermKind
    chi: float
    weighted: float


@dataclass
class Evaluation:
    value: float
    gradient: np.ndarray | None
    collision: CollisionSummary | None
    breakdown: list[TermBreakdown]


def evaluate_objective(q: np.ndarray, ctx: EvalContext, terms: list[ObjectiveTerm],
                       need_grad: bool = True, need_breakdown: bool = False) -> Evaluation:
    """Aggregate value (and gradient) of the weighted, grooved term sum."""
    state = kinematic_state(ctx.model, q)
    n = ctx.model.joint_count
    value = 0.0
    grad = np.zeros(n) if need_grad else None
    breakdown: list[TermBreakdown] = []

    jac_p = None
    collision: CollisionSummary | None = None
    needs_collision = any(t.kind in (TermKind.SELF_COLLISION, TermKind.ENV_COLLISION)
                          for t in terms)
    if needs_collision and ctx.collision_world is not None:
        collision = ctx.collision_world.evaluate(state, need_grad)

    def jp():
        nonlocal jac_p
        if jac_p is None:
            jac_p = position_jacobian(state)
        return jac_p

    for term in terms:
        chi, dchi = _term_chi(term, q, state, ctx, collision, need_grad, jp)
        f = groove(chi, term.groove)
        value += term.weight * f
        if need_grad and dchi is not None:
            grad += term.weight * groove_grad(chi, term.groove) * dchi
        if need_breakdown:
            breakdown.append(TermBreakdown(term.kind, chi, term.weight * f))

    return Evaluation(value, grad, collision, breakdown)


def _term_chi(term: ObjectiveTerm, q: np.ndarray, state: KinematicState,
              ctx: EvalContext, collision: CollisionSummary | None,
              need_grad: bool, jp) -> tuple[float, np.ndarray | None]:
    kind = term.kind
    n = q.shape[0]

    if kind is TermKind.SET_TARGET:
        target = np.asarray(term.params["target"], dtype=float)
        forward = state.camera_rotation[:, 2]
        u = target - state.camera_position
        proj = float(u @ forward)
        if proj <= 0.0:
            chi = float(np.linalg.norm(u))
            if not need_grad:
                return chi, None
            if chi < 1e-12:
                return chi, np.zeros(n)
            return chi, -(u / chi) @ jp()
        rvec = u - proj * forward
        chi = float(np.linalg.norm(rvec))
        if not need_grad:
            return chi, None
        if chi < 1e-12:
            return chi, np.zeros(n)
        rhat = rvec / chi
        jf = rotated_vector_jacobian(state, forward)
        # rhat . forward = 0, so the (d proj) forward component drops out
        return chi, -(rhat @ jp()) - proj * (rhat @ jf)

    if kind is TermKind.ADJUST:
        if ctx.prev_position is None:
            return 0.0, (np.zeros(n) if need_grad else None)
        goal = ctx.prev_position + np.asarray(term.params["delta"], dtype=float)
        diff = state.camera_position - goal
        chi = float(np.linalg.norm(diff))
        if not need_grad:
            return chi, None
        if chi < 1e-12:
            return chi, np.zeros(n)
        return chi, (diff / chi) @ jp()

    if kind is TermKind.KEEP_DISTANCE:
        target = np.asarray(term.params["target"], dtype=float)
        d = float(term.params["distance"])
        diff = state.camera_position - target
        dist = float(np.linalg.norm(diff))
        chi = dist - d
        if not need_grad:
            return chi, None
        if dist < 1e-12:
            return chi, np.zeros(n)
        return chi, (diff / dist) @ jp()

    if kind is TermKind.UPRIGHT:
        left = state.camera_rotation[:, 1]
        chi = float(left @ ctx.upright_axis)
        if not need_grad:
            return chi, None
        jl = rotated_vector_jacobian(state, left)
        return chi, ctx.upright_axis @ jl

    if kind in _SMOOTHNESS_ORDER:
        order = _SMOOTHNESS_ORDER[kind]
        if len(ctx.prev_qs) < order:
            return 0.0, (np.zeros(n) if need_grad else None)
        qs = ctx.prev_qs[-order:] + [q]
        chi = _smoothness_value(qs, order, ctx.dt)
        if not need_grad:
            return chi, None
        if chi < 1e-12:
            return chi, np.zeros(n)
        coeffs = {1: (1.0, -1.0), 2: (1.0, -2.0, 1.0), 3: (1.0, -3.0, 3.0, -1.0)}[order]
        diff = sum(c * qq for c, qq in zip(coeffs, reversed(qs)))
        w = np.arange(n, 0, -1, dtype=float)
        return chi, w * diff / (ctx.dt ** (2 * order) * chi)

    if kind is TermKind.EE_VEL:
        if ctx.prev_position is None:
            return 0.0, (np.zeros(n) if need_grad else None)
        diff = state.camera_position - ctx.prev_position
        chi = float(np.linalg.norm(diff))
        if not need_grad:
            return chi, None
        if chi < 1e-12:
            return chi, np.zeros(n)
        return chi, (diff / chi) @ jp()

    if kind is TermKind.JOINT_LIMITS:
        z = _limit_ratio(q, ctx.model)
        chi = float(np.sum(0.05 * (z * z) ** 25))
        if not need_grad:
            return chi, None
        span = ctx.model.upper_limits - ctx.model.lower_limits
        z49 = z * (z * z) ** 24
        return chi, 0.05 * 50.0 * z49 / (0.45 * span)

    if kind is TermKind.SELF_COLLISION:
        assert collision is not None
        return collision.chi_self, (collision.grad_self if need_grad else None)

    if kind is TermKind.ENV_COLLISION:
        assert collision is not None
        return collision.chi_env, (collision.grad_env if need_grad else None)

    raise InvalidInputError(f"unknown term kind {kind}")
