"""Synthetic stand-in for the vision stack.

Provides hand-landmark frames (21 points, standard hand topology), body
keypoint frames (25 points with validity flags), the pointing-detection
rule, the hand-centroid target, a per-keypoint median filter, and the
conversion of a body frame into convex collision wrappers. A scripted
actor interpolates keyframed hand/body trajectories for headless runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import InvalidInputError
from .shapes import Capsule, Cuboid, PlacedShape, Sphere

HAND_LANDMARKS = 21
BODY_KEYPOINTS = 25

WRIST = 0
THUMB_BASE = 1          # thumb CMC joint
THUMB_TIP = 4
INDEX_TIP = 8
FINGER_BASES = (5, 9, 13, 17)
OTHER_TIPS = (THUMB_TIP, 12, 16, 20)    # every fingertip except the index
HAND_TARGET_LANDMARKS = (WRIST,) + FINGER_BASES

# BODY_25-style topology subset used for wrappers
HEAD_KP = 0
NECK_KP = 1
R_SHOULDER, R_ELBOW, R_WRIST = 2, 3, 4
L_SHOULDER, L_ELBOW, L_WRIST = 5, 6, 7
MID_HIP = 8
R_HIP, R_KNEE, R_ANKLE = 9, 10, 11
L_HIP, L_KNEE, L_ANKLE = 12, 13, 14

LIMB_SEGMENTS = (
    (NECK_KP, R_SHOULDER), (R_SHOULDER, R_ELBOW), (R_ELBOW, R_WRIST),
    (NECK_KP, L_SHOULDER), (L_SHOULDER, L_ELBOW), (L_ELBOW, L_WRIST),
    (R_HIP, R_KNEE), (R_KNEE, R_ANKLE),
    (L_HIP, L_KNEE), (L_KNEE, L_ANKLE),
)
TORSO_KEYPOINTS = (R_SHOULDER, L_SHOULDER, R_HIP, L_HIP)


@dataclass(frozen=True)
class LandmarkFrame:
    """One hand observation: 21 world-frame 3D landmarks."""
    points: np.ndarray
    timestamp: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (HAND_LANDMARKS, 3):
            raise InvalidInputError(f"hand frame requires {HAND_LANDMARKS}x3 points")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class BodyFrame:
    """One body observation: 25 keypoints with per-point validity."""
    points: np.ndarray
    valid: np.ndarray
    timestamp: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        val = np.asarray(self.valid, dtype=bool)
        if pts.shape != (BODY_KEYPOINTS, 3) or val.shape != (BODY_KEYPOINTS,):
            raise InvalidInputError(f"body frame requires {BODY_KEYPOINTS} points + flags")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", val)


def detect_pointing(frame: LandmarkFrame) -> np.ndarray | None:
    """Index fingertip if the hand is pointing, else None.

    The hand points when the thumb-base-to-index-tip distance strictly
    exceeds the thumb-base distance to every other fingertip (thumb tip
    included). Ties are not detections.
    """
    base = frame.points[THUMB_BASE]
    index_dist = np.linalg.norm(frame.points[INDEX_TIP] - base)
    for tip in OTHER_TIPS:
        if index_dist <= np.linalg.norm(frame.points[tip] - base):
            return None
    return frame.points[INDEX_TIP].copy()


def hand_target(frame: LandmarkFrame) -> np.ndarray:
    """Mean of the wrist and the four finger-base landmarks."""
    return frame.points[list(HAND_TARGET_LANDMARKS)].mean(axis=0)


class BodyStreamFilter:
    """Per-keypoint, per-axis median over the last `window` frames.

    Invalid samples are excluded from each keypoint's median; an output
    keypoint is valid only when at least ceil(window/2) of its samples
    were valid.
    """

    def __init__(self, window: int = 5):
        if window < 3 or window % 2 == 0:
            raise InvalidInputError("median window must be odd and >= 3")
        self.window = window
        self._frames: list[BodyFrame] = []

    def push(self, frame: BodyFrame) -> BodyFrame:
        self._frames.append(frame)
        if len(self._frames) > self.window:
            self._frames.pop(0)
        pts = np.stack([f.points for f in self._frames])     # (k, 25, 3)
        val = np.stack([f.valid for f in self._frames])      # (k, 25)
        need = (self.window + 1) // 2
        counts = val.sum(axis=0)
        out_valid = counts >= need
        out_points = np.zeros((BODY_KEYPOINTS, 3))
        for kp in range(BODY_KEYPOINTS):
            if not out_valid[kp]:
                continue
            sel = pts[val[:, kp], kp, :]
            out_points[kp] = np.median(sel, axis=0)
        return BodyFrame(out_points, out_valid, frame.timestamp)

    def reset(self) -> None:
        self._frames.clear()


def median_filter(stream: list[BodyFrame], window: int = 5) -> list[BodyFrame]:
    """Filter a whole frame sequence; returns one output frame per input."""
    filt = BodyStreamFilter(window)
    return [filt.push(f) for f in stream]


def body_wrappers(frame: BodyFrame, limb_radius: float = 0.06,
                  head_radius: float = 0.12, torso_depth: float = 0.10
                  ) -> list[PlacedShape]:
    """Convex wrappers for a filtered body frame.

    Head becomes a sphere, the torso a cuboid spanning shoulders and hips,
    each limb segment a capsule. Wrappers with missing keypoints are
    omitted; zero-length segments degrade to spheres.
    """
    shapes: list[PlacedShape] = []
    pts, val = frame.points, frame.valid

    if val[HEAD_KP]:
        shapes.append(PlacedShape(Sphere(head_radius), pts[HEAD_KP],
                                  shape_id="body:head"))

    if all(val[k] for k in TORSO_KEYPOINTS):
        rs, ls, rh, lh = (pts[k] for k in TORSO_KEYPOINTS)
        center = (rs + ls + rh + lh) / 4.0
        across = ls - rs
        down = 0.5 * (rh + lh) - 0.5 * (rs + ls)
        width = float(np.linalg.norm(across))
        height = float(np.linalg.norm(down))
        if width > 1e-6 and height > 1e-6:
            x_axis = across / width
            z_axis = -down / height
            y_axis = np.cross(z_axis, x_axis)
            ny = np.linalg.norm(y_axis)
            if ny > 1e-6:
                y_axis /= ny
                x_axis = np.cross(y_axis, z_axis)
                R = np.column_stack([x_axis, y_axis, z_axis])
                half = np.array([width / 2 + limb_radius, torso_depth,
                                 height / 2 + limb_radius])
                shapes.append(PlacedShape(Cuboid(half), center, R,
                                          shape_id="body:torso"))

    for a, b in LIMB_SEGMENTS:
        if not (val[a] and val[b]):
            continue
        pa, pb = pts[a], pts[b]
        seg = pb - pa
        length = float(np.linalg.norm(seg))
        mid = 0.5 * (pa + pb)
        sid = f"body:limb{a}-{b}"
        if length < 1e-6:
            shapes.append(PlacedShape(Sphere(limb_radius), mid, shape_id=sid))
            continue
        z = seg / length
        ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        x = np.cross(ref, z)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        R = np.column_stack([x, y, z])
        shapes.append(PlacedShape(Capsule(length / 2.0, limb_radius), mid, R,
                                  shape_id=sid))
    return shapes


# --- scripted actor -----------------------------------------------------------

@dataclass
class ActorKeyframe:
    t: float
    hand: np.ndarray | None            # (21, 3) or None for no hand detected
    body: np.ndarray | None            # (25, 3) with NaN rows for invalid points


@dataclass
class ActorScript:
    keyframes: list[ActorKeyframe] = field(default_factory=list)

    def __post_init__(self):
        if not self.keyframes:
            raise InvalidInputError("actor script requires at least one keyframe")
        ts = [k.t for k in self.keyframes]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidInputError("keyframe times must be strictly increasing")

    def sample(self, t: float) -> tuple[LandmarkFrame | None, BodyFrame | None]:
        """Linear interpolation between keyframes, clamped at both ends."""
        kfs = self.keyframes
        if t <= kfs[0].t:
            return self._emit(kfs[0], kfs[0], 0.0, t)
        if t >= kfs[-1].t:
            return self._emit(kfs[-1], kfs[-1], 0.0, t)
        hi = next(i for i, k in enumerate(kfs) if k.t > t)
        a, b = kfs[hi - 1], kfs[hi]
        alpha = (t - a.t) / (b.t - a.t)
        return self._emit(a, b, alpha, t)

    @staticmethod
    def _emit(a: ActorKeyframe, b: ActorKeyframe, alpha: float, t: float):
        hand = None
        if a.hand is not None and b.hand is not None:
            hand = LandmarkFrame((1 - alpha) * a.hand + alpha * b.hand, t)
        body = None
        if a.body is not None and b.body is not None:
            pts = (1 - alpha) * a.body + alpha * b.body
            valid = ~np.isnan(pts).any(axis=1)
            body = BodyFrame(np.nan_to_num(pts), valid, t)
        return hand, body


def script_from_dict(data: dict) -> ActorScript:
    frames = []
    for k, kf in enumerate(data.get("keyframes", [])):
        hand = kf.get("hand")
        body = kf.get("body")
        hand_arr = None if hand is None else np.asarray(hand, dtype=float)
        body_arr = None
        if body is not None:
            body_arr = np.array([[np.nan] * 3 if p is None else p for p in body],
                                dtype=float)
        frames.append(ActorKeyframe(float(kf["t"]), hand_arr, body_arr))
    return ActorScript(frames)


# --- synthetic frame builders (used by scenarios and tests) -------------------

def make_hand(wrist: np.ndarray, forward: np.ndarray = (1, 0, 0),
              pointing: bool = True, scale: float = 1.0) -> np.ndarray:
    """Synthesize a plausible 21-landmark hand.

    With `pointing`, the index finger extends 0.12 m from the thumb base
    while every other fingertip curls within 0.05 m of it; otherwise all
    fingertips curl (a loose fist).
    """
    wrist = np.asarray(wrist, dtype=float)
    f = np.asarray(forward, dtype=float)
    f = f / np.linalg.norm(f)
    ref = np.array([0.0, 0.0, 1.0]) if abs(f[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    side = np.cross(f, ref)
    side /= np.linalg.norm(side)
    up = np.cross(side, f)

    pts = np.zeros((HAND_LANDMARKS, 3))
    pts[WRIST] = wrist
    thumb_base = wrist + scale * (0.03 * f - 0.02 * side)
    pts[THUMB_BASE] = thumb_base
    pts[2] = thumb_base + scale * 0.02 * f
    pts[3] = thumb_base + scale * (0.03 * f - 0.01 * side)
    pts[THUMB_TIP] = thumb_base + scale * (0.035 * f - 0.02 * side)

    for fi, base_idx in enumerate(FINGER_BASES):
        offset = scale * (0.08 * f + (0.027 * fi - 0.04) * side)
        base = wrist + offset
        pts[base_idx] = base
        tip_idx = base_idx + 3
        if base_idx == 5 and pointing:
            tip = thumb_base + scale * 0.12 * f
        else:
            tip = thumb_base + scale * (0.042 * f + 0.015 * up
                                        + (0.02 * fi - 0.02) * side)
        pts[base_idx + 1] = base + 0.3 * (tip - base)
        pts[base_idx + 2] = base + 0.65 * (tip - base)
        pts[tip_idx] = tip
    return pts


def make_body(pelvis: np.ndarray, facing: np.ndarray = (-1, 0, 0)) -> np.ndarray:
    """Synthesize a seated-worker 25-point body at a pelvis position."""
    pelvis = np.asarray(pelvis, dtype=float)
    f = np.asarray(facing, dtype=float)
    f = f / np.linalg.norm(f)
    side = np.cross(f, np.array([0.0, 0.0, 1.0]))
    side /= np.linalg.norm(side)
    up = np.array([0.0, 0.0, 1.0])

    pts = np.full((BODY_KEYPOINTS, 3), np.nan)
    neck = pelvis + 0.45 * up
    pts[MID_HIP] = pelvis
    pts[NECK_KP] = neck
    pts[HEAD_KP] = neck + 0.18 * up + 0.05 * f
    pts[R_SHOULDER] = neck - 0.19 * side
    pts[L_SHOULDER] = neck + 0.19 * side
    pts[R_ELBOW] = pts[R_SHOULDER] + 0.25 * f - 0.08 * up
    pts[R_WRIST] = pts[R_ELBOW] + 0.24 * f
    pts[L_ELBOW] = pts[L_SHOULDER] + 0.25 * f - 0.08 * up
    pts[L_WRIST] = pts[L_ELBOW] + 0.24 * f
    pts[R_HIP] = pelvis - 0.11 * side
    pts[L_HIP] = pelvis + 0.11 * side
    pts[R_KNEE] = pts[R_HIP] + 0.35 * f - 0.25 * up
    pts[R_ANKLE] = pts[R_KNEE] - 0.35 * up
    pts[L_KNEE] = pts[L_HIP] + 0.35 * f - 0.25 * up
    pts[L_ANKLE] = pts[L_KNEE] - 0.35 * up
    return pts
