"""Mode arbitration: maps user interactions and autonomous behaviors to the
active objective set, one command per control tick.

Three modes share control. The helper leads by setting targets and
adjusting the view; the robot leads by tracking the worker's hand; the
worker leads through freedrive. Annotation freezes motion in any mode,
and conflicting simultaneous motion inputs latch an emergency brake that
only a reset clears.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .kinematics import RobotModel, camera_axes, forward_kinematics
from .objectives import MotionHistory, ObjectiveTerm, TermKind
from .perception import BodyFrame, LandmarkFrame, detect_pointing, hand_target


class Mode(str, enum.Enum):
    HELPER_LED = "helper_led"
    ROBOT_LED = "robot_led"
    WORKER_LED = "worker_led"


class AdjustKind(str, enum.Enum):
    ZOOM = "zoom"
    ORBIT = "orbit"
    SHIFT = "shift"


@dataclass(frozen=True)
class InteractionEvent:
    """One validated input: a console command or a perception frame."""
    source: str                        # "helper" | "worker" | "perception"
    kind: str
    timestamp: float
    data: dict = field(default_factory=dict)


@dataclass
class AdjustInput:
    kind: AdjustKind
    magnitude: float                   # meters for zoom/shift, radians for orbit
    direction: tuple[float, float]     # screen drag (du right, dv up)
    timestamp: float


@dataclass
class ModeState:
    mode: Mode = Mode.HELPER_LED
    target: np.ndarray | None = None
    standoff: float | None = None      # point-interaction camera distance
    adjust_queue: list[AdjustInput] = field(default_factory=list)
    annotating: bool = False
    braked: bool = False
    pointing_enabled: bool = False
    freedrive_active: bool = False
    freedrive_goal: np.ndarray | None = None
    orbit_distance: float | None = None
    reset_active: bool = False
    pointing_detected: bool = False
    tracking_lost: bool = False
    last_hand_time: float | None = None
    last_freedrive_time: float | None = None
    last_helper_adjust_time: float | None = None
    last_orbit_time: float | None = None
    hand_frame: LandmarkFrame | None = None
    body_frame: BodyFrame | None = None

    def summary(self) -> dict:
        return {
            "mode": self.mode.value,
            "target": None if self.target is None else [float(v) for v in self.target],
            "standoff": self.standoff,
            "orbit_distance": self.orbit_distance,
            "annotating": self.annotating,
            "braked": self.braked,
            "pointing_enabled": self.pointing_enabled,
            "pointing_detected": self.pointing_detected,
            "freedrive_active": self.freedrive_active,
            "reset_active": self.reset_active,
            "tracking_lost": self.tracking_lost,
        }


# --- tick outputs ---

@dataclass(frozen=True)
class Hold:
    """Emit no motion this tick; the pose stays exactly where it is."""
    reason: str = "hold"


@dataclass(frozen=True)
class Slew:
    """Rate-limited joint-space move toward a goal, bypassing the optimizer."""
    goal: np.ndarray
    max_rate: float                    # rad/s per joint
    source: str                        # "reset" | "freedrive"


@dataclass(frozen=True)
class Solve:
    """Run the optimizer over these active terms this tick."""
    terms: list[ObjectiveTerm]


Command = Hold | Slew | Solve


@dataclass
class Diagnostic:
    severity: str                      # "info" | "warning" | "error"
    message: str


ORBIT_SESSION_TIMEOUT = 0.5            # s without orbit input before d is dropped

_HELPER_EVENT_KINDS = {"set_target", "adjust", "reset", "annotate_begin",
                       "annotate_end", "mode_select", "point_slider", "annotation"}


def apply_adjust(adjust: AdjustInput, state: ModeState,
                 position: np.ndarray, forward: np.ndarray, left: np.ndarray,
                 up: np.ndarray) -> np.ndarray:
    """Convert one adjust input into a world-frame camera offset.

    zoom moves along the optical axis; shift maps screen drag to the
    camera's left/up axes (drag right pans right, i.e. along -left);
    orbit rotates the camera position about the target, azimuth about
    world up and elevation about the camera's left axis.
    """
    if adjust.kind is AdjustKind.ZOOM:
        return adjust.magnitude * forward
    if adjust.kind is AdjustKind.SHIFT:
        du, dv = adjust.direction
        return adjust.magnitude * (du * -left + dv * up)
    if state.target is None:
        raise ValueError("orbit requires a target")
    du, dv = adjust.direction
    rel = position - state.target
    az = -du * adjust.magnitude
    el = dv * adjust.magnitude
    rot = _axis_rotation(np.array([0.0, 0.0, 1.0]), az) @ _axis_rotation(left, el)
    return rot @ rel - rel


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    from .geometry import axis_angle_matrix
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.eye(3)
    return axis_angle_matrix(axis / n, angle)


class Arbiter:
    """Single-writer state machine driven once per tick."""

    def __init__(self, model: RobotModel, reset_config: np.ndarray,
                 config: EngineConfig):
        self.model = model
        self.reset_config = np.asarray(reset_config, dtype=float)
        self.config = config
        self.state = ModeState()
        self.diagnostics: list[Diagnostic] = []

    def _diag(self, severity: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(severity, message))

    def _term(self, kind: TermKind, **params) -> ObjectiveTerm:
        tc = self.config.term_config(kind)
        return ObjectiveTerm(kind, tc.weight, tc.groove(), params)

    # -- event ingestion --

    def _ingest(self, ev: InteractionEvent, now: float) -> bool:
        """Apply one event to the state; returns True if a reset fired."""
        st = self.state
        kind = ev.kind
        if ev.source == "helper" and kind not in _HELPER_EVENT_KINDS:
            self._diag("warning", f"helper may not send '{kind}'")
            return False
        if ev.source == "worker" and kind not in ("freedrive_goal", "mode_select"):
            self._diag("warning", f"worker may not send '{kind}'")
            return False

        if kind == "set_target":
            st.target = np.asarray(ev.data["target"], dtype=float)
            st.standoff = None
            st.orbit_distance = None
            return False

        if kind == "adjust":
            try:
                akind = AdjustKind(ev.data["kind"])
            except (ValueError, KeyError):
                self._diag("warning", f"malformed adjust event: {ev.data}")
                return False
            if akind is AdjustKind.ORBIT:
                if st.target is None:
                    self._diag("warning", "orbit adjust rejected: no target set")
                    return False
                if st.mode is Mode.WORKER_LED:
                    self._diag("warning", "orbit adjust rejected in worker-led mode")
                    return False
            if akind is AdjustKind.SHIFT and st.mode is Mode.ROBOT_LED:
                self._diag("warning", "shift adjust rejected in robot-led mode")
                return False
            step = {AdjustKind.ZOOM: self.config.arbitration.zoom_step,
                    AdjustKind.SHIFT: self.config.arbitration.shift_step,
                    AdjustKind.ORBIT: np.radians(self.config.arbitration.orbit_step_deg)}[akind]
            direction = tuple(ev.data.get("direction", (1.0, 0.0)))
            if len(direction) != 2:
                self._diag("warning", "adjust direction must be (du, dv)")
                return False
            queue = st.adjust_queue
            if len(queue) >= self.config.arbitration.adjust_queue_limit:
                queue.pop(0)
                self._diag("warning", "adjust queue overflow; oldest input dropped")
            queue.append(AdjustInput(akind, float(ev.data["magnitude"]) * step,
                                     direction, ev.timestamp))
            st.last_helper_adjust_time = ev.timestamp
            return False

        if kind == "reset":
            return True

        if kind == "annotate_begin":
            st.annotating = True
            return False
        if kind == "annotate_end":
            st.annotating = False
            return False
        if kind == "annotation":
            return False    # overlay geometry is relayed and logged, not interpreted

        if kind == "mode_select":
            try:
                new_mode = Mode(ev.data["mode"])
            except (ValueError, KeyError):
                self._diag("warning", f"unknown mode: {ev.data.get('mode')}")
                return False
            if new_mode is not st.mode:
                st.mode = new_mode
                st.adjust_queue.clear()
                st.orbit_distance = None
                if new_mode is not Mode.WORKER_LED:
                    st.freedrive_active = False
                    st.freedrive_goal = None
            return False

        if kind == "point_slider":
            st.pointing_enabled = bool(ev.data.get("enabled", False))
            return False

        if kind == "freedrive_goal":
            if st.mode is not Mode.WORKER_LED:
                self._diag("warning", "freedrive input ignored outside worker-led mode")
                return False
            goal = np.asarray(ev.data["q"], dtype=float)
            if goal.shape != (self.model.joint_count,):
                self._diag("warning", "freedrive goal has wrong joint count")
                return False
            st.freedrive_goal = self.model.clamp(goal)
            st.freedrive_active = True
            st.last_freedrive_time = ev.timestamp
            return False

        if kind == "hand_frame":
            st.hand_frame = ev.data["frame"]
            st.last_hand_time = ev.timestamp
            return False
        if kind == "body_frame":
            st.body_frame = ev.data["frame"]
            return False

        self._diag("warning", f"unknown event kind '{kind}' ignored")
        return False

    # -- per-tick step --

    def step(self, events: list[InteractionEvent], history: MotionHistory,
             now: float) -> Command:
        st = self.state
        self.diagnostics = []
        reset_requested = False
        for ev in events:
            if self._ingest(ev, now):
                reset_requested = True

        q_now = history.last().q

        # pointing detection runs every tick a hand frame exists; the helper's
        # slider gates whether a detection becomes the camera target
        st.pointing_detected = False
        fingertip = None
        if st.hand_frame is not None and st.last_hand_time == now:
            fingertip = detect_pointing(st.hand_frame)
            st.pointing_detected = fingertip is not None
        if st.pointing_detected and st.pointing_enabled:
            self.approve_point(fingertip)

        if reset_requested:
            self.reset()
            return Slew(self.reset_config, self.config.arbitration.reset_rate, "reset")

        if st.braked:
            return Hold("braked")

        # emergency brake: freedrive and helper adjust within the same window
        if (st.mode is Mode.WORKER_LED
                and st.last_freedrive_time is not None
                and st.last_helper_adjust_time is not None
                and abs(st.last_freedrive_time - st.last_helper_adjust_time)
                <= self.config.arbitration.brake_window):
            st.braked = True
            st.adjust_queue.clear()
            self._diag("warning", "emergency brake: simultaneous worker and "
                                  "helper motion input")
            return Hold("braked")

        if st.annotating:
            return Hold("annotating")

        if st.reset_active:
            if np.max(np.abs(q_now - self.reset_config)) < 1e-9:
                st.reset_active = False
            else:
                return Slew(self.reset_config, self.config.arbitration.reset_rate,
                            "reset")

        if st.mode is Mode.WORKER_LED:
            return self._step_worker_led(q_now, history, now)
        if st.mode is Mode.ROBOT_LED:
            return self._step_robot_led(history, now)
        return self._step_helper_led(history, now)

    # -- mode-specific term assembly --

    def _autonomous_terms(self, include_upright: bool = True,
                          include_ee_vel: bool = True) -> list[ObjectiveTerm]:
        terms = []
        if include_upright:
            terms.append(self._term(TermKind.UPRIGHT))
        terms += [self._term(TermKind.JOINT_VEL), self._term(TermKind.JOINT_ACC),
                  self._term(TermKind.JOINT_JERK)]
        if include_ee_vel:
            terms.append(self._term(TermKind.EE_VEL))
        terms += [self._term(TermKind.JOINT_LIMITS), self._term(TermKind.SELF_COLLISION),
                  self._term(TermKind.ENV_COLLISION)]
        return terms

    def _drain_adjusts(self, history: MotionHistory, now: float
                       ) -> tuple[np.ndarray | None, bool]:
        """Combine queued adjust inputs into one offset; returns (delta, orbiting)."""
        st = self.state
        if not st.adjust_queue:
            orbiting = (st.orbit_distance is not None
                        and st.last_orbit_time is not None
                        and now - st.last_orbit_time <= ORBIT_SESSION_TIMEOUT)
            if not orbiting:
                st.orbit_distance = None
            return None, orbiting

        entry = history.last()
        pose = forward_kinematics(self.model, entry.q)
        forward, left, up = camera_axes(pose)
        position = pose.position

        delta = np.zeros(3)
        orbiting = False
        for adj in st.adjust_queue:
            if adj.kind is AdjustKind.ORBIT:
                if st.orbit_distance is None:
                    st.orbit_distance = float(np.linalg.norm(position - st.target))
                st.last_orbit_time = now
                orbiting = True
            delta += apply_adjust(adj, st, position, forward, left, up)
        if not orbiting:
            # zoom or shift without orbit ends the captured-radius session
            st.orbit_distance = None
        st.adjust_queue.clear()
        return delta, orbiting

    def _step_helper_led(self, history: MotionHistory, now: float) -> Command:
        st = self.state
        delta, orbiting = self._drain_adjusts(history, now)
        terms = []
        if st.target is not None:
            terms.append(self._term(TermKind.SET_TARGET, target=st.target.copy()))
        if delta is not None:
            terms.append(self._term(TermKind.ADJUST, delta=delta))
        if orbiting and st.orbit_distance is not None and st.target is not None:
            terms.append(self._term(TermKind.KEEP_DISTANCE, target=st.target.copy(),
                                    distance=st.orbit_distance))
        elif st.standoff is not None and st.target is not None:
            terms.append(self._term(TermKind.KEEP_DISTANCE, target=st.target.copy(),
                                    distance=st.standoff))
        terms += self._autonomous_terms()
        return Solve(terms)

    def _step_robot_led(self, history: MotionHistory, now: float) -> Command:
        st = self.state
        hand_age = None if st.last_hand_time is None else now - st.last_hand_time
        if st.hand_frame is not None and hand_age is not None \
                and hand_age <= self.config.arbitration.hand_loss_timeout:
            st.target = hand_target(st.hand_frame)
            st.standoff = None
            st.tracking_lost = False
        elif hand_age is None or hand_age > self.config.arbitration.hand_loss_timeout:
            if not st.tracking_lost:
                self._diag("warning", "hand tracking lost; holding last target")
            st.tracking_lost = True

        delta, orbiting = self._drain_adjusts(history, now)
        terms = []
        if st.target is not None:
            terms.append(self._term(TermKind.SET_TARGET, target=st.target.copy()))
        if delta is not None:
            terms.append(self._term(TermKind.ADJUST, delta=delta))
        if orbiting and st.orbit_distance is not None and st.target is not None:
            terms.append(self._term(TermKind.KEEP_DISTANCE, target=st.target.copy(),
                                    distance=st.orbit_distance))
        terms += self._autonomous_terms()
        return Solve(terms)

    def _step_worker_led(self, q_now: np.ndarray, history: MotionHistory,
                         now: float) -> Command:
        st = self.state
        if st.freedrive_active and st.freedrive_goal is not None:
            if np.max(np.abs(q_now - st.freedrive_goal)) < 1e-9:
                st.freedrive_active = False
            else:
                return Slew(st.freedrive_goal,
                            self.config.arbitration.freedrive_rate, "freedrive")

        delta, _ = self._drain_adjusts(history, now)
        if delta is None:
            return Hold("worker idle")
        # moderate assistance only: smoothness, limits, and collisions
        terms = [self._term(TermKind.ADJUST, delta=delta),
                 self._term(TermKind.JOINT_VEL), self._term(TermKind.JOINT_ACC),
                 self._term(TermKind.JOINT_JERK), self._term(TermKind.JOINT_LIMITS),
                 self._term(TermKind.SELF_COLLISION), self._term(TermKind.ENV_COLLISION)]
        return Solve(terms)

    # -- named interactions --

    def reset(self) -> None:
        """Recovery path: clear state and command the pre-defined configuration."""
        st = self.state
        st.mode = Mode.HELPER_LED
        st.target = None
        st.standoff = None
        st.adjust_queue.clear()
        st.annotating = False
        st.braked = False
        st.freedrive_active = False
        st.freedrive_goal = None
        st.orbit_distance = None
        st.reset_active = True
        st.tracking_lost = False
        st.last_freedrive_time = None
        st.last_helper_adjust_time = None

    def approve_point(self, fingertip: np.ndarray) -> None:
        """Adopt a detected point: target the fingertip at the standoff distance."""
        st = self.state
        st.target = np.asarray(fingertip, dtype=float)
        st.standoff = self.config.arbitration.point_standoff
        st.orbit_distance = None
