"""Engine configuration: objective weights, groove shapes, solver budget,
arbitration constants, perception constants, and session settings.

Everything here is data, overridable from a JSON config file. The
smoothness grooves are calibrated for the default 60 Hz tick: their raw
values divide finite differences by dt^k, so the basin widths scale with
the tick rate (see `objective_defaults`).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .objectives import GrooveParams, TermKind


@dataclass(frozen=True)
class TermConfig:
    weight: float
    s: float = 0.0
    c: float = 0.1
    r: float = 10.0

    def groove(self) -> GrooveParams:
        return GrooveParams(self.s, self.c, self.r)


def objective_defaults() -> dict[str, TermConfig]:
    """Per-term weight and groove defaults (60 Hz calibration).

    Distance-like terms use a narrow basin with a strong quartic tail.
    The smoothness terms act as wide quadratic basins: their raw values
    are finite differences divided by dt^k, so widths are scaled so that
    per-tick joint deltas around 0.02 rad transit freely while large or
    accelerating motion pays superlinearly.
    """
    return {
        TermKind.SET_TARGET.value: TermConfig(weight=30.0, c=0.06, r=40.0),
        TermKind.ADJUST.value: TermConfig(weight=30.0, c=0.06, r=40.0),
        TermKind.KEEP_DISTANCE.value: TermConfig(weight=10.0, c=0.1, r=10.0),
        TermKind.UPRIGHT.value: TermConfig(weight=5.0, c=0.1, r=10.0),
        TermKind.JOINT_VEL.value: TermConfig(weight=3.0, c=11.0, r=1e-4),
        TermKind.JOINT_ACC.value: TermConfig(weight=2.0, c=1500.0, r=0.0),
        TermKind.JOINT_JERK.value: TermConfig(weight=1.0, c=60000.0, r=0.0),
        TermKind.EE_VEL.value: TermConfig(weight=5.0, c=0.3, r=1.0),
        TermKind.JOINT_LIMITS.value: TermConfig(weight=1.0, c=0.1, r=10.0),
        TermKind.SELF_COLLISION.value: TermConfig(weight=1.0, c=0.6, r=0.05),
        TermKind.ENV_COLLISION.value: TermConfig(weight=1.0, c=0.6, r=0.05),
    }


@dataclass
class SolverConfig:
    max_iters: int = 100
    max_ms: float | None = 8.0
    fd_step: float = 1e-6
    test_mode: bool = False          # iteration budget only, for determinism

    def effective_max_ms(self) -> float | None:
        return None if self.test_mode else self.max_ms


@dataclass
class ArbitrationConfig:
    zoom_step: float = 0.05          # m per input unit
    orbit_step_deg: float = 2.0      # degrees of arc per input unit
    shift_step: float = 0.02         # m per input unit
    brake_window: float = 0.1        # s; conflicting inputs inside it latch the brake
    hand_loss_timeout: float = 1.0   # s without a hand before tracking-lost
    point_standoff: float = 0.40     # m; camera distance after an approved point
    freedrive_rate: float = 1.0      # rad/s joint slew cap in freedrive
    reset_rate: float = 1.0          # rad/s joint slew cap during reset
    adjust_queue_limit: int = 120


@dataclass
class PerceptionConfig:
    median_window: int = 5
    limb_radius: float = 0.06
    head_radius: float = 0.12
    torso_depth: float = 0.10


@dataclass
class CollisionConfig:
    epsilon: float = 0.02
    dist_floor: float = 1e-4


@dataclass
class SessionConfig:
    tick_rate: float = 60.0
    listen_host: str = "127.0.0.1"
    listen_port: int = 8787
    snapshot_divisor: int = 3        # broadcast every Nth snapshot (60 -> 20 Hz)
    click_fallback_range: float = 1.5

    def __post_init__(self):
        if not (10.0 <= self.tick_rate <= 240.0):
            raise ValueError("tick_rate must lie in [10, 240] Hz")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate


@dataclass
class EngineConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    arbitration: ArbitrationConfig = field(default_factory=ArbitrationConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    collision: CollisionConfig = field(default_factory=CollisionConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    objectives: dict[str, TermConfig] = field(default_factory=objective_defaults)

    def term_config(self, kind: TermKind) -> TermConfig:
        return self.objectives[kind.value]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["objectives"] = {k: asdict(v) for k, v in self.objectives.items()}
        return d

    def config_hash(self) -> str:
        import hashlib
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _merge_section(cls, defaults, data: dict):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    merged = {**{f.name: getattr(defaults, f.name) for f in fields(cls)}, **data}
    return cls(**merged)


def config_from_dict(data: dict) -> EngineConfig:
    cfg = EngineConfig()
    sections = {"solver": (SolverConfig, cfg.solver),
                "arbitration": (ArbitrationConfig, cfg.arbitration),
                "perception": (PerceptionConfig, cfg.perception),
                "collision": (CollisionConfig, cfg.collision),
                "session": (SessionConfig, cfg.session)}
    for name, (cls, defaults) in sections.items():
        if name in data:
            setattr(cfg, name, _merge_section(cls, defaults, data[name]))
    for kind, term_data in data.get("objectives", {}).items():
        if kind not in cfg.objectives:
            raise ValueError(f"unknown objective kind '{kind}' in config")
        cfg.objectives[kind] = _merge_section(TermConfig, cfg.objectives[kind], term_data)
    extra = set(data) - set(sections) - {"objectives"}
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    return cfg


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config file must contain a JSON object")
    return config_from_dict(raw)
