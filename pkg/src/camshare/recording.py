"""Session log reading and deterministic replay.

A log is JSONL: a header line carrying the engine version, the full
config, and the scene, followed by event and snapshot lines in tick
order. Replaying re-feeds the recorded events into a fresh engine built
from the embedded scene/config; the resulting snapshot stream must hash
identically to the recorded one.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .arbitration import InteractionEvent
from .config import config_from_dict
from .engine import Engine
from .perception import BodyFrame, LandmarkFrame
from .scene import scene_from_dict


class ReplayError(ValueError):
    pass


@dataclass
class SessionLog:
    header: dict
    events_by_tick: dict[int, list[dict]]
    snapshots: list[dict]
    warnings: list[str] = field(default_factory=list)

    def snapshot_hash(self) -> str:
        h = hashlib.sha256()
        for rec in self.snapshots:
            h.update(json.dumps(rec, sort_keys=True).encode())
        return h.hexdigest()


def read_log(path: str | Path) -> SessionLog:
    path = Path(path)
    if not path.exists():
        raise ReplayError(f"log file not found: {path}")
    header = None
    events: dict[int, list[dict]] = {}
    snapshots: list[dict] = []
    warnings: list[str] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                warnings.append(f"log truncated at line {lineno}; replaying the "
                                "prefix")
                break
            kind = rec.get("type")
            if kind == "header":
                header = rec
            elif kind == "event":
                events.setdefault(int(rec["tick"]), []).append(rec)
            elif kind == "snapshot":
                snapshots.append(rec)
            else:
                warnings.append(f"unknown record type '{kind}' at line {lineno}")
    if header is None:
        raise ReplayError(f"{path}: missing header line")
    return SessionLog(header, events, snapshots, warnings)


def _event_from_record(rec: dict, timestamp: float) -> InteractionEvent:
    data = dict(rec["data"])
    kind = rec["kind"]
    if kind == "hand_frame":
        data = {"frame": LandmarkFrame(np.asarray(data["points"]), timestamp)}
    elif kind == "body_frame":
        data = {"frame": BodyFrame(np.asarray(data["points"]),
                                   np.asarray(data["valid"], dtype=bool), timestamp)}
    else:
        for key in ("target", "q"):
            if key in data:
                data[key] = np.asarray(data[key], dtype=float)
    return InteractionEvent(rec["source"], kind, timestamp, data)


@dataclass
class ReplayResult:
    ticks: int
    original_hash: str
    replay_hash: str
    matches: bool
    warnings: list[str]


def replay(path: str | Path) -> ReplayResult:
    """Re-run a recorded session and compare snapshot streams."""
    log = read_log(path)
    version = log.header.get("version")
    if version != __version__:
        raise ReplayError(f"log written by engine version {version}; this engine "
                          f"is {__version__}; refusing to replay")

    scene = scene_from_dict(log.header["scene"])
    config = config_from_dict(log.header["config"])

    engine = Engine(scene, config)
    n_ticks = len(log.snapshots)
    for tick in range(1, n_ticks + 1):
        now = tick * engine.dt
        for rec in log.events_by_tick.get(tick, []):
            engine.submit_event(_event_from_record(rec, now))
        engine.tick()

    return ReplayResult(
        ticks=n_ticks,
        original_hash=log.snapshot_hash(),
        replay_hash=engine.snapshot_hash(),
        matches=log.snapshot_hash() == engine.snapshot_hash(),
        warnings=log.warnings,
    )
