"""Unit formation: pseudo-depth pairing of nearby objects plus leftover singles.

Two object centers (x1, y1) and (x2, y2) get a surrogate depth gap z = |y1 - y2|
(a ground plane receding toward the top of the image), and their 3D separation is
the Euclidean distance between (x1, y1, z) and (x2, y2, 0). Centers closer than
the threshold h are paired; objects in no pair become singles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Literal, Sequence

from .errors import ConfigError
from .ingest import Detection, VideoMeta

PAIR: Literal["pair"] = "pair"
SINGLE: Literal["single"] = "single"

UnitKind = Literal["pair", "single"]


@dataclass(frozen=True)
class PairingConfig:
    """Pairing threshold and anchor scheduling knobs.

    h=None resolves to 0.25 * sqrt(W^2 + H^2) so the threshold scales with the
    scene; stride=None defaults to delta (one description per unit per window).
    """

    h: float | None = None
    delta: int = 30
    stride: int | None = None

    def __post_init__(self) -> None:
        if self.h is not None and self.h <= 0:
            raise ConfigError(f"pairing threshold h must be positive, got {self.h}")
        if self.delta < 1:
            raise ConfigError(f"delta must be >= 1, got {self.delta}")
        if self.stride is not None and self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")

    def resolved_h(self, meta: VideoMeta | None = None) -> float:
        if self.h is not None:
            return self.h
        if meta is None:
            raise ConfigError("pairing threshold h is unset and no video meta was given")
        return 0.25 * math.hypot(meta.width, meta.height)

    def resolved_stride(self) -> int:
        return self.delta if self.stride is None else self.stride


@dataclass(frozen=True)
class Unit:
    """A scoring subject: an object pair or a single object anchored at frame t."""

    unit_id: str
    kind: UnitKind
    members: tuple[str, ...]
    anchor_frame: int
    delta: int
    class_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind == PAIR and len(self.members) != 2:
            raise ValueError(f"pair unit {self.unit_id!r} must have exactly 2 members")
        if self.kind == SINGLE and len(self.members) != 1:
            raise ValueError(f"single unit {self.unit_id!r} must have exactly 1 member")
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"unit {self.unit_id!r} has repeated members")
        if self.delta < 1:
            raise ValueError(f"unit {self.unit_id!r} has non-positive delta")


def unit_key(anchor_frame: int, members: Sequence[str]) -> str:
    """Deterministic per-video unit identifier."""
    return f"{anchor_frame}:{'+'.join(sorted(members))}"


def pseudo_depth_distance(l1: tuple[float, float], l2: tuple[float, float]) -> float:
    """3D separation of two centers under the pseudo-depth z = |y1 - y2|."""
    dx = l1[0] - l2[0]
    dy = l1[1] - l2[1]
    return math.sqrt(dx * dx + 2.0 * dy * dy)


def build_units(
    frame_objects: Sequence[Detection],
    cfg: PairingConfig,
    meta: VideoMeta | None = None,
) -> list[Unit]:
    """Form pair units (distance strictly below h) and singles for one anchor frame.

    Every unordered pair below the threshold becomes a Pair unit, so one object
    may appear in several pairs; objects in no pair become Single units. Output
    order is deterministic: pairs sorted by member ids, then singles by id.
    """
    if not frame_objects:
        return []
    frames = {d.frame_idx for d in frame_objects}
    if len(frames) != 1:
        raise ValueError(f"build_units expects one frame, got frames {sorted(frames)}")
    t = frame_objects[0].frame_idx
    h = cfg.resolved_h(meta)

    dets = sorted(frame_objects, key=lambda d: d.object_id)
    paired: set[str] = set()
    units: list[Unit] = []
    for a, b in combinations(dets, 2):
        d = pseudo_depth_distance((a.bbox.cx, a.bbox.cy), (b.bbox.cx, b.bbox.cy))
        if d < h:
            paired.add(a.object_id)
            paired.add(b.object_id)
            units.append(
                Unit(
                    unit_id=unit_key(t, (a.object_id, b.object_id)),
                    kind=PAIR,
                    members=(a.object_id, b.object_id),
                    anchor_frame=t,
                    delta=cfg.delta,
                    class_labels=(a.class_label, b.class_label),
                )
            )
    for det in dets:
        if det.object_id not in paired:
            units.append(
                Unit(
                    unit_id=unit_key(t, (det.object_id,)),
                    kind=SINGLE,
                    members=(det.object_id,),
                    anchor_frame=t,
                    delta=cfg.delta,
                    class_labels=(det.class_label,),
                )
            )
    return units


def schedule_anchors(meta: VideoMeta, cfg: PairingConfig) -> list[int]:
    """Anchor frames {0, stride, 2*stride, ...} that still have a future frame t+delta."""
    stride = cfg.resolved_stride()
    return list(range(0, max(meta.frames - cfg.delta, 0), stride))


def unit_to_json_dict(unit: Unit) -> dict:
    return {
        "unit": unit.unit_id,
        "kind": unit.kind,
        "members": list(unit.members),
        "classes": list(unit.class_labels),
        "t": unit.anchor_frame,
        "delta": unit.delta,
    }


def unit_from_json_dict(rec: dict) -> Unit:
    return Unit(
        unit_id=rec["unit"],
        kind=rec["kind"],
        members=tuple(rec["members"]),
        anchor_frame=rec["t"],
        delta=rec["delta"],
        class_labels=tuple(rec.get("classes", ())),
    )
