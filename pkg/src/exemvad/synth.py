"""Seeded synthetic scenes: scripted actors, injected anomalies, and ground truth.

Actors move along piecewise-linear waypoint paths; their per-frame boxes become
the detection/track stream. Anomaly injections carry ground-truth regions and
override the behavior tag the mock describe backend resolves per unit, so
end-to-end runs close the loop without any model in the loop. Frame images are
flat gray rasters with solid colored blocks per actor, enough for the crop and
annotation pixel checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
from PIL import Image, ImageDraw

from .describe import ANOMALY_TAGS, BEHAVIOR_SENTENCES
from .errors import ScenarioError
from .geometry import BBox
from .ingest import (
    Detection,
    GroundTruth,
    GTRegion,
    VideoMeta,
    save_meta,
    write_detections,
    write_ground_truth,
)
from .pairing import PAIR, PairingConfig, build_units, schedule_anchors

# base actor extents at the 640x360 reference resolution, scaled linearly
BASE_RESOLUTION = (640.0, 360.0)
ACTOR_SIZES = {
    "person": (18.0, 44.0),
    "car": (72.0, 34.0),
    "dog": (22.0, 14.0),
    "bag": (16.0, 16.0),
}
ACTOR_COLORS = {
    "person": (66, 114, 196),
    "car": (84, 164, 84),
    "dog": (214, 168, 62),
    "bag": (150, 86, 170),
}
BACKGROUND_GRAY = (114, 114, 114)

DEFAULT_CLASS_TAGS = {"person": "walk_sidewalk", "car": "drive_road"}

PAIR_FALLBACK_TAGS = {
    ("person", "person"): "two_people_walking",
    ("car", "person"): "walk_past_car",
    ("car", "car"): "cars_passing",
    ("dog", "person"): "walk_dog",
}


@dataclass(frozen=True)
class ActorScript:
    """One scripted actor: waypoints are (frame, x, y) with increasing frames."""

    actor_id: str
    class_label: str
    waypoints: tuple[tuple[int, float, float], ...]
    behavior: tuple[tuple[int, int, str], ...] = ()  # (start, end, tag) overrides
    size: tuple[float, float] | None = None

    def presence(self) -> tuple[int, int]:
        return self.waypoints[0][0], self.waypoints[-1][0]

    def tag_at(self, frame_idx: int) -> str | None:
        for start, end, tag in self.behavior:
            if start <= frame_idx < end:
                return tag
        return DEFAULT_CLASS_TAGS.get(self.class_label)


@dataclass(frozen=True)
class Injection:
    """Scripted behavior span; anomalous iff its tag is in the anomaly lexicon."""

    tag: str
    start: int
    end: int
    actors: tuple[str, ...]

    @property
    def anomalous(self) -> bool:
        return self.tag in ANOMALY_TAGS


@dataclass(frozen=True)
class Scenario:
    video_id: str
    seed: int
    duration: int
    actors: tuple[ActorScript, ...]
    injections: tuple[Injection, ...] = ()


@dataclass
class SynthResult:
    meta: VideoMeta
    detections: list[Detection]
    ground_truth: GroundTruth
    behaviors: dict[str, str] = field(default_factory=dict)  # unit_id -> tag


def _actor_size(script: ActorScript, meta: VideoMeta) -> tuple[float, float]:
    if script.size is not None:
        return script.size
    base_w, base_h = ACTOR_SIZES.get(script.class_label, (20.0, 20.0))
    return (
        base_w * meta.width / BASE_RESOLUTION[0],
        base_h * meta.height / BASE_RESOLUTION[1],
    )


def _position(script: ActorScript, frame_idx: int) -> tuple[float, float]:
    frames = [w[0] for w in script.waypoints]
    xs = [w[1] for w in script.waypoints]
    ys = [w[2] for w in script.waypoints]
    x = float(np.interp(frame_idx, frames, xs))
    y = float(np.interp(frame_idx, frames, ys))
    return x, y


def _validate(scenario: Scenario, meta: VideoMeta) -> None:
    for script in scenario.actors:
        frames = [w[0] for w in script.waypoints]
        if not frames:
            raise ScenarioError(f"actor {script.actor_id!r} has no waypoints")
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ScenarioError(f"actor {script.actor_id!r} waypoint frames must increase")
        for frame_idx, x, y in script.waypoints:
            if not (0 <= frame_idx < scenario.duration):
                raise ScenarioError(
                    f"actor {script.actor_id!r} waypoint at frame {frame_idx} outside video"
                )
            if not (0 <= x <= meta.width and 0 <= y <= meta.height):
                raise ScenarioError(
                    f"actor {script.actor_id!r} waypoint ({x}, {y}) outside the frame"
                )
    ids = [a.actor_id for a in scenario.actors]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate actor ids")
    by_id = {a.actor_id: a for a in scenario.actors}
    for inj in scenario.injections:
        if inj.tag not in BEHAVIOR_SENTENCES:
            raise ScenarioError(f"injection tag {inj.tag!r} is not in the behavior lexicon")
        for actor_id in inj.actors:
            if actor_id not in by_id:
                raise ScenarioError(f"injection references unknown actor {actor_id!r}")


def _detections(scenario: Scenario, meta: VideoMeta) -> list[Detection]:
    out = []
    for script in scenario.actors:
        w, h = _actor_size(script, meta)
        first, last = script.presence()
        for frame_idx in range(first, min(last, scenario.duration - 1) + 1):
            x, y = _position(script, frame_idx)
            out.append(
                Detection(
                    frame_idx=frame_idx,
                    object_id=script.actor_id,
                    class_label=script.class_label,
                    bbox=BBox(cx=round(x, 2), cy=round(y, 2), w=round(w, 2), h=round(h, 2)),
                )
            )
    out.sort(key=lambda d: (d.frame_idx, d.object_id))
    return out


def _ground_truth(scenario: Scenario, meta: VideoMeta) -> GroundTruth:
    regions = []
    track_id = 0
    for inj in scenario.injections:
        if not inj.anomalous:
            continue
        for actor_id in inj.actors:
            script = next(a for a in scenario.actors if a.actor_id == actor_id)
            w, h = _actor_size(script, meta)
            first, last = script.presence()
            start = max(inj.start, first)
            end = min(inj.end, last + 1, scenario.duration)
            for frame_idx in range(start, end):
                x, y = _position(script, frame_idx)
                rect = BBox(cx=round(x, 2), cy=round(y, 2), w=round(w, 2), h=round(h, 2)).to_rect()
                regions.append(
                    GTRegion(
                        frame_idx=frame_idx,
                        rect=rect.clamp(meta.width, meta.height),
                        gt_track_id=track_id,
                    )
                )
            track_id += 1
    return GroundTruth.from_regions(regions)


def _unit_tag(scenario: Scenario, unit) -> str:
    by_id = {a.actor_id: a for a in scenario.actors}
    t = unit.anchor_frame
    if unit.kind == PAIR:
        members = frozenset(unit.members)
        for inj in scenario.injections:
            if len(inj.actors) == 2 and frozenset(inj.actors) == members and inj.start <= t < inj.end:
                return inj.tag
        key = tuple(sorted(by_id[m].class_label for m in unit.members))
        tag = PAIR_FALLBACK_TAGS.get(key)
        if tag is None:
            raise ScenarioError(f"no co-presence behavior for class pair {key}")
        return tag
    actor_id = unit.members[0]
    for inj in scenario.injections:
        if inj.actors == (actor_id,) and inj.start <= t < inj.end:
            return inj.tag
    tag = by_id[actor_id].tag_at(t)
    if tag is None:
        raise ScenarioError(
            f"actor {actor_id!r} ({by_id[actor_id].class_label}) has no behavior at frame {t}"
        )
    return tag


def generate(scenario: Scenario, meta: VideoMeta, pairing_cfg: PairingConfig) -> SynthResult:
    """Expand a scenario into detections, ground truth, and per-unit behavior tags.

    The behavior map is keyed by the exact unit ids the pairing stage will form
    under the given config, so the mock describe backend can resolve every unit.
    """
    _validate(scenario, meta)
    detections = _detections(scenario, meta)
    by_frame: dict[int, list[Detection]] = {}
    for det in detections:
        by_frame.setdefault(det.frame_idx, []).append(det)
    behaviors: dict[str, str] = {}
    for t in schedule_anchors(meta, pairing_cfg):
        for unit in build_units(by_frame.get(t, []), pairing_cfg, meta):
            behaviors[unit.unit_id] = _unit_tag(scenario, unit)
    return SynthResult(
        meta=meta,
        detections=detections,
        ground_truth=_ground_truth(scenario, meta),
        behaviors=behaviors,
    )


def render_frame(scenario: Scenario, meta: VideoMeta, frame_idx: int) -> Image.Image:
    """Flat gray frame with one solid block per present actor."""
    image = Image.new("RGB", (meta.width, meta.height), BACKGROUND_GRAY)
    draw = ImageDraw.Draw(image)
    for script in scenario.actors:
        first, last = script.presence()
        if not (first <= frame_idx <= last):
            continue
        w, h = _actor_size(script, meta)
        x, y = _position(script, frame_idx)
        color = ACTOR_COLORS.get(script.class_label, (200, 200, 200))
        draw.rectangle(
            (round(x - w / 2), round(y - h / 2), round(x + w / 2), round(y + h / 2)),
            fill=color,
        )
    return image


def write_video(
    scenario: Scenario,
    meta: VideoMeta,
    pairing_cfg: PairingConfig,
    out_dir: str | Path,
    write_frames: bool = True,
) -> SynthResult:
    """Materialize one video directory: meta, detections, gt, behaviors, frames."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = generate(scenario, meta, pairing_cfg)
    save_meta(meta, out_dir / "meta.json")
    with open(out_dir / "detections.jsonl", "w", encoding="utf-8") as fp:
        write_detections(result.detections, fp)
    with open(out_dir / "gt.jsonl", "w", encoding="utf-8") as fp:
        write_ground_truth(result.ground_truth, fp)
    with open(out_dir / "behaviors.jsonl", "w", encoding="utf-8") as fp:
        for unit_id in sorted(result.behaviors):
            fp.write(json.dumps({"unit_key": unit_id, "tag": result.behaviors[unit_id]}) + "\n")
    if write_frames:
        frames_dir = out_dir / "frames"
        frames_dir.mkdir(exist_ok=True)
        for frame_idx in range(scenario.duration):
            render_frame(scenario, meta, frame_idx).save(frames_dir / f"{frame_idx:06d}.png")
    return result


def load_behaviors(path: str | Path) -> dict[str, str]:
    behaviors = {}
    with open(path, "r", encoding="utf-8") as fp:
        for line in fp:
            line = line.strip()
            if line:
                rec = json.loads(line)
                behaviors[rec["unit_key"]] = rec["tag"]
    return behaviors


# ---------------------------------------------------------------------------
# Built-in benchmark suite: 5 nominal training videos, 3 test videos with
# injected interaction anomalies
# ---------------------------------------------------------------------------


def _lanes(width: int, height: int) -> dict:
    return {
        "sidewalk": 0.835 * height,
        "road": 0.583 * height,
        "road_edge": 0.708 * height,
        "grass": 0.93 * height,
        "crosswalk_x": 0.5 * width,
    }


def _walker(actor_id, rng, duration, width, lane_y, reverse=False, behavior=()):
    y = lane_y + rng.uniform(-8.0, 8.0)
    x0 = 20.0 + rng.uniform(0.0, 60.0)
    x1 = width - 20.0 - rng.uniform(0.0, 60.0)
    if reverse:
        x0, x1 = x1, x0
    return ActorScript(
        actor_id=actor_id,
        class_label="person",
        waypoints=((0, round(x0, 2), round(y, 2)), (duration - 1, round(x1, 2), round(y, 2))),
        behavior=behavior,
    )


def _crosser(actor_id, rng, duration, lanes):
    x = lanes["crosswalk_x"] + rng.uniform(-6.0, 6.0)
    y0 = lanes["grass"] - 5.0
    y1 = 0.39 * (lanes["road"] / 0.583)
    return ActorScript(
        actor_id=actor_id,
        class_label="person",
        waypoints=((0, round(x, 2), round(y0, 2)), (duration - 1, round(x, 2), round(y1, 2))),
        behavior=((0, duration, "cross_crosswalk"),),
    )


def _car(actor_id, rng, duration, width, lane_y, reverse=False):
    y = lane_y + rng.uniform(-4.0, 4.0)
    x0, x1 = 22.0, width - 22.0
    if reverse:
        x0, x1 = x1, x0
    return ActorScript(
        actor_id=actor_id,
        class_label="car",
        waypoints=((0, x0, round(y, 2)), (duration - 1, x1, round(y, 2))),
    )


def _pair_walkers(base_id, rng, duration, width, lane_y):
    y = lane_y + rng.uniform(-8.0, 8.0)
    x0 = 30.0 + rng.uniform(0.0, 40.0)
    x1 = width - 60.0 - rng.uniform(0.0, 40.0)
    a = ActorScript(
        actor_id=f"{base_id}_a",
        class_label="person",
        waypoints=((0, round(x0, 2), round(y, 2)), (duration - 1, round(x1, 2), round(y, 2))),
    )
    b = ActorScript(
        actor_id=f"{base_id}_b",
        class_label="person",
        waypoints=((0, round(x0 + 18, 2), round(y, 2)), (duration - 1, round(x1 + 18, 2), round(y, 2))),
    )
    return a, b


def make_benchmark_suite(
    seed: int = 42,
    width: int = 640,
    height: int = 360,
    duration: int = 240,
    fps: float = 30.0,
) -> tuple[list[tuple[Scenario, VideoMeta]], list[tuple[Scenario, VideoMeta]]]:
    """Deterministic scenario suite mirroring a crosswalk/sidewalk/street scene.

    Training videos are nominal-only and jointly cover every nominal behavior
    tag (including the pair co-presence tags); test videos inject sit_on_car,
    dog_alone, person_in_box, and crouch_ground anomalies on spans aligned to
    the 30-frame anchor grid.
    """
    if duration < 240:
        raise ScenarioError(f"benchmark suite needs duration >= 240, got {duration}")
    rng = np.random.default_rng(seed)
    lanes = _lanes(width, height)
    grass_behavior = ((0, duration, "walk_grass"),)

    def meta(video_id: str) -> VideoMeta:
        return VideoMeta(video_id=video_id, width=width, height=height, frames=duration, fps=fps)

    train: list[tuple[Scenario, VideoMeta]] = []

    train.append((Scenario(
        video_id="train_00", seed=seed, duration=duration,
        actors=(
            _walker("walk_a", rng, duration, width, lanes["sidewalk"]),
            _walker("walk_b", rng, duration, width, lanes["sidewalk"], reverse=True),
            _car("car_a", rng, duration, width, lanes["road"]),
        ),
    ), meta("train_00")))

    pa, pb = _pair_walkers("duo", rng, duration, width, lanes["sidewalk"])
    train.append((Scenario(
        video_id="train_01", seed=seed, duration=duration,
        actors=(pa, pb, _crosser("cross_a", rng, duration, lanes), _car("car_b", rng, duration, width, lanes["road"])),
    ), meta("train_01")))

    train.append((Scenario(
        video_id="train_02", seed=seed, duration=duration,
        actors=(
            _car("car_c", rng, duration, width, lanes["road"]),
            _car("car_d", rng, duration, width, lanes["road"], reverse=True),
            _walker("walk_c", rng, duration, width, lanes["sidewalk"]),
        ),
    ), meta("train_02")))

    train.append((Scenario(
        video_id="train_03", seed=seed, duration=duration,
        actors=(
            _car("car_e", rng, duration, width, lanes["road"]),
            _walker("edge_a", rng, duration, width, lanes["road_edge"]),
            _walker("walk_d", rng, duration, width, lanes["sidewalk"], reverse=True),
        ),
    ), meta("train_03")))

    # grass walking must surface as singles, so this video keeps the grass lane
    # clear of other persons (the pseudo-depth radius would pair them away)
    train.append((Scenario(
        video_id="train_04", seed=seed, duration=duration,
        actors=(
            _walker("grass_b", rng, duration, width, lanes["grass"], behavior=grass_behavior),
            _car("car_f", rng, duration, width, lanes["road"]),
        ),
    ), meta("train_04")))

    test: list[tuple[Scenario, VideoMeta]] = []

    # test_00: a person runs to a parked car and sits on it for frames [90, 180)
    car_x = round(0.67 * width, 2)
    road_y = round(lanes["road"], 2)
    car_h = ACTOR_SIZES["car"][1] * height / BASE_RESOLUTION[1]
    sit_y = round(road_y - car_h / 2 - 10.0, 2)
    sit_person = ActorScript(
        actor_id="p_sit",
        class_label="person",
        waypoints=(
            (0, 60.0, round(lanes["sidewalk"], 2)),
            (60, 240.0, round(lanes["sidewalk"], 2)),
            (90, car_x, sit_y),
            (179, car_x, sit_y),
            (239, width - 20.0, round(lanes["sidewalk"], 2)),
        ),
    )
    parked_car = ActorScript(
        actor_id="car_sit",
        class_label="car",
        waypoints=((0, car_x, road_y), (239, car_x, road_y)),
    )
    test.append((Scenario(
        video_id="test_00", seed=seed, duration=duration,
        actors=(
            sit_person,
            parked_car,
            _walker("walk_t0", rng, duration, width, lanes["sidewalk"], reverse=True),
        ),
        injections=(Injection(tag="sit_on_car", start=90, end=180, actors=("p_sit", "car_sit")),),
    ), meta("test_00")))

    # test_01: a dog crosses the grass alone for frames [60, 180)
    dog = ActorScript(
        actor_id="dog_0",
        class_label="dog",
        waypoints=(
            (60, round(0.6 * width, 2), round(lanes["grass"], 2)),
            (179, round(0.94 * width, 2), round(lanes["grass"], 2)),
        ),
    )
    slow_walker = ActorScript(
        actor_id="walk_t1",
        class_label="person",
        waypoints=((0, 20.0, round(lanes["sidewalk"], 2)), (239, round(0.47 * width, 2), round(lanes["sidewalk"], 2))),
    )
    test.append((Scenario(
        video_id="test_01", seed=seed, duration=duration,
        actors=(dog, slow_walker, _car("car_t1", rng, duration, width, lanes["road"])),
        injections=(Injection(tag="dog_alone", start=60, end=180, actors=("dog_0",)),),
    ), meta("test_01")))

    # test_02: one person pushes another in a box [60, 180); a third crouches on
    # the grass over the same span
    box_a = ActorScript(
        actor_id="p_box_a",
        class_label="person",
        waypoints=((0, 80.0, round(lanes["sidewalk"], 2)), (239, round(0.59 * width, 2), round(lanes["sidewalk"], 2))),
    )
    box_b = ActorScript(
        actor_id="p_box_b",
        class_label="person",
        waypoints=((0, 98.0, round(lanes["sidewalk"], 2)), (239, round(0.59 * width + 18, 2), round(lanes["sidewalk"], 2))),
    )
    croucher = ActorScript(
        actor_id="p_crouch",
        class_label="person",
        waypoints=(
            (0, round(0.66 * width, 2), round(lanes["grass"], 2)),
            (60, round(0.81 * width, 2), round(lanes["grass"], 2)),
            (179, round(0.81 * width, 2), round(lanes["grass"], 2)),
            (239, round(0.97 * width, 2), round(lanes["grass"], 2)),
        ),
        behavior=grass_behavior,
    )
    test.append((Scenario(
        video_id="test_02", seed=seed, duration=duration,
        actors=(box_a, box_b, croucher),
        injections=(
            Injection(tag="person_in_box", start=60, end=180, actors=("p_box_a", "p_box_b")),
            Injection(tag="crouch_ground", start=60, end=180, actors=("p_crouch",)),
        ),
    ), meta("test_02")))

    return train, test
