"""Core data model plus line-delimited parsers for detections, tracks, and ground truth.

Wire formats (one JSON record per line):
  detections.jsonl  {"frame": int, "id": str, "class": str, "cx": float, "cy": float,
                     "w": float, "h": float}
  gt.jsonl          {"frame": int, "x1": float, "y1": float, "x2": float, "y2": float,
                     "track": int}
  meta.json         {"video_id": str, "width": int, "height": int, "frames": int,
                     "fps": float}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DegenerateRectError, DuplicateIdentityError, ParseError
from .geometry import BBox, Rect


@dataclass(frozen=True)
class VideoMeta:
    """Static per-video properties; W/H bound all crop clamping."""

    video_id: str
    width: int
    height: int
    frames: int
    fps: float

    def __post_init__(self) -> None:
        if min(self.width, self.height, self.frames) <= 0 or self.fps <= 0:
            raise ParseError(f"video meta for {self.video_id!r} has non-positive dimensions")


@dataclass(frozen=True)
class Detection:
    """One tracked object observation in one frame."""

    frame_idx: int
    object_id: str
    class_label: str
    bbox: BBox

    def __post_init__(self) -> None:
        if self.frame_idx < 0:
            raise ParseError(f"negative frame index {self.frame_idx}")
        if not self.class_label:
            raise ParseError(f"empty class label for object {self.object_id!r}")


@dataclass(frozen=True)
class Track:
    """Per-object trajectory: (frame_idx, BBox) samples with strictly increasing frames."""

    object_id: str
    class_label: str
    samples: tuple[tuple[int, BBox], ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError(f"track {self.object_id!r} has no samples")
        frames = [f for f, _ in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"track {self.object_id!r} frames are not strictly increasing")

    @property
    def first_frame(self) -> int:
        return self.samples[0][0]

    @property
    def last_frame(self) -> int:
        return self.samples[-1][0]

    def bbox_at(self, frame_idx: int) -> BBox:
        """Box at a frame: exact sample, linear interpolation inside gaps, held at the ends.

        Center and extent are interpolated independently between the two nearest
        observed samples; before the first / after the last sample the nearest
        observed box is returned unchanged.
        """
        if frame_idx <= self.first_frame:
            return self.samples[0][1]
        if frame_idx >= self.last_frame:
            return self.samples[-1][1]
        lo = 0
        hi = len(self.samples) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.samples[mid][0] <= frame_idx:
                lo = mid
            else:
                hi = mid
        f0, b0 = self.samples[lo]
        f1, b1 = self.samples[hi]
        if frame_idx == f0:
            return b0
        t = (frame_idx - f0) / (f1 - f0)
        return BBox(
            cx=b0.cx + t * (b1.cx - b0.cx),
            cy=b0.cy + t * (b1.cy - b0.cy),
            w=b0.w + t * (b1.w - b0.w),
            h=b0.h + t * (b1.h - b0.h),
        )


@dataclass(frozen=True)
class GTRegion:
    """One ground-truth anomalous rectangle in one frame."""

    frame_idx: int
    rect: Rect
    gt_track_id: int


@dataclass(frozen=True)
class GroundTruth:
    """Anomaly regions plus the same regions grouped into per-track lists."""

    regions: tuple[GTRegion, ...]
    tracks: dict[int, tuple[GTRegion, ...]] = field(default_factory=dict)

    @staticmethod
    def from_regions(regions: Iterable[GTRegion]) -> GroundTruth:
        regions = tuple(regions)
        grouped: dict[int, list[GTRegion]] = {}
        for region in regions:
            grouped.setdefault(region.gt_track_id, []).append(region)
        tracks = {tid: tuple(rs) for tid, rs in grouped.items()}
        return GroundTruth(regions=regions, tracks=tracks)


def _iter_lines(stream: Iterable[str] | IO[str]) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _record(lineno: int, line: str, required: dict[str, type]) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(rec, dict):
        raise ParseError(f"line {lineno}: record is not an object")
    for key, kind in required.items():
        if key not in rec:
            raise ParseError(f"line {lineno}: missing field {key!r}")
        value = rec[key]
        if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            continue
        if kind is int and isinstance(value, int) and not isinstance(value, bool):
            continue
        if kind is str and isinstance(value, str):
            continue
        raise ParseError(f"line {lineno}: field {key!r} has wrong type")
    return rec


_DET_FIELDS = {"frame": int, "id": str, "class": str, "cx": float, "cy": float, "w": float, "h": float}
_GT_FIELDS = {"frame": int, "x1": float, "y1": float, "x2": float, "y2": float, "track": int}


def parse_detections(stream: Iterable[str] | IO[str], meta: VideoMeta) -> list[Detection]:
    """Parse a detections stream, sorted by (frame_idx, object_id).

    Out-of-bounds centers are kept (detectors may overshoot the frame), but the
    box extent is capped at max(W, H); violations and duplicate
    (frame, id) pairs are errors.
    """
    max_extent = float(max(meta.width, meta.height))
    seen: set[tuple[int, str]] = set()
    out: list[Detection] = []
    for lineno, line in _iter_lines(stream):
        rec = _record(lineno, line, _DET_FIELDS)
        key = (rec["frame"], rec["id"])
        if key in seen:
            raise DuplicateIdentityError(
                f"line {lineno}: duplicate detection for frame {key[0]}, object {key[1]!r}"
            )
        seen.add(key)
        if rec["w"] > max_extent or rec["h"] > max_extent:
            raise ParseError(
                f"line {lineno}: box extent ({rec['w']}x{rec['h']}) exceeds frame bound {max_extent}"
            )
        try:
            bbox = BBox(cx=float(rec["cx"]), cy=float(rec["cy"]), w=float(rec["w"]), h=float(rec["h"]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        out.append(
            Detection(
                frame_idx=rec["frame"],
                object_id=rec["id"],
                class_label=rec["class"].strip().lower(),
                bbox=bbox,
            )
        )
    out.sort(key=lambda d: (d.frame_idx, d.object_id))
    return out


def tracks_from_detections(dets: Iterable[Detection]) -> list[Track]:
    """Group tracker-associated detections into one Track per object_id."""
    grouped: dict[str, list[Detection]] = {}
    for det in dets:
        grouped.setdefault(det.object_id, []).append(det)
    tracks = []
    for object_id in sorted(grouped):
        members = sorted(grouped[object_id], key=lambda d: d.frame_idx)
        tracks.append(
            Track(
                object_id=object_id,
                class_label=members[0].class_label,
                samples=tuple((d.frame_idx, d.bbox) for d in members),
            )
        )
    return tracks


def parse_ground_truth(stream: Iterable[str] | IO[str]) -> GroundTruth:
    """Parse gt.jsonl into regions plus per-track grouping."""
    regions: list[GTRegion] = []
    for lineno, line in _iter_lines(stream):
        rec = _record(lineno, line, _GT_FIELDS)
        try:
            rect = Rect(float(rec["x1"]), float(rec["y1"]), float(rec["x2"]), float(rec["y2"]))
        except DegenerateRectError as exc:
            raise DegenerateRectError(f"line {lineno}: {exc}") from exc
        if rec["frame"] < 0:
            raise ParseError(f"line {lineno}: negative frame index")
        regions.append(GTRegion(frame_idx=rec["frame"], rect=rect, gt_track_id=rec["track"]))
    return GroundTruth.from_regions(regions)


def detection_to_json(det: Detection) -> str:
    return json.dumps(
        {
            "frame": det.frame_idx,
            "id": det.object_id,
            "class": det.class_label,
            "cx": det.bbox.cx,
            "cy": det.bbox.cy,
            "w": det.bbox.w,
            "h": det.bbox.h,
        },
        sort_keys=False,
    )


def gt_region_to_json(region: GTRegion) -> str:
    r = region.rect
    return json.dumps(
        {
            "frame": region.frame_idx,
            "x1": r.x_min,
            "y1": r.y_min,
            "x2": r.x_max,
            "y2": r.y_max,
            "track": region.gt_track_id,
        }
    )


def write_detections(dets: Iterable[Detection], fp: IO[str]) -> None:
    for det in dets:
        fp.write(detection_to_json(det) + "\n")


def write_ground_truth(gt: GroundTruth, fp: IO[str]) -> None:
    for region in gt.regions:
        fp.write(gt_region_to_json(region) + "\n")


def load_meta(path: str | Path) -> VideoMeta:
    path = Path(path)
    try:
        rec = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read video meta {path}: {exc}") from exc
    for key in ("video_id", "width", "height", "frames", "fps"):
        if key not in rec:
            raise ParseError(f"video meta {path} missing field {key!r}")
    return VideoMeta(
        video_id=str(rec["video_id"]),
        width=int(rec["width"]),
        height=int(rec["height"]),
        frames=int(rec["frames"]),
        fps=float(rec["fps"]),
    )


def save_meta(meta: VideoMeta, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "video_id": meta.video_id,
                "width": meta.width,
                "height": meta.height,
                "frames": meta.frames,
                "fps": meta.fps,
            }
        )
        + "\n"
    )


def read_detections(path: str | Path, meta: VideoMeta) -> list[Detection]:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_detections(fp, meta)


def read_ground_truth(path: str | Path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as fp:
        return parse_ground_truth(fp)
