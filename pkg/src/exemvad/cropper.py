"""Crop-window geometry and red-rectangle annotation for unit image pairs.

The window for a unit merges its member boxes at the anchor frame and at the
future frame, pads by half the merged extent (at least w_min/h_min per side),
clamps to the frame, and is applied identically to both frames so the crops
share background and object regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from PIL import Image, ImageDraw

from .errors import ImageIOError
from .geometry import Rect
from .ingest import Track, VideoMeta
from .pairing import Unit

MIN_HALF_WIDTH = 240.0
MIN_HALF_HEIGHT = 135.0
RECT_COLOR = (255, 0, 0)
RECT_STROKE = 3


@dataclass(frozen=True)
class CropSpec:
    """One window shared by both frames, plus the member boxes to outline in each."""

    unit_id: str
    window: Rect
    frame_t: int
    frame_t2: int
    draw_rects_t: tuple[Rect, ...]
    draw_rects_t2: tuple[Rect, ...]
    track_truncated: bool = False


@dataclass(frozen=True)
class CropImagePair:
    """The two extracted crops; both rasters share the window's dimensions."""

    image_t: Image.Image
    image_t2: Image.Image
    unit_id: str
    encoding: str = "PNG"


def merge_bbox(a: Rect, b: Rect) -> Rect:
    """Tight cover of two rects: element-wise min top-left, max bottom-right."""
    return Rect(
        min(a.x_min, b.x_min),
        min(a.y_min, b.y_min),
        max(a.x_max, b.x_max),
        max(a.y_max, b.y_max),
    )


def crop_window(
    bbox_t: Rect,
    bbox_t2: Rect,
    meta: VideoMeta,
    w_min: float = MIN_HALF_WIDTH,
    h_min: float = MIN_HALF_HEIGHT,
) -> Rect:
    """Padded, clamped window around the time-merged box of a unit.

    Padding per side is half the merged extent, floored at w_min/h_min, then the
    window is clipped to [0, W] x [0, H].
    """
    merged = merge_bbox(bbox_t, bbox_t2)
    w = max(abs(merged.x_max - merged.x_min) / 2.0, w_min)
    h = max(abs(merged.y_max - merged.y_min) / 2.0, h_min)
    return Rect(
        max(merged.x_min - w, 0.0),
        max(merged.y_min - h, 0.0),
        min(merged.x_max + w, float(meta.width)),
        min(merged.y_max + h, float(meta.height)),
    )


def build_crop_spec(
    unit: Unit,
    tracks: Mapping[str, Track],
    meta: VideoMeta,
    w_min: float = MIN_HALF_WIDTH,
    h_min: float = MIN_HALF_HEIGHT,
) -> CropSpec:
    """Resolve member boxes at t and t+delta and compute the shared window.

    A member whose track ends before t+delta keeps its last observed box (objects
    leaving the scene can themselves be anomalous); the spec is flagged so
    downstream consumers can tell.
    """
    t = unit.anchor_frame
    t2 = t + unit.delta
    rects_t = []
    rects_t2 = []
    truncated = False
    for object_id in unit.members:
        track = tracks[object_id]
        rects_t.append(track.bbox_at(t).to_rect())
        rects_t2.append(track.bbox_at(t2).to_rect())
        if track.last_frame < t2:
            truncated = True
    bbox_t = rects_t[0]
    bbox_t2 = rects_t2[0]
    for r in rects_t[1:]:
        bbox_t = merge_bbox(bbox_t, r)
    for r in rects_t2[1:]:
        bbox_t2 = merge_bbox(bbox_t2, r)
    return CropSpec(
        unit_id=unit.unit_id,
        window=crop_window(bbox_t, bbox_t2, meta, w_min, h_min),
        frame_t=t,
        frame_t2=t2,
        draw_rects_t=tuple(rects_t),
        draw_rects_t2=tuple(rects_t2),
        track_truncated=truncated,
    )


def frame_image_path(frames_dir: str | Path, frame_idx: int) -> Path:
    return Path(frames_dir) / f"{frame_idx:06d}.png"


def load_frame_image(frames_dir: str | Path, frame_idx: int) -> Image.Image:
    path = frame_image_path(frames_dir, frame_idx)
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except FileNotFoundError as exc:
        raise ImageIOError(f"frame image for frame {frame_idx} not found at {path}") from exc
    except OSError as exc:
        raise ImageIOError(f"frame image for frame {frame_idx} unreadable: {exc}") from exc


def _annotate_one(image: Image.Image, rects: tuple[Rect, ...], window: Rect,
                  stroke_px: int, color: tuple[int, int, int]) -> Image.Image:
    annotated = image.copy()
    draw = ImageDraw.Draw(annotated)
    for rect in rects:
        draw.rectangle(
            (round(rect.x_min), round(rect.y_min), round(rect.x_max), round(rect.y_max)),
            outline=color,
            width=stroke_px,
        )
    box = (
        round(window.x_min),
        round(window.y_min),
        round(window.x_max),
        round(window.y_max),
    )
    return annotated.crop(box)


def annotate_and_crop(
    frame_image_t: Image.Image,
    frame_image_t2: Image.Image,
    spec: CropSpec,
    stroke_px: int = RECT_STROKE,
    color: tuple[int, int, int] = RECT_COLOR,
) -> CropImagePair:
    """Outline each member box in red, then cut both frames to the shared window."""
    return CropImagePair(
        image_t=_annotate_one(frame_image_t, spec.draw_rects_t, spec.window, stroke_px, color),
        image_t2=_annotate_one(frame_image_t2, spec.draw_rects_t2, spec.window, stroke_px, color),
        unit_id=spec.unit_id,
    )


def crop_spec_to_json_dict(spec: CropSpec) -> dict:
    return {
        "unit": spec.unit_id,
        "window": list(spec.window.as_tuple()),
        "t": spec.frame_t,
        "t2": spec.frame_t2,
        "rects_t": [list(r.as_tuple()) for r in spec.draw_rects_t],
        "rects_t2": [list(r.as_tuple()) for r in spec.draw_rects_t2],
        "track_truncated": spec.track_truncated,
    }


def crop_spec_from_json_dict(rec: dict) -> CropSpec:
    return CropSpec(
        unit_id=rec["unit"],
        window=Rect(*rec["window"]),
        frame_t=rec["t"],
        frame_t2=rec["t2"],
        draw_rects_t=tuple(Rect(*r) for r in rec["rects_t"]),
        draw_rects_t2=tuple(Rect(*r) for r in rec["rects_t2"]),
        track_truncated=rec.get("track_truncated", False),
    )
