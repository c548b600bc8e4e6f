"""Pixel-space primitives shared across the pipeline: center boxes and corner rects."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateRectError


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box stored as center plus extent, in float pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"bbox extent must be positive, got w={self.w}, h={self.h}")

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2

    def to_rect(self) -> Rect:
        return Rect(self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle as corner coordinates with x_min <= x_max, y_min <= y_max."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise DegenerateRectError(
                f"degenerate rect ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    def translate(self, dx: float, dy: float) -> Rect:
        return Rect(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def clamp(self, frame_w: float, frame_h: float) -> Rect:
        """Clip to [0, frame_w] x [0, frame_h]."""
        return Rect(
            min(max(self.x_min, 0.0), frame_w),
            min(max(self.y_min, 0.0), frame_h),
            min(max(self.x_max, 0.0), frame_w),
            min(max(self.y_max, 0.0), frame_h),
        )

    def contains(self, other: Rect) -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and self.x_max >= other.x_max
            and self.y_max >= other.y_max
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)
