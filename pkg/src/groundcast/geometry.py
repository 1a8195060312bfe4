"""Axis-aligned bounding box arithmetic.

Boxes are integer pixel rectangles with max-exclusive corners: a 1x1-pixel
box at (x, y) is (x, y, x+1, y+1). Empty boxes are unrepresentable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class BoundingBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box ({self.x_min},{self.y_min},{self.x_max},{self.y_max})"
            )

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    def contains_pixel(self, x: int, y: int) -> bool:
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max

    def contains_box(self, other: "BoundingBox") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and other.x_max <= self.x_max
            and other.y_max <= self.y_max
        )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def area(b: BoundingBox) -> int:
    """Pixel count covered by the box."""
    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def intersection_area(a: BoundingBox, b: BoundingBox) -> int:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union in [0, 1].

    Entirely integer arithmetic until the final division, so two boxes with
    rational IoU exactly 1/2 compare as >= 0.5 without float drift.
    """
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    union = area(a) + area(b) - inter
    return inter / union


def iou_at_least(a: BoundingBox, b: BoundingBox, num: int, den: int) -> bool:
    """Exact test iou(a, b) >= num/den without any float division."""
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    return inter * den >= num * union


def union_box(boxes: Iterable[BoundingBox]) -> BoundingBox:
    """Smallest box enclosing every input box. Raises on empty input."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("no candidates")
    return BoundingBox(
        min(b.x_min for b in boxes),
        min(b.y_min for b in boxes),
        max(b.x_max for b in boxes),
        max(b.y_max for b in boxes),
    )
