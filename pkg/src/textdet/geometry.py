"""Axis-aligned rectangles with inclusive integer pixel coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True, order=True)
class BBox:
    """Inclusive box: a 1x1 box has left == right and top == bottom."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self) -> None:
        if self.left > self.right or self.top > self.bottom:
            raise ValueError(f"inverted rectangle: {self!r}")

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center_y(self) -> float:
        return (self.top + self.bottom) / 2.0

    def contains(self, other: "BBox") -> bool:
        return (self.left <= other.left and self.top <= other.top
                and self.right >= other.right and self.bottom >= other.bottom)

    def intersects(self, other: "BBox") -> bool:
        return not (other.left > self.right or other.right < self.left
                    or other.top > self.bottom or other.bottom < self.top)

    def union(self, other: "BBox") -> "BBox":
        return BBox(min(self.left, other.left), min(self.top, other.top),
                    max(self.right, other.right), max(self.bottom, other.bottom))


def intersection_area(a: BBox, b: BBox) -> int:
    w = min(a.right, b.right) - max(a.left, b.left) + 1
    h = min(a.bottom, b.bottom) - max(a.top, b.top) + 1
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def containment(inner: BBox, outer: BBox) -> float:
    """Fraction of `inner`'s area covered by `outer`."""
    return intersection_area(inner, outer) / inner.area


def bbox_of_pixels(pixels: Iterable[tuple[int, int]]) -> BBox:
    xs, ys = zip(*pixels)
    return BBox(min(xs), min(ys), max(xs), max(ys))


def horizontal_gap(a: BBox, b: BBox) -> int:
    """Signed column gap between two boxes; negative when they overlap in x."""
    return max(a.left, b.left) - min(a.right, b.right) - 1


def vertical_gap(a: BBox, b: BBox) -> int:
    """Signed row gap between two boxes; negative when they overlap in y."""
    return max(a.top, b.top) - min(a.bottom, b.bottom) - 1


def horizontal_overlap(a: BBox, b: BBox) -> int:
    """Shared column count; zero or negative when disjoint in x."""
    return min(a.right, b.right) - max(a.left, b.left) + 1
