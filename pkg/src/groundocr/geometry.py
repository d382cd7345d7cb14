"""Axis-aligned pixel boxes and the overlap measures built on them.

Boxes use integer pixel coordinates with the origin at the top-left corner,
``x`` growing right and ``y`` growing down. Everything downstream (matching,
layout rendering, task construction) goes through :class:`Box`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence


class InvalidGeometry(ValueError):
    """Raised for boxes that cannot be represented (non-finite, inverted)."""


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise InvalidGeometry(f"image dims must be integers, got {self.width}x{self.height}")
        if self.width < 1 or self.height < 1:
            raise InvalidGeometry(f"image dims must be >= 1, got {self.width}x{self.height}")

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "ImageDims":
        return cls(int(d["width"]), int(d["height"]))


@dataclass(frozen=True, order=True)
class Box:
    """An ``[x1, y1, x2, y2]`` rectangle with strictly positive width and height."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not isinstance(v, int) or isinstance(v, bool):
                raise InvalidGeometry(f"box coordinates must be ints: {self.as_list()}")
        if self.x1 >= self.x2 or self.y1 >= self.y2:
            raise InvalidGeometry(f"degenerate box {self.as_list()}")

    def __iter__(self) -> Iterator[int]:
        return iter((self.x1, self.y1, self.x2, self.y2))

    def as_list(self) -> list:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def center_y(self) -> float:
        return (self.y1 + self.y2) / 2

    def within(self, dims: ImageDims) -> bool:
        return 0 <= self.x1 and 0 <= self.y1 and self.x2 <= dims.width and self.y2 <= dims.height


@dataclass(frozen=True)
class GroundedSpan:
    """A transcript attached to a box (a line, paragraph or word)."""

    text: str
    bbox: Box

    def to_dict(self) -> dict:
        return {"text": self.text, "bbox": self.bbox.as_list()}


def round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


def clip_box(raw: Sequence[float], dims: ImageDims) -> Box | None:
    """Round, clamp to ``[0, W] x [0, H]`` and validate a raw coordinate quadruple.

    Returns ``None`` when the clamped box has non-positive width or height.

    >>> clip_box([-5, -5, 10, 10], ImageDims(100, 100))
    Box(x1=0, y1=0, x2=10, y2=10)
    >>> clip_box([10, 10, 10, 20], ImageDims(100, 100)) is None
    True
    """
    if len(raw) != 4:
        raise InvalidGeometry(f"expected 4 coordinates, got {len(raw)}")
    vals = []
    for v in raw:
        f = float(v)
        if not math.isfinite(f):
            raise InvalidGeometry(f"non-finite coordinate in {list(raw)}")
        vals.append(round_half_up(f))
    x1, y1, x2, y2 = vals
    x1 = min(max(x1, 0), dims.width)
    x2 = min(max(x2, 0), dims.width)
    y1 = min(max(y1, 0), dims.height)
    y2 = min(max(y2, 0), dims.height)
    if x1 >= x2 or y1 >= y2:
        return None
    return Box(x1, y1, x2, y2)


def area(b: Box) -> int:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def intersection_area(a: Box, b: Box) -> int:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: Box, b: Box) -> float:
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def coverage(inner: Box, region: Box) -> float:
    """Fraction of ``inner``'s area that lies inside ``region``."""
    return intersection_area(inner, region) / area(inner)


def union_box(boxes: Sequence[Box]) -> Box:
    return Box(
        min(b.x1 for b in boxes),
        min(b.y1 for b in boxes),
        max(b.x2 for b in boxes),
        max(b.y2 for b in boxes),
    )
