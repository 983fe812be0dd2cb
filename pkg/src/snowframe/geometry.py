"""Shared rectangle helpers. Rects are (x, y, w, h) tuples in pixels."""

from __future__ import annotations

import math

Rect = tuple[int, int, int, int]


def iround(x: float) -> int:
    """Round half up; Python's round() rounds half to even."""
    return math.floor(x + 0.5)


def rect_area(rect: Rect) -> int:
    return rect[2] * rect[3]


def iou(a: Rect, b: Rect) -> float:
    """Intersection over union of two rects; 0 when disjoint or degenerate."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(ax, bx)
    iy = max(ay, by)
    ix2 = min(ax + aw, bx + bw)
    iy2 = min(ay + ah, by + bh)
    if ix2 <= ix or iy2 <= iy:
        return 0.0
    inter = (ix2 - ix) * (iy2 - iy)
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return inter / union


def clamp_rect(rect: Rect, width: int, height: int) -> Rect:
    """Clip a rect to the [0,width)x[0,height) frame, preserving emptiness."""
    x, y, w, h = rect
    x2 = min(x + w, width)
    y2 = min(y + h, height)
    x = max(x, 0)
    y = max(y, 0)
    return (x, y, max(x2 - x, 0), max(y2 - y, 0))
