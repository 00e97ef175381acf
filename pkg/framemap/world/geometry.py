"""
Pure planar geometry: rectangles, angle helpers, segment/rectangle intersection.
NumPy, float64, no side effects.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union[list, tuple, np.ndarray]


def as_point(p: ArrayLike) -> np.ndarray:
    """Convert to (2,) float64 array. Raises ValueError if invalid."""
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 1 or a.size != 2:
        raise ValueError("Expected 1D array of length 2, got shape %s" % (a.shape,))
    return a.reshape(2)


def as_points(points: ArrayLike) -> np.ndarray:
    """Convert to (N, 2) float64 array. Raises ValueError if invalid."""
    a = np.asarray(points, dtype=np.float64)
    if a.ndim == 1 and a.size == 0:
        return a.reshape(0, 2)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("Expected array of shape (N, 2), got %s" % (a.shape,))
    return a


def wrap_angle(angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Wrap to [-pi, pi)."""
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] in meters."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle (%g, %g, %g, %g)" % (self.x0, self.y0, self.x1, self.y1))

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.y0, self.x1, self.y1], dtype=np.float64)

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return (self.x0 - margin <= x <= self.x1 + margin) and (self.y0 - margin <= y <= self.y1 + margin)

    def contains_points(self, points: ArrayLike, margin: float = 0.0) -> np.ndarray:
        pts = as_points(points)
        return (
            (pts[:, 0] >= self.x0 - margin)
            & (pts[:, 0] <= self.x1 + margin)
            & (pts[:, 1] >= self.y0 - margin)
            & (pts[:, 1] <= self.y1 + margin)
        )

    def within(self, other: "Rect") -> bool:
        return self.x0 >= other.x0 and self.y0 >= other.y0 and self.x1 <= other.x1 and self.y1 <= other.y1

    def inflate(self, margin: float) -> "Rect":
        return Rect(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n uniform points inside the rectangle."""
        u = rng.random((n, 2))
        return np.column_stack((self.x0 + u[:, 0] * self.width, self.y0 + u[:, 1] * self.height))


def rects_array(rects: Iterable[Rect]) -> np.ndarray:
    """Stack rectangles into an (M, 4) array of [x0, y0, x1, y1]."""
    rows = [r.as_array() for r in rects]
    return np.array(rows, dtype=np.float64).reshape(len(rows), 4)


def points_in_rects(points: ArrayLike, rects: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """(N,) bool: point lies in (the margin-inflated) interior of any rectangle."""
    pts = as_points(points)
    if len(rects) == 0 or len(pts) == 0:
        return np.zeros(len(pts), dtype=bool)
    x = pts[:, 0:1]
    y = pts[:, 1:2]
    inside = (
        (x > rects[None, :, 0] - margin)
        & (x < rects[None, :, 2] + margin)
        & (y > rects[None, :, 1] - margin)
        & (y < rects[None, :, 3] + margin)
    )
    return inside.any(axis=1)


def segments_hit_rects(start: ArrayLike, ends: ArrayLike, rects: np.ndarray) -> np.ndarray:
    """
    (N,) bool: the segment from ``start`` to each of ``ends`` passes through the interior
    of any rectangle (slab test). Grazing contact along an edge does not count.
    """
    p0 = as_point(start)
    p1 = as_points(ends)
    if len(rects) == 0 or len(p1) == 0:
        return np.zeros(len(p1), dtype=bool)
    d = p1 - p0  # (N, 2)
    t_lo = np.zeros((len(p1), len(rects)))
    t_hi = np.ones((len(p1), len(rects)))
    for axis, (lo_col, hi_col) in enumerate(((0, 2), (1, 3))):
        lo = rects[None, :, lo_col] - p0[axis]
        hi = rects[None, :, hi_col] - p0[axis]
        da = d[:, axis:axis + 1]
        parallel = np.abs(da) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(parallel, -np.inf, lo / da)
            t2 = np.where(parallel, np.inf, hi / da)
        inside_slab = (lo < 0.0) & (hi > 0.0)
        t_min = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
        t_max = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
        t_lo = np.maximum(t_lo, t_min)
        t_hi = np.minimum(t_hi, t_max)
    return (t_hi - t_lo > 1e-9).any(axis=1)


def segment_clear(a: ArrayLike, b: ArrayLike, rects: np.ndarray) -> bool:
    return not bool(segments_hit_rects(a, np.asarray([b], dtype=np.float64), rects)[0])


def polyline_length(points: Sequence[ArrayLike]) -> float:
    pts = as_points(np.asarray(points, dtype=np.float64))
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def walk_polyline(points: ArrayLike, step: float) -> np.ndarray:
    """
    Positions reached by walking along a polyline in increments of ``step``; the last
    position is the polyline's end. Returns (ceil(length / step), 2); empty for zero length.
    """
    pts = as_points(points)
    if step <= 0.0:
        raise ValueError("step must be positive, got %r" % step)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1) if len(pts) > 1 else np.zeros(0)
    total = float(seg.sum())
    if total <= 1e-12:
        return np.zeros((0, 2))
    n = int(math.ceil(total / step - 1e-9))
    targets = np.minimum(np.arange(1, n + 1) * step, total)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    out = np.empty((n, 2))
    for k, s in enumerate(targets):
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        while i > 0 and seg[i] <= 1e-12:
            i -= 1
        frac = 0.0 if seg[i] <= 1e-12 else (s - cum[i]) / seg[i]
        out[k] = pts[i] + min(max(frac, 0.0), 1.0) * (pts[i + 1] - pts[i])
    out[-1] = pts[-1]
    return out
