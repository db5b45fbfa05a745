"""Windows, point patterns and the counting/distance primitives shared by every stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "Window",
    "PointPattern",
    "LabeledPattern",
    "FREE",
    "FIXED",
    "count_in",
    "pairwise_distances",
    "has_duplicates",
]

FREE = "free"
FIXED = "fixed"


@dataclass(frozen=True)
class Window:
    """Closed rectangle [a, b] x [c, d]."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"window bounds must be finite, got {vals}")
        if not (self.a < self.b and self.c < self.d):
            raise ValueError(f"window needs a < b and c < d, got {vals}")
        for name, v in zip("abcd", vals):
            object.__setattr__(self, name, float(v))

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def height(self) -> float:
        return self.d - self.c

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, xy) -> np.ndarray:
        """Boundary-inclusive membership for an (n, 2) array."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return (
            (xy[:, 0] >= self.a)
            & (xy[:, 0] <= self.b)
            & (xy[:, 1] >= self.c)
            & (xy[:, 1] <= self.d)
        )

    def contains_window(self, other: "Window") -> bool:
        return (
            self.a <= other.a
            and self.b >= other.b
            and self.c <= other.c
            and self.d >= other.d
        )

    def inflate(self, margin: float) -> "Window":
        return Window(self.a - margin, self.b + margin, self.c - margin, self.d + margin)

    def dilate(self, s: float) -> "Window":
        return Window(self.a * s, self.b * s, self.c * s, self.d * s)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class PointPattern:
    """A finite set of planar points observed in a rectangular window.

    ``points`` is stored as a read-only ``(n, 2)`` float array; row order is
    significant (sweep order in the deformation follows it).
    """

    window: Window
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        outside = ~self.window.contains(pts)
        if outside.any():
            i = int(np.flatnonzero(outside)[0])
            raise ValueError(f"point {i} at {tuple(pts[i])} lies outside the window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def subset(self, mask) -> "PointPattern":
        return PointPattern(self.window, self.points[np.asarray(mask)])

    def translate(self, dx: float, dy: float) -> "PointPattern":
        w = self.window
        return PointPattern(
            Window(w.a + dx, w.b + dx, w.c + dy, w.d + dy),
            self.points + np.array([dx, dy]),
        )

    def dilate(self, s: float) -> "PointPattern":
        return PointPattern(self.window.dilate(s), self.points * s)


@dataclass(frozen=True)
class LabeledPattern:
    """A pattern whose points are flagged free (movable) or fixed (anchors)."""

    pattern: PointPattern
    fixed: np.ndarray

    def __post_init__(self):
        fixed = np.array(self.fixed, dtype=bool, copy=True).reshape(-1)
        if fixed.shape[0] != len(self.pattern):
            raise ValueError(
                f"{fixed.shape[0]} labels for {len(self.pattern)} points"
            )
        fixed.setflags(write=False)
        object.__setattr__(self, "fixed", fixed)

    @classmethod
    def from_labels(cls, pattern: PointPattern, labels) -> "LabeledPattern":
        labels = list(labels)
        bad = [lab for lab in labels if lab not in (FREE, FIXED)]
        if bad:
            raise ValueError(f"labels must be '{FREE}' or '{FIXED}', got {bad[0]!r}")
        return cls(pattern, np.array([lab == FIXED for lab in labels], dtype=bool))

    @property
    def labels(self) -> list[str]:
        return [FIXED if f else FREE for f in self.fixed]

    def __len__(self):
        return len(self.pattern)


def count_in(pattern: PointPattern, region: Window) -> int:
    """Number of points in the closed rectangle ``region``."""
    if len(pattern) == 0:
        return 0
    return int(region.contains(pattern.points).sum())


def pairwise_distances(pattern: PointPattern) -> np.ndarray:
    """Symmetric (n, n) matrix of Euclidean distances with a zero diagonal."""
    pts = pattern.points
    if len(pts) == 0:
        raise ValueError("pairwise_distances needs at least one point")
    return cdist(pts, pts)


def has_duplicates(pattern: PointPattern) -> bool:
    """True if two points share exactly the same coordinates."""
    if len(pattern) < 2:
        return False
    return len(np.unique(pattern.points, axis=0)) < len(pattern)
