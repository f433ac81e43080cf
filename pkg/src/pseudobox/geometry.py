"""Shared geometry primitives: point clouds, oriented boxes, frame transforms.

Conventions (used everywhere in this package):

* Right-handed LiDAR frame, x forward, y left, z up, all lengths in meters.
* Box yaw rotates counterclockwise about +z, measured from +x, and is stored
  canonically in [-pi/2, pi/2) (a rectangle is invariant under 180-degree
  turns, so this loses nothing).
* Box membership is boundary-inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "OrientedBox3D",
    "MetaShape",
    "canonical_yaw",
    "box_corners",
    "to_box_frame",
    "from_box_frame",
    "points_in_box",
    "point_in_box",
]

# Corner order of box_corners(), as (sign_x, sign_y, sign_z) in the box frame.
# Bottom face first, counterclockwise seen from above, then the top face in
# the same horizontal order.
_CORNER_SIGNS = np.array(
    [
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, -1],
        [+1, -1, -1],
        [+1, +1, +1],
        [-1, +1, +1],
        [-1, -1, +1],
        [+1, -1, +1],
    ],
    dtype=np.float64,
)


def canonical_yaw(yaw: float) -> float:
    """Wrap a yaw angle into [-pi/2, pi/2) using the rectangle's pi symmetry."""
    wrapped = math.fmod(yaw, math.pi)
    if wrapped < -math.pi / 2:
        wrapped += math.pi
    elif wrapped >= math.pi / 2:
        wrapped -= math.pi
    return wrapped


@dataclass(frozen=True)
class PointCloud:
    """A frame of LiDAR returns: (N, 3) xyz in meters plus optional intensity."""

    xyz: np.ndarray
    intensity: np.ndarray | None = None

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ValueError(f"xyz must have shape (N, 3), got {xyz.shape}")
        if not np.isfinite(xyz).all():
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "xyz", xyz)
        if self.intensity is not None:
            inten = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
            if inten.shape[0] != xyz.shape[0]:
                raise ValueError("intensity length must match point count")
            object.__setattr__(self, "intensity", inten)

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True)
class OrientedBox3D:
    """An upright oriented box: center (x, y, z), size (l, w, h), yaw about +z."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        size = tuple(float(s) for s in self.size)
        if len(center) != 3 or len(size) != 3:
            raise ValueError("center and size must be 3-vectors")
        if not all(math.isfinite(v) for v in center + size + (self.yaw,)):
            raise ValueError("box parameters must be finite")
        if min(size) <= 0.0:
            raise ValueError(f"box sizes must be positive, got {size}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "yaw", canonical_yaw(float(self.yaw)))

    @property
    def length(self) -> float:
        return self.size[0]

    @property
    def width(self) -> float:
        return self.size[1]

    @property
    def height(self) -> float:
        return self.size[2]

    @property
    def bev_area(self) -> float:
        return self.size[0] * self.size[1]

    @property
    def volume(self) -> float:
        return self.size[0] * self.size[1] * self.size[2]

    def scaled(self, factor: float) -> "OrientedBox3D":
        """Same center and yaw, all extents multiplied by `factor`."""
        return OrientedBox3D(self.center, tuple(s * factor for s in self.size), self.yaw)


@dataclass(frozen=True)
class MetaShape:
    """Per-class shape template: normalized (l, w, h) proportions summing to 1."""

    class_name: str
    proportions: tuple[float, float, float]
    raw_extents: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        props = tuple(float(p) for p in self.proportions)
        if min(props) <= 0.0:
            raise ValueError("shape proportions must be positive")
        if abs(sum(props) - 1.0) > 1e-9:
            raise ValueError(f"shape proportions must sum to 1, got {sum(props)}")
        object.__setattr__(self, "proportions", props)

    @classmethod
    def from_extents(cls, class_name: str, l: float, w: float, h: float) -> "MetaShape":
        total = l + w + h
        if total <= 0:
            raise ValueError("extents must be positive")
        return cls(class_name, (l / total, w / total, h / total), (l, w, h))


def _rotation2d(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]], dtype=np.float64)


def box_corners(box: OrientedBox3D) -> np.ndarray:
    """The 8 corner coordinates of `box`, shape (8, 3), in _CORNER_SIGNS order."""
    half = np.asarray(box.size, dtype=np.float64) / 2.0
    local = _CORNER_SIGNS * half
    rot = _rotation2d(box.yaw)
    out = np.empty_like(local)
    out[:, :2] = local[:, :2] @ rot.T
    out[:, 2] = local[:, 2]
    return out + np.asarray(box.center, dtype=np.float64)


def to_box_frame(points: np.ndarray, box: OrientedBox3D) -> np.ndarray:
    """Map world points into the box frame (subtract center, rotate by -yaw).

    Accepts a single (3,) point or an (N, 3) array; returns the same shape.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts) - np.asarray(box.center, dtype=np.float64)
    rot = _rotation2d(-box.yaw)
    out = np.empty_like(pts)
    out[:, :2] = pts[:, :2] @ rot.T
    out[:, 2] = pts[:, 2]
    return out[0] if single else out


def from_box_frame(points: np.ndarray, box: OrientedBox3D) -> np.ndarray:
    """Inverse of :func:`to_box_frame`."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    rot = _rotation2d(box.yaw)
    out = np.empty_like(pts)
    out[:, :2] = pts[:, :2] @ rot.T
    out[:, 2] = pts[:, 2]
    out = out + np.asarray(box.center, dtype=np.float64)
    return out[0] if single else out


def points_in_box(points: np.ndarray, box: OrientedBox3D, slack: float = 0.0) -> np.ndarray:
    """Boundary-inclusive membership test for an (N, 3) array; returns (N,) bool.

    `slack` loosens every face by the given margin (meters), for tests that
    must tolerate round-trip floating-point error.
    """
    local = np.atleast_2d(to_box_frame(points, box))
    half = np.asarray(box.size, dtype=np.float64) / 2.0 + slack
    return (np.abs(local) <= half).all(axis=1)


def point_in_box(point: np.ndarray, box: OrientedBox3D, slack: float = 0.0) -> bool:
    """Scalar convenience wrapper around :func:`points_in_box`."""
    return bool(points_in_box(np.asarray(point, dtype=np.float64).reshape(1, 3), box, slack)[0])
