"""Transfer of 2D instance masks onto LiDAR points: projection and seed sets.

A LiDAR point becomes a *seed point* of an instance when its image projection
lands on a set pixel of that instance's shrunk mask. Seeds carry the mask's
class label into 3D and anchor the later clustering stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud
from .masks import InstanceMask, shrink_mask

__all__ = ["CalibrationSet", "SeedPointSet", "project_points", "extract_seed_points"]


@dataclass(frozen=True)
class CalibrationSet:
    """Camera projection P (3x4), rectification R (3x3), LiDAR-to-camera T (3x4),
    and the image size (H, W) the pixel-validity test is measured against."""

    P: np.ndarray
    R: np.ndarray
    T: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        R = np.asarray(self.R, dtype=np.float64)
        T = np.asarray(self.T, dtype=np.float64)
        for name, mat, shape in (("P", P, (3, 4)), ("R", R, (3, 3)), ("T", T, (3, 4))):
            if mat.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {mat.shape}")
            if not np.isfinite(mat).all():
                raise ValueError(f"{name} contains non-finite entries")
        h, w = (int(s) for s in self.image_size)
        if h <= 0 or w <= 0:
            raise ValueError(f"image size must be positive, got {self.image_size}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "image_size", (h, w))

    def lidar_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 3) LiDAR points into rectified camera coordinates (N, 3)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        homo = np.hstack([pts, np.ones((pts.shape[0], 1))])
        return (self.R @ (self.T @ homo.T)).T

    def camera_to_lidar(self, points: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`lidar_to_camera`."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        t4 = np.vstack([self.T, [0.0, 0.0, 0.0, 1.0]])
        r4 = np.eye(4)
        r4[:3, :3] = self.R
        inv = np.linalg.inv(r4 @ t4)
        homo = np.hstack([pts, np.ones((pts.shape[0], 1))])
        return (inv @ homo.T).T[:, :3]


@dataclass(frozen=True)
class SeedPointSet:
    """Seed points of one instance: ascending indices into the frame's cloud."""

    instance_id: int
    class_name: str
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise ValueError(f"instance {self.instance_id}: seed set may not be empty")
        idx = np.sort(idx)
        if idx[0] < 0:
            raise ValueError("seed indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.size


def project_points(cloud: PointCloud, calib: CalibrationSet):
    """Project every point into the image plane.

    Returns (uv, valid): uv is (N, 2) float pixel coordinates (NaN where the
    point is behind the camera) and valid is (N,) bool, true iff the camera
    depth is positive and the pixel lies in [0, W) x [0, H). The image
    boundary itself (u = W or v = H) is excluded so floor(u), floor(v) always
    index the grid safely.
    """
    n = len(cloud)
    uv = np.full((n, 2), np.nan)
    valid = np.zeros(n, dtype=bool)
    if n == 0:
        return uv, valid

    cam = calib.lidar_to_camera(cloud.xyz)
    in_front = cam[:, 2] > 0.0
    if in_front.any():
        homo = np.hstack([cam[in_front], np.ones((int(in_front.sum()), 1))])
        pix = (calib.P @ homo.T).T
        uv[in_front, 0] = pix[:, 0] / pix[:, 2]
        uv[in_front, 1] = pix[:, 1] / pix[:, 2]
    h, w = calib.image_size
    valid = in_front & (uv[:, 0] >= 0) & (uv[:, 0] < w) & (uv[:, 1] >= 0) & (uv[:, 1] < h)
    return uv, valid


def extract_seed_points(
    cloud: PointCloud,
    masks: list[InstanceMask],
    calib: CalibrationSet,
    shrink_factor: float,
) -> list[SeedPointSet]:
    """Assign points to instances through shrunk masks.

    A point joins instance k iff its valid projection lands on a set pixel of
    the shrunk mask of k. A point covered by several shrunk masks goes to the
    instance whose retained-rectangle center is nearest in pixel space (tie:
    lower instance id). Instances that end up with zero seeds (including
    masks whose shrunk grid is empty) are omitted. Output order follows
    ascending instance id; indices within a set are ascending.
    """
    for m in masks:
        if m.image_size != calib.image_size:
            raise ValueError(
                f"instance {m.instance_id}: mask size {m.image_size} does not match "
                f"calibration image size {calib.image_size}"
            )
    ids = [m.instance_id for m in masks]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate instance ids in mask list: {sorted(ids)}")
    if not masks:
        return []

    masks = sorted(masks, key=lambda m: m.instance_id)
    shrunk = [shrink_mask(m, shrink_factor) for m in masks]
    shrunk = [s for s in shrunk if not s.is_empty]
    if not shrunk:
        return []

    uv, valid = project_points(cloud, calib)
    if not valid.any():
        return []
    vidx = np.nonzero(valid)[0]
    cols = np.floor(uv[vidx, 0]).astype(np.int64)
    rows = np.floor(uv[vidx, 1]).astype(np.int64)

    # hits[i, j] = projection of point vidx[i] lands on shrunk mask j
    hits = np.stack([s.grid[rows, cols] for s in shrunk], axis=1)
    n_hits = hits.sum(axis=1)

    assigned = np.full(vidx.size, -1, dtype=np.int64)  # index into `shrunk`
    single = n_hits == 1
    assigned[single] = np.argmax(hits[single], axis=1)

    multi = np.nonzero(n_hits > 1)[0]
    if multi.size:
        centers = np.array([s.center_uv for s in shrunk])
        d2 = ((uv[vidx[multi], None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        d2[~hits[multi]] = np.inf
        # argmin breaks exact ties toward the lower index = lower instance id
        assigned[multi] = np.argmin(d2, axis=1)

    out = []
    for j, s in enumerate(shrunk):
        members = vidx[assigned == j]
        if members.size:
            out.append(SeedPointSet(s.source_id, s.class_name, members))
    return out
