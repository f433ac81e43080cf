"""Oriented box fitting for foreground clusters via yaw-search rectangle fitting.

The yaw is found by scanning [0, 90) degrees and scoring, at each candidate
angle, how tightly the projected points hug the fitted rectangle's edges:
each point contributes the inverse of its distance to the nearest edge
(distance taken per axis to the nearer of the two edges, then minimized
across axes, clamped below to keep the score finite). Partial L-shaped
surface views score highest at the true heading.
"""

from __future__ import annotations

import numpy as np

from .geometry import OrientedBox3D

__all__ = ["DegenerateClusterError", "fit_box"]

# Clamp for edge distances before inversion; also the footprint-degeneracy bound.
_MIN_EDGE_DISTANCE = 1e-3


class DegenerateClusterError(ValueError):
    """The cluster cannot support a valid oriented box."""


def fit_box(points: np.ndarray, yaw_step_deg: float = 1.0) -> OrientedBox3D:
    """Fit an oriented box to an (N, 3) cluster.

    Yaw is searched over [0, 90) degrees at `yaw_step_deg` resolution (the
    documented accuracy bound); the box footprint is the min/max rectangle in
    the best frame and the height the raw z-extent. Raises
    DegenerateClusterError for clusters of fewer than 3 points or with an
    (effectively) dimensionless footprint or zero vertical extent.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
    if pts.shape[0] < 3:
        raise DegenerateClusterError(f"need at least 3 points, got {pts.shape[0]}")

    xy = pts[:, :2]
    yaws = np.deg2rad(np.arange(0.0, 90.0, yaw_step_deg))
    best_score = -np.inf
    best_yaw = 0.0
    for yaw in yaws:
        c, s = np.cos(yaw), np.sin(yaw)
        x = xy[:, 0] * c + xy[:, 1] * s  # rotation by -yaw
        y = -xy[:, 0] * s + xy[:, 1] * c
        dx = np.minimum(x - x.min(), x.max() - x)
        dy = np.minimum(y - y.min(), y.max() - y)
        d = np.maximum(np.minimum(dx, dy), _MIN_EDGE_DISTANCE)
        score = float((1.0 / d).sum())
        if score > best_score:
            best_score = score
            best_yaw = float(yaw)

    c, s = np.cos(best_yaw), np.sin(best_yaw)
    x = xy[:, 0] * c + xy[:, 1] * s
    y = -xy[:, 0] * s + xy[:, 1] * c
    ext_x = float(x.max() - x.min())
    ext_y = float(y.max() - y.min())
    ext_z = float(pts[:, 2].max() - pts[:, 2].min())
    if ext_x < _MIN_EDGE_DISTANCE and ext_y < _MIN_EDGE_DISTANCE:
        raise DegenerateClusterError(
            f"footprint degenerate on both axes ({ext_x:.2e} x {ext_y:.2e} m)"
        )
    if min(ext_x, ext_y) <= 0.0 or ext_z <= 0.0:
        raise DegenerateClusterError("cluster is collinear or coplanar, extent is zero")

    cx_f = (x.max() + x.min()) / 2.0
    cy_f = (y.max() + y.min()) / 2.0
    # rotate the footprint center back to world coordinates
    cx = cx_f * c - cy_f * s
    cy = cx_f * s + cy_f * c
    cz = float(pts[:, 2].max() + pts[:, 2].min()) / 2.0
    # orient the longer footprint side along the box length axis (the
    # quarter-turn-swapped box is geometrically identical)
    if ext_y > ext_x:
        ext_x, ext_y = ext_y, ext_x
        best_yaw += np.pi / 2.0
    return OrientedBox3D((cx, cy, cz), (ext_x, ext_y, ext_z), best_yaw)
