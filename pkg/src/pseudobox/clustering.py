"""Density clustering around seed points with a per-seed radius schedule.

The clustering radius is not a single constant: for an instance with N seed
points the t-th seed (seeds ordered by distance from their centroid) gets

    r(t) = r_init * t / N + delta,        t = 1 .. N,

so radii sweep (delta, r_init + delta] and probe the instance at multiple
scales. Each radius drives one DBSCAN pass over the seed neighborhood.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import cKDTree

__all__ = ["radius_schedule", "dbscan", "neighborhood", "select_cluster"]

NOISE = -1


def radius_schedule(t: int, n_seeds: int, r_init: float, delta: float) -> float:
    """Clustering radius for the t-th of n_seeds seed points (1-based)."""
    if n_seeds < 1:
        raise ValueError(f"seed count must be >= 1, got {n_seeds}")
    if not 1 <= t <= n_seeds:
        raise ValueError(f"t must be in [1, {n_seeds}], got {t}")
    return r_init * t / n_seeds + delta


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Label (N, 3) points with DBSCAN cluster ids; noise points get -1.

    A point is a core point iff it has >= min_pts neighbors within eps
    (itself included, boundary inclusive). Clusters are the density-connected
    components; a border point joins the first core cluster that reaches it
    when expansion proceeds in ascending point-index order.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels

    tree = cKDTree(pts)
    neighbors = [np.sort(np.asarray(nb, dtype=np.int64)) for nb in tree.query_ball_point(pts, eps)]
    core = np.array([nb.size >= min_pts for nb in neighbors])

    cluster = 0
    for start in range(n):
        if labels[start] != NOISE or not core[start]:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            j = queue.popleft()
            for k in neighbors[j]:
                if labels[k] == NOISE:
                    labels[k] = cluster
                    if core[k]:
                        queue.append(k)
        cluster += 1
    return labels


def neighborhood(cloud_xyz: np.ndarray, seed_indices: np.ndarray, radius: float) -> np.ndarray:
    """Indices of all points within `radius` of the seed centroid, plus the
    seeds themselves, ascending."""
    seed_indices = np.asarray(seed_indices, dtype=np.int64)
    if seed_indices.size == 0:
        raise ValueError("seed index set may not be empty")
    xyz = np.asarray(cloud_xyz, dtype=np.float64)
    centroid = xyz[seed_indices].mean(axis=0)
    dist = np.linalg.norm(xyz - centroid, axis=1)
    near = np.nonzero(dist <= radius)[0]
    return np.union1d(near, seed_indices)


def select_cluster(labels: np.ndarray, seed_positions: np.ndarray) -> np.ndarray | None:
    """Pick the cluster holding the most seeds.

    `labels` come from :func:`dbscan` over a neighborhood subset;
    `seed_positions` are the seeds' positions within that subset. Ties go to
    the larger cluster, then the lower label. Returns the member positions of
    the winning cluster (ascending), or None when every seed is noise.
    """
    labels = np.asarray(labels, dtype=np.int64)
    seed_labels = labels[np.asarray(seed_positions, dtype=np.int64)]
    seed_labels = seed_labels[seed_labels != NOISE]
    if seed_labels.size == 0:
        return None
    candidates = np.unique(seed_labels)
    seed_counts = np.array([(seed_labels == c).sum() for c in candidates])
    sizes = np.array([(labels == c).sum() for c in candidates])
    order = np.lexsort((candidates, -sizes, -seed_counts))
    best = candidates[order[0]]
    return np.nonzero(labels == best)[0]
