"""Box proposal generation: one DBSCAN pass per scheduled radius, per instance.

For every seed instance the pipeline restricts the cloud to a ball around the
seed centroid, clusters it at each radius of the schedule, fits an oriented
box to the cluster holding the most seeds, and keeps the box only when it
still contains the required fraction of the instance's seeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .box_fitting import DegenerateClusterError, fit_box
from .clustering import dbscan, neighborhood, radius_schedule, select_cluster
from .geometry import OrientedBox3D, PointCloud, points_in_box
from .seeds import SeedPointSet

__all__ = ["ProposalParams", "Proposal", "schedule_indices", "generate_proposals"]

logger = logging.getLogger(__name__)

# Proposals whose box parameters all agree within this are exact duplicates.
_DUPLICATE_TOL = 1e-6
# Slack for the box-contains-cluster invariant and seed containment tests.
CONTAINMENT_SLACK = 1e-6


@dataclass(frozen=True)
class ProposalParams:
    """Knobs for proposal generation; defaults suit street-scale LiDAR scenes."""

    r_init: float = 1.0
    delta: float = 0.1
    min_pts: int = 3
    neighborhood_radius: float = 8.0
    max_radii: int = 16
    min_seed_containment: float = 0.5

    def __post_init__(self):
        if self.r_init <= 0:
            raise ValueError(f"r_init must be positive, got {self.r_init}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")
        if self.neighborhood_radius <= 0:
            raise ValueError(f"neighborhood_radius must be positive, got {self.neighborhood_radius}")
        if self.max_radii < 1:
            raise ValueError(f"max_radii must be >= 1, got {self.max_radii}")
        if not 0.0 < self.min_seed_containment <= 1.0:
            raise ValueError(
                f"min_seed_containment must be in (0, 1], got {self.min_seed_containment}"
            )


@dataclass(frozen=True)
class Proposal:
    """An oriented box candidate plus the cluster it was fitted to."""

    box: OrientedBox3D
    instance_id: int
    class_name: str
    radius: float
    cluster_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.cluster_indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise ValueError("proposal cluster may not be empty")
        object.__setattr__(self, "cluster_indices", np.sort(idx))


def schedule_indices(n_seeds: int, max_radii: int) -> np.ndarray:
    """The 1-based t values to evaluate: all of 1..n, or max_radii uniformly
    spaced over 1..n (endpoints included) when n exceeds the cap."""
    if n_seeds <= max_radii:
        return np.arange(1, n_seeds + 1, dtype=np.int64)
    ts = np.round(np.linspace(1, n_seeds, max_radii)).astype(np.int64)
    return np.unique(ts)


def _order_seeds_by_centroid(xyz: np.ndarray, seed_indices: np.ndarray) -> np.ndarray:
    """Seeds sorted by distance to their centroid so small radii probe the
    instance core and large radii its extremities; index breaks ties."""
    centroid = xyz[seed_indices].mean(axis=0)
    dist = np.linalg.norm(xyz[seed_indices] - centroid, axis=1)
    return seed_indices[np.lexsort((seed_indices, dist))]


def _is_duplicate(box: OrientedBox3D, kept: list[Proposal]) -> bool:
    params = np.array([*box.center, *box.size, box.yaw])
    for other in kept:
        existing = np.array([*other.box.center, *other.box.size, other.box.yaw])
        if np.all(np.abs(params - existing) <= _DUPLICATE_TOL):
            return True
    return False


def generate_proposals(
    cloud: PointCloud,
    seed_sets: list[SeedPointSet],
    params: ProposalParams,
) -> list[Proposal]:
    """Run the radius schedule for every instance and collect retained boxes.

    Per instance: order seeds by centroid distance, evaluate DBSCAN at each
    scheduled radius, fit a box to the seed-majority cluster, and retain the
    proposal iff the box contains at least `min_seed_containment` of the
    instance's seeds. Exact-duplicate boxes are emitted once. Degenerate
    clusters are logged and skipped.
    """
    xyz = cloud.xyz
    out: list[Proposal] = []
    for seeds in seed_sets:
        subset = neighborhood(xyz, seeds.indices, params.neighborhood_radius)
        sub_xyz = xyz[subset]
        ordered = _order_seeds_by_centroid(xyz, seeds.indices)
        # positions of the (ordered) seeds inside the neighborhood subset
        seed_pos = np.searchsorted(subset, ordered)
        n_seeds = len(seeds)

        kept: list[Proposal] = []
        for t in schedule_indices(n_seeds, params.max_radii):
            eps = radius_schedule(int(t), n_seeds, params.r_init, params.delta)
            labels = dbscan(sub_xyz, eps, params.min_pts)
            members = select_cluster(labels, seed_pos)
            if members is None:
                continue
            try:
                box = fit_box(sub_xyz[members])
            except DegenerateClusterError as err:
                logger.debug(
                    "instance %d, radius %.3f: skipping degenerate cluster (%s)",
                    seeds.instance_id, eps, err,
                )
                continue
            inside = points_in_box(xyz[seeds.indices], box, slack=CONTAINMENT_SLACK)
            if inside.sum() < params.min_seed_containment * n_seeds:
                continue
            if _is_duplicate(box, kept):
                continue
            kept.append(
                Proposal(box, seeds.instance_id, seeds.class_name, eps, subset[members])
            )
        out.extend(kept)
    return out
