"""Proposal quality scoring without ground truth, plus rotated-box NMS.

Two unsupervised priors rank proposals:

* distribution constraint -- inside a tight box, LiDAR hits are surface
  points, so their normalized distances to the lateral boundary concentrate
  near 1; the score is the mean Gaussian log-density of those distances
  under N(mu, sigma).
* shape constraint -- a plausible box has (l, w, h) proportions close to a
  per-class template; the score is exp(-KL) between template and proposal
  proportions.

Both raw scores are min-max normalized per frame and combined as a weighted
sum, which then replaces the usual confidence inside greedy NMS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import MetaShape, OrientedBox3D, PointCloud, box_corners, points_in_box, to_box_frame
from .proposals import Proposal

__all__ = [
    "ScoreParams",
    "ScoredProposal",
    "EmptyForegroundError",
    "boundary_distance",
    "boundary_distances",
    "distribution_score",
    "meta_shape_score",
    "normalize_scores",
    "combined_score",
    "bev_iou",
    "nms",
    "score_proposals",
]


class EmptyForegroundError(ValueError):
    """A proposal box contains no points; it cannot be scored."""


@dataclass(frozen=True)
class ScoreParams:
    """Scoring and NMS knobs; defaults suit street-scale LiDAR scenes."""

    mu: float = 0.8
    sigma: float = 0.2
    lambda1: float = 0.5
    lambda2: float = 0.5
    nms_iou: float = 0.1
    include_vertical: bool = False  # 3-axis boundary-distance variant

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda1 + self.lambda2 <= 0:
            raise ValueError("lambda weights must be non-negative with a positive sum")
        if not 0.0 < self.nms_iou < 1.0:
            raise ValueError(f"nms_iou must be in (0, 1), got {self.nms_iou}")


@dataclass(frozen=True)
class ScoredProposal:
    """A proposal with raw, normalized, and combined quality scores."""

    proposal: Proposal
    dist_score: float
    shape_score: float
    dist_score_norm: float
    shape_score_norm: float
    score: float

    @property
    def box(self) -> OrientedBox3D:
        return self.proposal.box


def boundary_distances(
    points: np.ndarray, box: OrientedBox3D, include_vertical: bool = False
) -> np.ndarray:
    """Normalized boundary distance of interior points, shape (N,).

    d = max(|x'| / (l/2), |y'| / (w/2)) over box-frame coordinates: 0 on the
    vertical center axis, 1 on the lateral boundary. The vertical axis is
    excluded by default because LiDAR z-extents are truncation-dominated.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inside = points_in_box(pts, box, slack=1e-9)
    if not inside.all():
        raise ValueError(f"{(~inside).sum()} point(s) lie outside the box")
    local = np.abs(to_box_frame(pts, box))
    half = np.asarray(box.size, dtype=np.float64) / 2.0
    ratios = local / half
    axes = slice(0, 3) if include_vertical else slice(0, 2)
    return ratios[:, axes].max(axis=1)


def boundary_distance(point: np.ndarray, box: OrientedBox3D, include_vertical: bool = False) -> float:
    """Scalar convenience wrapper around :func:`boundary_distances`."""
    return float(boundary_distances(np.reshape(point, (1, 3)), box, include_vertical)[0])


def distribution_score(
    box: OrientedBox3D,
    cloud: PointCloud,
    mu: float = 0.8,
    sigma: float = 0.2,
    include_vertical: bool = False,
) -> float:
    """Mean Gaussian log-density of boundary distances of the points in `box`."""
    inside = points_in_box(cloud.xyz, box)
    if not inside.any():
        raise EmptyForegroundError("box contains no points")
    d = boundary_distances(cloud.xyz[inside], box, include_vertical)
    log_pdf = -math.log(sigma * math.sqrt(2.0 * math.pi)) - ((d - mu) ** 2) / (2.0 * sigma**2)
    return float(log_pdf.mean())


def meta_shape_score(box: OrientedBox3D, meta: MetaShape) -> float:
    """exp(-KL(template || proposal)) over normalized (l, w, h); 1 iff the
    proposal's proportions match the template, scale-invariant."""
    size = np.asarray(box.size, dtype=np.float64)
    b = size / size.sum()
    m = np.asarray(meta.proportions, dtype=np.float64)
    kl = float((m * np.log(m / b)).sum())
    return math.exp(-kl)


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize one score channel to [0, 1]; a constant channel maps
    to all ones."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        return raw.copy()
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def combined_score(dist_norm: float, shape_norm: float, lambda1: float, lambda2: float) -> float:
    """Weighted sum of the two normalized constraint scores."""
    return lambda1 * dist_norm + lambda2 * shape_norm


def _bev_polygon(box: OrientedBox3D) -> np.ndarray:
    """Footprint rectangle as a counterclockwise (4, 2) polygon."""
    return box_corners(box)[:4, :2]


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of `subject` against convex CCW `clip`."""
    output = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        ax, ay = clip[i - 1]
        bx, by = clip[i]
        if not output:
            break
        polygon = output
        output = []
        m = len(polygon)
        for j in range(m):
            sx, sy = polygon[j - 1]
            ex, ey = polygon[j]
            s_in = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax) >= 0.0
            e_in = (bx - ax) * (ey - ay) - (by - ay) * (ex - ax) >= 0.0
            if e_in:
                if not s_in:
                    output.append(_intersect(ax, ay, bx, by, sx, sy, ex, ey))
                output.append((ex, ey))
            elif s_in:
                output.append(_intersect(ax, ay, bx, by, sx, sy, ex, ey))
    return np.asarray(output, dtype=np.float64).reshape(-1, 2)


def _intersect(ax, ay, bx, by, sx, sy, ex, ey):
    dcx, dcy = ax - bx, ay - by
    dpx, dpy = sx - ex, sy - ey
    den = dcx * dpy - dcy * dpx
    if den == 0.0:
        # degenerate or on-line-parallel subject edge; either endpoint works
        return (ex, ey)
    n1 = ax * by - ay * bx
    n2 = sx * ey - sy * ex
    return ((n1 * dpx - n2 * dcx) / den, (n1 * dpy - n2 * dcy) / den)


def _polygon_area(poly: np.ndarray) -> float:
    if poly.shape[0] < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def bev_iou(a: OrientedBox3D, b: OrientedBox3D) -> float:
    """Area IoU of the two rotated footprint rectangles."""
    pa, pb = _bev_polygon(a), _bev_polygon(b)
    inter = _polygon_area(_clip_polygon(pa, pb))
    if inter <= 0.0:
        return 0.0
    union = a.bev_area + b.bev_area - inter
    return min(inter / union, 1.0)


def nms(scored: list[ScoredProposal], iou_threshold: float) -> list[ScoredProposal]:
    """Greedy NMS on the combined score.

    Order: score descending, ties to the larger footprint area, then the
    lower instance id, then input order. A proposal is dropped when its
    footprint IoU with any kept box exceeds the threshold.
    """
    order = sorted(
        range(len(scored)),
        key=lambda i: (
            -scored[i].score,
            -scored[i].box.bev_area,
            scored[i].proposal.instance_id,
            i,
        ),
    )
    kept: list[ScoredProposal] = []
    for i in order:
        if all(bev_iou(scored[i].box, k.box) <= iou_threshold for k in kept):
            kept.append(scored[i])
    return kept


def score_proposals(
    proposals: list[Proposal],
    cloud: PointCloud,
    metas: dict[str, MetaShape],
    params: ScoreParams,
) -> list[ScoredProposal]:
    """Score a frame's proposals: raw constraints, per-frame normalization,
    weighted combination. Proposals whose box holds no points are discarded
    here, before NMS. Raises KeyError when a class has no shape template."""
    missing = {p.class_name for p in proposals} - set(metas)
    if missing:
        raise KeyError(f"no shape template configured for class(es) {sorted(missing)}")

    survivors: list[Proposal] = []
    dist_raw: list[float] = []
    shape_raw: list[float] = []
    for p in proposals:
        try:
            dc = distribution_score(p.box, cloud, params.mu, params.sigma, params.include_vertical)
        except EmptyForegroundError:
            continue
        survivors.append(p)
        dist_raw.append(dc)
        shape_raw.append(meta_shape_score(p.box, metas[p.class_name]))

    dist_norm = normalize_scores(np.array(dist_raw))
    shape_norm = normalize_scores(np.array(shape_raw))
    return [
        ScoredProposal(
            proposal=p,
            dist_score=dist_raw[i],
            shape_score=shape_raw[i],
            dist_score_norm=float(dist_norm[i]),
            shape_score_norm=float(shape_norm[i]),
            score=combined_score(float(dist_norm[i]), float(shape_norm[i]),
                                 params.lambda1, params.lambda2),
        )
        for i, p in enumerate(survivors)
    ]
