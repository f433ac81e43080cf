"""Pseudo-label quality assessment against ground-truth boxes.

Per frame, labels and ground truth are matched greedily by descending 3D
IoU, one-to-one. Recall is reported at a set of IoU thresholds, and every
pseudo-label lands in one of three quality buckets by its match IoU:
<= 0.5, strictly between 0.5 and 0.7, and >= 0.7 (unmatched labels count as
IoU 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import OrientedBox3D
from .scoring import bev_iou

__all__ = ["iou3d", "MatchedPair", "QualityReport", "match_and_recall"]

DEFAULT_THRESHOLDS = (0.3, 0.5, 0.7)
BUCKET_EDGES = (0.5, 0.7)
BUCKET_NAMES = ("iou<=0.5", "0.5<iou<0.7", "iou>=0.7")


def iou3d(a: OrientedBox3D, b: OrientedBox3D) -> float:
    """Volume IoU: footprint overlap area times vertical overlap length."""
    za0, za1 = a.center[2] - a.height / 2.0, a.center[2] + a.height / 2.0
    zb0, zb1 = b.center[2] - b.height / 2.0, b.center[2] + b.height / 2.0
    dz = min(za1, zb1) - max(za0, zb0)
    if dz <= 0.0:
        return 0.0
    biou = bev_iou(a, b)
    if biou <= 0.0:
        return 0.0
    inter_area = biou * (a.bev_area + b.bev_area) / (1.0 + biou)
    inter = inter_area * dz
    union = a.volume + b.volume - inter
    return min(inter / union, 1.0)


@dataclass(frozen=True)
class MatchedPair:
    frame_id: str
    gt_index: int
    label_index: int
    iou: float


@dataclass
class QualityReport:
    """Aggregated recall and bucket statistics over a set of frames."""

    thresholds: tuple[float, ...]
    recall: dict[float, float]
    bucket_counts: tuple[int, int, int]
    total_labels: int
    total_gt: int
    matches: list[MatchedPair] = field(default_factory=list)

    @property
    def bucket_percentages(self) -> tuple[float, float, float]:
        if self.total_labels == 0:
            return (0.0, 0.0, 0.0)
        return tuple(100.0 * c / self.total_labels for c in self.bucket_counts)  # type: ignore[return-value]

    def to_dict(self) -> dict:
        return {
            "total_labels": self.total_labels,
            "total_gt": self.total_gt,
            "recall": {f"iou_{t:g}": self.recall[t] for t in self.thresholds},
            "buckets": {
                name: {"count": c, "percent": round(p, 2)}
                for name, c, p in zip(BUCKET_NAMES, self.bucket_counts, self.bucket_percentages)
            },
        }

    def format_table(self) -> str:
        lines = [
            f"labels: {self.total_labels}    ground truth: {self.total_gt}",
            "",
            "recall " + "  ".join(f"@IoU {t:g}" for t in self.thresholds),
            "       " + "  ".join(f"{self.recall[t]:8.4f}" for t in self.thresholds),
            "",
            f"{'bucket':>14} {'count':>8} {'percent':>8}",
        ]
        for name, c, p in zip(BUCKET_NAMES, self.bucket_counts, self.bucket_percentages):
            lines.append(f"{name:>14} {c:>8d} {p:>8.2f}")
        return "\n".join(lines)


def bucket_index(iou: float) -> int:
    """0 for iou <= 0.5, 1 for 0.5 < iou < 0.7, 2 for iou >= 0.7."""
    if iou <= BUCKET_EDGES[0]:
        return 0
    if iou < BUCKET_EDGES[1]:
        return 1
    return 2


def _match_frame(labels, gts):
    """Greedy one-to-one matching by descending IoU; deterministic ties."""
    pairs = []
    for gi, gt in enumerate(gts):
        for li, lab in enumerate(labels):
            iou = iou3d(lab, gt)
            if iou > 0.0:
                pairs.append((iou, gi, li))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    gt_used = set()
    label_used = set()
    matched = []
    for iou, gi, li in pairs:
        if gi in gt_used or li in label_used:
            continue
        gt_used.add(gi)
        label_used.add(li)
        matched.append((gi, li, iou))
    return matched


def match_and_recall(
    labels_by_frame: dict[str, list[OrientedBox3D]],
    gt_by_frame: dict[str, list[OrientedBox3D]],
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
) -> QualityReport:
    """Match labels to ground truth frame by frame and aggregate the report.

    Frames are the union of both inputs; a frame missing from one side
    contributes unmatched entries from the other.
    """
    frames = sorted(set(labels_by_frame) | set(gt_by_frame))
    matched_per_threshold = {t: 0 for t in thresholds}
    buckets = [0, 0, 0]
    total_labels = 0
    total_gt = 0
    matches: list[MatchedPair] = []

    for frame in frames:
        labels = labels_by_frame.get(frame, [])
        gts = gt_by_frame.get(frame, [])
        total_labels += len(labels)
        total_gt += len(gts)
        frame_matches = _match_frame(labels, gts)
        matched_labels = {}
        for gi, li, iou in frame_matches:
            matches.append(MatchedPair(frame, gi, li, iou))
            matched_labels[li] = iou
            for t in thresholds:
                if iou >= t:
                    matched_per_threshold[t] += 1
        for li in range(len(labels)):
            buckets[bucket_index(matched_labels.get(li, 0.0))] += 1

    recall = {
        t: (matched_per_threshold[t] / total_gt if total_gt else 0.0) for t in thresholds
    }
    return QualityReport(
        thresholds=tuple(thresholds),
        recall=recall,
        bucket_counts=(buckets[0], buckets[1], buckets[2]),
        total_labels=total_labels,
        total_gt=total_gt,
        matches=matches,
    )
