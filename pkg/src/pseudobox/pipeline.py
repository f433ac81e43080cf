"""The per-frame pipeline: masks -> seeds -> proposals -> scores -> NMS."""

from __future__ import annotations

from dataclasses import dataclass

from .config import PipelineConfig
from .kitti_io import FrameBundle
from .proposals import Proposal, generate_proposals
from .scoring import ScoredProposal, nms, score_proposals
from .seeds import SeedPointSet, extract_seed_points

__all__ = ["FrameResult", "process_frame"]


@dataclass(frozen=True)
class FrameResult:
    frame_id: str
    seed_sets: list[SeedPointSet]
    proposals: list[Proposal]
    scored: list[ScoredProposal]
    kept: list[ScoredProposal]


def process_frame(bundle: FrameBundle, config: PipelineConfig) -> FrameResult:
    """Run the full label-generation pipeline on one frame."""
    seed_sets = extract_seed_points(bundle.cloud, bundle.masks, bundle.calib, config.gamma)
    proposals = generate_proposals(bundle.cloud, seed_sets, config.proposals)
    scored = score_proposals(proposals, bundle.cloud, config.meta_shapes, config.score)
    kept = nms(scored, config.score.nms_iou)
    return FrameResult(bundle.frame_id, seed_sets, proposals, scored, kept)
