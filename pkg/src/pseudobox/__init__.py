"""pseudobox: 3D oriented-box pseudo-labels from point clouds, calibration,
and 2D instance masks.

The pipeline has three stages, all usable as plain library calls:

1. seed transfer -- shrink each 2D mask to its central region and project
   LiDAR points through it, yielding per-instance confident seed points;
2. proposal generation -- cluster the seed neighborhood once per radius of a
   per-instance schedule and fit an oriented box to each seed-majority
   cluster;
3. scoring -- rank proposals by a Gaussian boundary-distance prior and a
   per-class shape prior, then keep the best per object with rotated NMS.

`pseudobox.synthetic` generates fully-labeled synthetic scenes for testing,
`pseudobox.evaluation` measures label quality against ground truth, and
`pseudobox.cli` wires everything into the ``pseudobox`` command.
"""

from .box_fitting import DegenerateClusterError, fit_box
from .clustering import dbscan, neighborhood, radius_schedule, select_cluster
from .config import PipelineConfig, load_config
from .evaluation import QualityReport, iou3d, match_and_recall
from .geometry import (
    MetaShape,
    OrientedBox3D,
    PointCloud,
    box_corners,
    from_box_frame,
    point_in_box,
    points_in_box,
    to_box_frame,
)
from .kitti_io import FrameBundle, load_frame, read_calib, read_labels, read_masks, read_point_cloud
from .masks import InstanceMask, ShrunkMask, shrink_mask
from .pipeline import FrameResult, process_frame
from .proposals import Proposal, ProposalParams, generate_proposals
from .scoring import (
    EmptyForegroundError,
    ScoredProposal,
    ScoreParams,
    bev_iou,
    boundary_distance,
    combined_score,
    distribution_score,
    meta_shape_score,
    nms,
    normalize_scores,
    score_proposals,
)
from .seeds import CalibrationSet, SeedPointSet, extract_seed_points, project_points
from .synthetic import SynthConfig, SynthScene, render_oracle_masks, sample_scene, write_dataset

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CalibrationSet",
    "DegenerateClusterError",
    "EmptyForegroundError",
    "FrameBundle",
    "FrameResult",
    "InstanceMask",
    "MetaShape",
    "OrientedBox3D",
    "PipelineConfig",
    "PointCloud",
    "Proposal",
    "ProposalParams",
    "QualityReport",
    "ScoreParams",
    "ScoredProposal",
    "SeedPointSet",
    "ShrunkMask",
    "SynthConfig",
    "SynthScene",
    "bev_iou",
    "boundary_distance",
    "box_corners",
    "combined_score",
    "dbscan",
    "distribution_score",
    "extract_seed_points",
    "fit_box",
    "from_box_frame",
    "generate_proposals",
    "iou3d",
    "load_config",
    "load_frame",
    "match_and_recall",
    "meta_shape_score",
    "neighborhood",
    "nms",
    "normalize_scores",
    "point_in_box",
    "points_in_box",
    "process_frame",
    "project_points",
    "radius_schedule",
    "read_calib",
    "read_labels",
    "read_masks",
    "read_point_cloud",
    "render_oracle_masks",
    "sample_scene",
    "score_proposals",
    "select_cluster",
    "shrink_mask",
    "to_box_frame",
    "write_dataset",
]
