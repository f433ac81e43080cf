"""Batch front end: generate, eval, synth, and score subcommands.

Data goes to files, logs go to stderr. Every subcommand takes ``--config``
(key = value text, see :mod:`pseudobox.config`) and ``--set key=value``
overrides, so parameter sweeps never need editing files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from .evaluation import match_and_recall
from .geometry import box_corners, points_in_box
from .kitti_io import list_frames, load_frame, read_calib, read_labels, read_masks, write_labels
from .pipeline import process_frame
from .proposals import Proposal
from .scoring import nms, score_proposals
from .synthetic import SynthConfig, default_camera, write_dataset

logger = logging.getLogger("pseudobox")

_SYNTH_FLOAT = {"surface_noise", "min_gap", "focal"}
_SYNTH_INT = {
    "seed", "frames", "objects_min", "objects_max", "points_min", "points_max",
    "clutter", "mask_margin_px", "mask_noise_px", "image_h", "image_w",
}
_SYNTH_STR = {"out_root", "layout"}


def _parse_synth_values(path, overrides):
    values = {}
    lines = Path(path).read_text().splitlines() if path else []
    items = [ln.split("#", 1)[0].strip() for ln in lines]
    items = [it for it in items if it] + list(overrides or [])
    for item in items:
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        key, _, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if key in _SYNTH_FLOAT:
            values[key] = float(value)
        elif key in _SYNTH_INT:
            values[key] = int(value)
        elif key in _SYNTH_STR:
            values[key] = value
        else:
            raise KeyError(f"unknown synth key {key!r}")
    return values


def _build_synth_config(values) -> tuple[SynthConfig, int, str]:
    camera = default_camera(
        image_size=(values.get("image_h", 376), values.get("image_w", 672)),
        focal=values.get("focal", 350.0),
    )
    cfg = SynthConfig(
        seed=values.get("seed", 0),
        objects_per_scene=(values.get("objects_min", 1), values.get("objects_max", 5)),
        points_per_object=(values.get("points_min", 80), values.get("points_max", 300)),
        surface_noise=values.get("surface_noise", 0.02),
        clutter_points=values.get("clutter", 120),
        min_gap=values.get("min_gap", 1.5),
        layout=values.get("layout", "scattered"),
        mask_margin_px=values.get("mask_margin_px", 2),
        mask_noise_px=values.get("mask_noise_px", 0),
        camera=camera,
    )
    return cfg, values.get("frames", 10), values.get("out_root", "synth_data")


def _generate_one(args):
    """Worker: process one frame and write its label file."""
    root, out_dir, frame_id, config, export_dir = args
    bundle = load_frame(root, frame_id)
    result = process_frame(bundle, config)
    write_labels(
        Path(out_dir) / f"{frame_id}.txt",
        [(sp.box, sp.proposal.class_name, sp.score) for sp in result.kept],
        bundle.calib,
    )
    if export_dir:
        _export_debug(Path(export_dir), frame_id, bundle, result)
    return frame_id, {
        "instances": len(bundle.masks),
        "seeds": int(sum(len(s) for s in result.seed_sets)),
        "proposals": len(result.proposals),
        "kept": len(result.kept),
    }


def _export_debug(export_dir: Path, frame_id: str, bundle, result) -> None:
    """Plain-text cluster points and box corners, for external viewers."""
    export_dir.mkdir(parents=True, exist_ok=True)
    with open(export_dir / f"{frame_id}_clusters.txt", "w") as fh:
        for ci, sp in enumerate(result.kept):
            for x, y, z in bundle.cloud.xyz[sp.proposal.cluster_indices]:
                fh.write(f"{x:.4f} {y:.4f} {z:.4f} {ci}\n")
    with open(export_dir / f"{frame_id}_boxes.txt", "w") as fh:
        for ci, sp in enumerate(result.kept):
            for x, y, z in box_corners(sp.box):
                fh.write(f"{x:.4f} {y:.4f} {z:.4f} {ci}\n")


def cmd_generate(args) -> int:
    config = config_mod.load_config(args.config, args.set)
    if args.workers is not None:
        config = config_mod.apply_overrides(config, [f"workers={args.workers}"])
    root = config.dataset_root
    if not root:
        logger.error("dataset_root is not configured")
        return 2
    out_dir = Path(config.output_dir or "labels")
    out_dir.mkdir(parents=True, exist_ok=True)

    frames = list_frames(root)
    logger.info("generating labels for %d frames from %s", len(frames), root)
    jobs = [(root, str(out_dir), fid, config, args.export_clusters) for fid in frames]
    stats = {}
    failures = {}
    if config.workers == 1:
        for job in jobs:
            fid = job[2]
            try:
                _, stat = _generate_one(job)
                stats[fid] = stat
            except Exception as err:  # per-frame isolation
                logger.error("frame %s failed: %s", fid, err)
                failures[fid] = str(err)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(_generate_one, job): job[2] for job in jobs}
            for future, fid in futures.items():
                try:
                    _, stat = future.result()
                    stats[fid] = stat
                except Exception as err:
                    logger.error("frame %s failed: %s", fid, err)
                    failures[fid] = str(err)

    manifest = {
        "config_hash": config.content_hash(),
        "frame_count": len(frames),
        "frames": {fid: stats[fid] for fid in sorted(stats)},
        "failures": {fid: failures[fid] for fid in sorted(failures)},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(
        "done: %d frames, %d proposals, %d kept, %d failures",
        len(stats),
        sum(s["proposals"] for s in stats.values()),
        sum(s["kept"] for s in stats.values()),
        len(failures),
    )
    return 1 if failures and args.strict else 0


def _frame_boxes(label_dir: Path, frame_id: str, calib) -> list:
    path = label_dir / f"{frame_id}.txt"
    return [box for box, _, _ in read_labels(path, calib)]


def cmd_eval(args) -> int:
    config = config_mod.load_config(args.config, args.set)
    label_dir = Path(args.labels or config.output_dir)
    gt_dir = Path(args.gt or (Path(config.dataset_root) / "label_2"))
    out_dir = Path(args.out or label_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    label_frames = {p.stem for p in label_dir.glob("*.txt")}
    gt_frames = {p.stem for p in gt_dir.glob("*.txt")}
    common = sorted(label_frames & gt_frames)
    missing = sorted(label_frames ^ gt_frames)
    if missing:
        logger.warning("evaluating %d common frames; missing from one side: %s",
                       len(common), ", ".join(missing))

    labels_by_frame = {}
    gt_by_frame = {}
    for fid in common:
        calib_path = Path(config.dataset_root) / "calib" / f"{fid}.txt"
        masks_path = Path(config.dataset_root) / "masks" / f"{fid}.json"
        image_size = None
        if masks_path.exists():
            _, image_size = read_masks(masks_path)
        calib = read_calib(calib_path, image_size=image_size) if image_size else read_calib(calib_path)
        labels_by_frame[fid] = _frame_boxes(label_dir, fid, calib)
        gt_by_frame[fid] = _frame_boxes(gt_dir, fid, calib)

    report = match_and_recall(labels_by_frame, gt_by_frame)
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    (out_dir / "report.txt").write_text(report.format_table() + "\n")
    print(report.format_table())
    return 0


def cmd_synth(args) -> int:
    values = _parse_synth_values(args.config, args.set)
    cfg, frames, out_root = _build_synth_config(values)
    ids = write_dataset(cfg, frames, out_root)
    logger.info("wrote %d synthetic frames to %s", len(ids), out_root)
    return 0


def cmd_score(args) -> int:
    """Re-score existing label files: rebuild proposals from the boxes, score,
    and run NMS again under the current configuration."""
    config = config_mod.load_config(args.config, args.set)
    label_dir = Path(args.labels)
    out_dir = Path(config.output_dir or "rescored")
    out_dir.mkdir(parents=True, exist_ok=True)

    for path in sorted(label_dir.glob("*.txt")):
        fid = path.stem
        try:
            bundle = load_frame(config.dataset_root, fid)
        except FileNotFoundError as err:
            logger.warning("skipping %s: %s", fid, err)
            continue
        proposals = []
        for line_idx, (box, cls, _) in enumerate(read_labels(path, bundle.calib)):
            inside = np.nonzero(points_in_box(bundle.cloud.xyz, box))[0]
            if inside.size == 0:
                logger.info("frame %s: box %d holds no points, dropped", fid, line_idx)
                continue
            proposals.append(Proposal(box, line_idx, cls, 0.0, inside))
        scored = score_proposals(proposals, bundle.cloud, config.meta_shapes, config.score)
        kept = nms(scored, config.score.nms_iou)
        write_labels(
            out_dir / f"{fid}.txt",
            [(sp.box, sp.proposal.class_name, sp.score) for sp in kept],
            bundle.calib,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudobox",
                                     description="3D box pseudo-label generation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run the full pipeline over a dataset")
    gen.add_argument("--config", help="key=value config file")
    gen.add_argument("--workers", type=int, default=None, help="frame-level worker count")
    gen.add_argument("--strict", action="store_true", help="exit nonzero if any frame fails")
    gen.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    gen.add_argument("--export-clusters", metavar="DIR", default=None,
                     help="also dump cluster points and box corners as plain text")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="score generated labels against ground truth")
    ev.add_argument("--config", help="key=value config file")
    ev.add_argument("--labels", help="label dir (default: output_dir)")
    ev.add_argument("--gt", help="ground-truth dir (default: dataset_root/label_2)")
    ev.add_argument("--out", help="report dir (default: label dir)")
    ev.add_argument("--set", action="append", metavar="KEY=VALUE")
    ev.set_defaults(func=cmd_eval)

    sy = sub.add_parser("synth", help="write a synthetic dataset")
    sy.add_argument("--config", help="key=value synth config file")
    sy.add_argument("--set", action="append", metavar="KEY=VALUE")
    sy.set_defaults(func=cmd_synth)

    sc = sub.add_parser("score", help="re-score existing label files")
    sc.add_argument("--config", help="key=value config file")
    sc.add_argument("--labels", required=True, help="directory of label files to re-score")
    sc.add_argument("--set", action="append", metavar="KEY=VALUE")
    sc.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as err:
        logger.error("%s", err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
