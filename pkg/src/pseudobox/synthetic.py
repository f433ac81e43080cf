"""Deterministic synthetic scenes: surface-sampled boxes, clutter, oracle masks.

Scenes stand in for real drives during testing: ground-truth boxes are known
exactly, LiDAR returns are sampled on the boxes' sensor-facing faces (plus
uniform clutter), and instance masks are rendered from the known point-to-
object assignment. Everything is a pure function of (config, frame index):
every random draw comes from a counter-based generator keyed by
(seed, frame, stream), so scenes are reproducible under parallel generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import OrientedBox3D, PointCloud, box_corners, from_box_frame, points_in_box
from .kitti_io import FrameBundle, write_calib, write_labels, write_masks, write_point_cloud
from .masks import InstanceMask
from .scoring import bev_iou
from .seeds import CalibrationSet, SeedPointSet, project_points

__all__ = [
    "SceneTooDenseError",
    "SynthConfig",
    "SynthScene",
    "default_camera",
    "sample_scene",
    "render_oracle_masks",
    "write_dataset",
    "seed_misassignment_fraction",
]

# (l, w, h) sampling ranges per class, meters
DEFAULT_EXTENTS = {
    "Car": ((3.5, 4.5), (1.5, 1.9), (1.4, 1.7)),
    "Pedestrian": ((0.5, 0.9), (0.4, 0.7), (1.6, 1.85)),
}
DEFAULT_CLASS_MIX = {"Car": 0.7, "Pedestrian": 0.3}

_PLACEMENT_BUDGET = 800

# streams for the counter-based generator
_STREAM_SCENE = 0
_STREAM_OBJECT = 1  # + object index
_STREAM_CLUTTER = 10_000
_STREAM_MASK = 20_000  # + object index


class SceneTooDenseError(RuntimeError):
    """Rejection sampling could not place the requested objects."""


def default_camera(image_size: tuple[int, int] = (376, 672), focal: float = 350.0) -> CalibrationSet:
    """A forward-looking pinhole camera: x forward maps to image depth."""
    h, w = image_size
    P = np.array(
        [[focal, 0.0, w / 2.0, 0.0], [0.0, focal, h / 2.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
    )
    # LiDAR (x fwd, y left, z up) -> camera (x right, y down, z fwd)
    T = np.array([[0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0]])
    return CalibrationSet(P=P, R=np.eye(3), T=T, image_size=image_size)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    objects_per_scene: tuple[int, int] = (1, 5)
    class_mix: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_MIX))
    extents: dict = field(default_factory=lambda: dict(DEFAULT_EXTENTS))
    points_per_object: tuple[int, int] = (80, 300)
    surface_noise: float = 0.02
    surface_inset: float = 0.0
    clutter_points: int = 120
    clutter_clearance: float = 1.25
    scene_x: tuple[float, float] = (6.0, 26.0)
    scene_y: tuple[float, float] = (-12.0, 12.0)
    scene_z: tuple[float, float] = (-1.2, 2.0)
    box_z_center: tuple[float, float] = (-0.3, 0.6)
    min_gap: float = 1.5
    layout: str = "scattered"  # or "occluded_pairs"
    mask_margin_px: int = 2
    mask_noise_px: int = 0
    camera: CalibrationSet = field(default_factory=default_camera)

    def __post_init__(self):
        if self.surface_noise < 0:
            raise ValueError("surface noise must be >= 0")
        if self.objects_per_scene[0] < 1 or self.objects_per_scene[0] > self.objects_per_scene[1]:
            raise ValueError(f"bad objects_per_scene range {self.objects_per_scene}")
        if self.points_per_object[0] < 1 or self.points_per_object[0] > self.points_per_object[1]:
            raise ValueError(f"bad points_per_object range {self.points_per_object}")
        if self.layout not in ("scattered", "occluded_pairs"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if not self.class_mix or set(self.class_mix) - set(self.extents):
            raise ValueError("every class in class_mix needs an extents entry")


@dataclass(frozen=True)
class SynthScene:
    """A generated frame plus the ground-truth point-to-object assignment
    (-1 marks clutter)."""

    bundle: FrameBundle
    point_object: np.ndarray


def _rng(config: SynthConfig, frame_index: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(frame_index, stream))
    return np.random.Generator(np.random.Philox(seq))


def _fully_visible(box: OrientedBox3D, calib: CalibrationSet, margin_px: float = 4.0) -> bool:
    cam = calib.lidar_to_camera(box_corners(box))
    if (cam[:, 2] <= 0.1).any():
        return False
    homo = np.hstack([cam, np.ones((8, 1))])
    pix = (calib.P @ homo.T).T
    u = pix[:, 0] / pix[:, 2]
    v = pix[:, 1] / pix[:, 2]
    h, w = calib.image_size
    return bool(
        (u >= margin_px).all() and (u < w - margin_px).all()
        and (v >= margin_px).all() and (v < h - margin_px).all()
    )


def _separated(box: OrientedBox3D, others: list[OrientedBox3D], gap: float) -> bool:
    inflated = OrientedBox3D(box.center, (box.length + gap, box.width + gap, box.height), box.yaw)
    for other in others:
        other_inflated = OrientedBox3D(
            other.center, (other.length + gap, other.width + gap, other.height), other.yaw
        )
        if bev_iou(inflated, other_inflated) > 0.0:
            return False
    return True


def _pixel_aabb(box: OrientedBox3D, calib: CalibrationSet) -> tuple[float, float, float, float]:
    """(u0, u1, v0, v1) hull of the projected corners; box must be in front."""
    cam = calib.lidar_to_camera(box_corners(box))
    homo = np.hstack([cam, np.ones((8, 1))])
    pix = (calib.P @ homo.T).T
    u = pix[:, 0] / pix[:, 2]
    v = pix[:, 1] / pix[:, 2]
    return float(u.min()), float(u.max()), float(v.min()), float(v.max())


def _rects_disjoint(a, b, margin: float) -> bool:
    au0, au1, av0, av1 = a
    bu0, bu1, bv0, bv1 = b
    return (
        au1 + margin < bu0 or bu1 + margin < au0
        or av1 + margin < bv0 or bv1 + margin < av0
    )


def _rect_overlap_fraction(a, b) -> float:
    """Intersection area over the smaller rectangle's area."""
    au0, au1, av0, av1 = a
    bu0, bu1, bv0, bv1 = b
    du = min(au1, bu1) - max(au0, bu0)
    dv = min(av1, bv1) - max(av0, bv0)
    if du <= 0 or dv <= 0:
        return 0.0
    smaller = min((au1 - au0) * (av1 - av0), (bu1 - bu0) * (bv1 - bv0))
    return du * dv / smaller


def _sample_box(rng, config: SynthConfig, class_name: str, x=None, y=None) -> OrientedBox3D:
    (l0, l1), (w0, w1), (h0, h1) = config.extents[class_name]
    size = (rng.uniform(l0, l1), rng.uniform(w0, w1), rng.uniform(h0, h1))
    if x is None:
        x = rng.uniform(*config.scene_x)
    if y is None:
        y = rng.uniform(*config.scene_y)
    z = rng.uniform(*config.box_z_center)
    yaw = rng.uniform(-math.pi / 2.0, math.pi / 2.0)
    return OrientedBox3D((x, y, z), size, yaw)


def _place_objects(rng, config: SynthConfig) -> tuple[list[OrientedBox3D], list[str]]:
    n = int(rng.integers(config.objects_per_scene[0], config.objects_per_scene[1] + 1))
    classes = sorted(config.class_mix)
    probs = np.array([config.class_mix[c] for c in classes], dtype=np.float64)
    probs /= probs.sum()

    boxes: list[OrientedBox3D] = []
    names: list[str] = []
    rects: list[tuple[float, float, float, float]] = []
    # scattered scenes keep image footprints disjoint so oracle masks never
    # overlap; occluded pairs overlap on purpose
    rect_margin = 3.0 * (config.mask_margin_px + config.mask_noise_px + 1)
    for i in range(n):
        class_name = str(rng.choice(classes, p=probs))
        pair_leader = None
        if config.layout == "occluded_pairs" and i % 2 == 1:
            pair_leader = boxes[-1]
        placed = False
        for attempt in range(_PLACEMENT_BUDGET):
            standalone = pair_leader is None or attempt >= _PLACEMENT_BUDGET // 2
            if not standalone:
                # behind the leader and offset sideways, so the image
                # footprints overlap at their edges rather than concentrically
                lx, ly, _ = pair_leader.center
                x = lx + rng.uniform(4.0, 8.0)
                y = ly * x / lx + rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 4.0)
                box = _sample_box(rng, config, class_name, x=x, y=y)
            else:
                box = _sample_box(rng, config, class_name)
            if not (_fully_visible(box, config.camera) and _separated(box, boxes, config.min_gap)):
                continue
            rect = _pixel_aabb(box, config.camera)
            if standalone:
                # scattered objects (and pair fallbacks) keep image footprints
                # disjoint so only the deliberate pairs ever overlap
                if not all(_rects_disjoint(rect, other, rect_margin) for other in rects):
                    continue
            else:
                overlap = _rect_overlap_fraction(rect, rects[-1])
                if not 0.05 <= overlap <= 0.25:
                    continue
            boxes.append(box)
            names.append(class_name)
            rects.append(rect)
            placed = True
            break
        if not placed:
            raise SceneTooDenseError(
                f"could not place object {i + 1}/{n} within {_PLACEMENT_BUDGET} attempts"
            )
    return boxes, names


# face definitions in the box frame: (axis, sign); extents follow from size
_FACES = [(0, +1.0), (0, -1.0), (1, +1.0), (1, -1.0), (2, +1.0), (2, -1.0)]


def _sample_surface_points(rng, box: OrientedBox3D, n: int, noise: float, inset: float) -> np.ndarray:
    """Sample n points on the faces visible from the sensor at the origin,
    proportionally to face area.

    Each point is pulled into the box along the inward normal by an
    exponential draw of scale `inset` (body rounding: real objects are not
    perfect cuboids, so most returns sit slightly inside the bounding hull),
    then perturbed along the normal by Gaussian sensor noise `noise`.
    """
    l, w, h = box.size
    extents = {0: (w, h), 1: (l, h), 2: (l, w)}
    visible = []
    for axis, sign in _FACES:
        center_local = np.zeros(3)
        center_local[axis] = sign * box.size[axis] / 2.0
        normal_local = np.zeros(3)
        normal_local[axis] = sign
        face_center_world = from_box_frame(center_local, box)
        normal_world = from_box_frame(normal_local, box) - np.asarray(box.center)
        if float(np.dot(normal_world, -face_center_world)) > 0.0:  # faces the origin
            a, b = extents[axis]
            visible.append((axis, sign, normal_world, a * b))
    if not visible:  # sensor inside the box; degenerate but keep it total
        visible = [(2, 1.0, np.array([0.0, 0.0, 1.0]), l * w)]

    areas = np.array([f[3] for f in visible])
    choices = rng.choice(len(visible), size=n, p=areas / areas.sum())
    pts_local = np.empty((n, 3))
    normals = np.empty((n, 3))
    for row, f_idx in enumerate(choices):
        axis, sign, normal_world, _ = visible[f_idx]
        coords = np.zeros(3)
        depth = rng.exponential(inset) if inset > 0 else 0.0
        depth = min(depth, 0.45 * box.size[axis])
        coords[axis] = sign * (box.size[axis] / 2.0 - depth)
        for other in (ax for ax in range(3) if ax != axis):
            half = box.size[other] / 2.0
            coords[other] = rng.uniform(-half, half)
        pts_local[row] = coords
        normals[row] = normal_world
    pts = np.atleast_2d(from_box_frame(pts_local, box))
    # sensor noise, truncated so every point stays within 3 sigma of the hull
    jitter = np.clip(rng.normal(0.0, noise, size=(n, 1)), -3.0 * noise, 3.0 * noise)
    return pts + normals * jitter


def _sample_clutter(rng, config: SynthConfig, boxes: list[OrientedBox3D]) -> np.ndarray:
    """Uniform free-space points over the scene extent.

    Clutter keeps `clutter_clearance` meters away from every GT box so it can
    never density-chain onto an object surface within the radius schedule.
    """
    out = np.empty((config.clutter_points, 3))
    m = 2.0 * config.clutter_clearance
    grown = [OrientedBox3D(b.center, (b.length + m, b.width + m, b.height + m), b.yaw)
             for b in boxes]
    count = 0
    attempts = 0
    while count < config.clutter_points:
        attempts += 1
        if attempts > 100 * config.clutter_points:
            raise SceneTooDenseError("clutter sampling starved by the grown GT boxes")
        pt = np.array([
            rng.uniform(*config.scene_x),
            rng.uniform(*config.scene_y),
            rng.uniform(*config.scene_z),
        ])
        if any(points_in_box(pt.reshape(1, 3), b)[0] for b in grown):
            continue
        out[count] = pt
        count += 1
    return out


def sample_scene(config: SynthConfig, frame_index: int) -> SynthScene:
    """Generate one frame: GT boxes, surface + clutter points, oracle masks."""
    scene_rng = _rng(config, frame_index, _STREAM_SCENE)
    boxes, names = _place_objects(scene_rng, config)

    chunks = []
    owners = []
    for obj_idx, box in enumerate(boxes):
        obj_rng = _rng(config, frame_index, _STREAM_OBJECT + obj_idx)
        n = int(obj_rng.integers(config.points_per_object[0], config.points_per_object[1] + 1))
        pts = _sample_surface_points(obj_rng, box, n, config.surface_noise, config.surface_inset)
        chunks.append(pts)
        owners.append(np.full(n, obj_idx, dtype=np.int64))
    if config.clutter_points > 0:
        clutter_rng = _rng(config, frame_index, _STREAM_CLUTTER)
        pts = _sample_clutter(clutter_rng, config, boxes)
        chunks.append(pts)
        owners.append(np.full(pts.shape[0], -1, dtype=np.int64))

    xyz = np.vstack(chunks) if chunks else np.empty((0, 3))
    # snap to float32 so on-disk round trips are lossless
    xyz = xyz.astype(np.float32).astype(np.float64)
    intensity_rng = _rng(config, frame_index, _STREAM_CLUTTER + 1)
    intensity = intensity_rng.random(xyz.shape[0]).astype(np.float32).astype(np.float64)
    cloud = PointCloud(xyz, intensity)
    point_object = np.concatenate(owners) if owners else np.empty(0, dtype=np.int64)

    mask_rngs = [_rng(config, frame_index, _STREAM_MASK + i) for i in range(len(boxes))]
    masks = render_oracle_masks(
        boxes, names, config.camera, cloud, point_object,
        margin_px=config.mask_margin_px, noise_px=config.mask_noise_px, rngs=mask_rngs,
    )
    frame_id = f"{frame_index:06d}"
    bundle = FrameBundle(frame_id, cloud, config.camera, masks, list(boxes), list(names))
    return SynthScene(bundle, point_object)


def render_oracle_masks(
    boxes,
    names,
    calib: CalibrationSet,
    cloud: PointCloud,
    point_object: np.ndarray,
    margin_px: int = 2,
    noise_px: int = 0,
    rngs=None,
) -> list[InstanceMask]:
    """Rectangle masks: the pixel AABB of each object's projected points,
    dilated by `margin_px`. With noise_px > 0 each side is additionally
    inflated by an independent random amount in [0, noise_px], emulating the
    ragged over-segmentation of learned masks. Objects with no valid
    projection are omitted. Instance ids are the object indices."""
    uv, valid = project_points(cloud, calib)
    h, w = calib.image_size
    masks = []
    for obj_idx, (box, name) in enumerate(zip(boxes, names)):
        sel = valid & (point_object == obj_idx)
        if not sel.any():
            continue
        u = uv[sel, 0]
        v = uv[sel, 1]
        grow = np.zeros(4, dtype=np.int64)
        if noise_px > 0 and rngs is not None:
            grow = rngs[obj_idx].integers(0, noise_px + 1, size=4)
        u0 = max(0, int(math.floor(u.min())) - margin_px - int(grow[0]))
        u1 = min(w - 1, int(math.ceil(u.max())) + margin_px + int(grow[1]))
        v0 = max(0, int(math.floor(v.min())) - margin_px - int(grow[2]))
        v1 = min(h - 1, int(math.ceil(v.max())) + margin_px + int(grow[3]))
        grid = np.zeros((h, w), dtype=bool)
        grid[v0 : v1 + 1, u0 : u1 + 1] = True
        masks.append(InstanceMask(obj_idx, name, grid))
    return masks


def write_dataset(config: SynthConfig, n_frames: int, root) -> list[str]:
    """Write n_frames scenes in the standard dataset layout; returns frame ids."""
    root = Path(root)
    for sub in ("velodyne", "calib", "masks", "label_2"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    frame_ids = []
    for idx in range(n_frames):
        scene = sample_scene(config, idx)
        bundle = scene.bundle
        fid = bundle.frame_id
        write_point_cloud(root / "velodyne" / f"{fid}.bin", bundle.cloud)
        write_calib(root / "calib" / f"{fid}.txt", bundle.calib)
        write_masks(root / "masks" / f"{fid}.json", bundle.masks, bundle.calib.image_size)
        write_labels(
            root / "label_2" / f"{fid}.txt",
            [(b, c, None) for b, c in zip(bundle.gt_boxes, bundle.gt_classes)],
            bundle.calib,
        )
        frame_ids.append(fid)
    return frame_ids


def seed_misassignment_fraction(scene: SynthScene, seed_sets: list[SeedPointSet]) -> float:
    """Fraction of seed points assigned to an instance other than the object
    that generated them (clutter seeds always count as misassigned)."""
    total = 0
    wrong = 0
    for seeds in seed_sets:
        owners = scene.point_object[seeds.indices]
        total += len(seeds)
        wrong += int((owners != seeds.instance_id).sum())
    return wrong / total if total else 0.0
