"""Readers and writers for the KITTI-style dataset layout.

Expected layout under a dataset root::

    root/velodyne/<frame>.bin   little-endian float32 quadruples (x, y, z, intensity)
    root/calib/<frame>.txt      keyed lines "P2:", "R0_rect:", "Tr_velo_to_cam:"
    root/masks/<frame>.json     image size + run-length encoded instance masks
    root/label_2/<frame>.txt    KITTI 15/16-column object labels

Mask document schema (JSON)::

    {"image_size": [H, W],
     "instances": [{"id": <int>, "class": <str>, "rle": [<int>, ...]}, ...]}

where ``rle`` is the uncompressed COCO-style run-length counts of the binary
H x W mask in column-major order, starting with the count of zeros.

Label geometry follows the KITTI camera-frame convention: location is the
box bottom-center in rectified camera coordinates, dimensions are (h, w, l),
and rotation_y = -yaw - pi/2 for a LiDAR-frame yaw. All numeric fields are
written with 2 decimals except the trailing score (4 decimals).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import OrientedBox3D, PointCloud, box_corners
from .masks import InstanceMask, decode_rle, encode_rle
from .seeds import CalibrationSet

__all__ = [
    "MalformedFileError",
    "FrameBundle",
    "DEFAULT_IMAGE_SIZE",
    "read_point_cloud",
    "write_point_cloud",
    "read_calib",
    "write_calib",
    "read_masks",
    "write_masks",
    "read_labels",
    "write_labels",
    "load_frame",
    "list_frames",
]

logger = logging.getLogger(__name__)

# KITTI image_2 frames are 1242 x 375; calibration text files carry no image
# dimensions, so this is the fallback when no mask document pins the size.
DEFAULT_IMAGE_SIZE = (375, 1242)

_POINT_RECORD_BYTES = 16  # four little-endian float32 per return


class MalformedFileError(ValueError):
    """An input file does not conform to its documented format."""


@dataclass(frozen=True)
class FrameBundle:
    """Everything known about one frame."""

    frame_id: str
    cloud: PointCloud
    calib: CalibrationSet
    masks: list[InstanceMask]
    gt_boxes: list[OrientedBox3D] | None = None
    gt_classes: list[str] | None = None

    def __post_init__(self):
        for m in self.masks:
            if m.image_size != self.calib.image_size:
                raise MalformedFileError(
                    f"frame {self.frame_id}: mask size {m.image_size} does not match "
                    f"calibration image size {self.calib.image_size}"
                )


def read_point_cloud(path) -> PointCloud:
    """Read a velodyne .bin file of float32 (x, y, z, intensity) quadruples."""
    data = Path(path).read_bytes()
    if len(data) % _POINT_RECORD_BYTES != 0:
        raise MalformedFileError(
            f"{path}: byte length {len(data)} is not a multiple of {_POINT_RECORD_BYTES}"
        )
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    if not np.isfinite(raw).all():
        raise MalformedFileError(f"{path}: non-finite values in point record")
    return PointCloud(raw[:, :3].astype(np.float64), raw[:, 3].astype(np.float64))


def write_point_cloud(path, cloud: PointCloud) -> None:
    """Inverse of :func:`read_point_cloud`; coordinates are cast to float32."""
    n = len(cloud)
    raw = np.zeros((n, 4), dtype="<f4")
    raw[:, :3] = cloud.xyz
    if cloud.intensity is not None:
        raw[:, 3] = cloud.intensity
    Path(path).write_bytes(raw.tobytes())


def _parse_matrix(fields: list[str], rows: int, cols: int, key: str, path) -> np.ndarray:
    if len(fields) != rows * cols:
        raise MalformedFileError(
            f"{path}: key {key} has {len(fields)} values, expected {rows * cols}"
        )
    try:
        values = [float(f) for f in fields]
    except ValueError as err:
        raise MalformedFileError(f"{path}: key {key}: {err}") from None
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def read_calib(path, image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE) -> CalibrationSet:
    """Parse a KITTI calibration text file (P2, R0_rect, Tr_velo_to_cam)."""
    entries = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, rest = line.partition(":")
        entries[key.strip()] = rest.split()
    required = {"P2": (3, 4), "R0_rect": (3, 3), "Tr_velo_to_cam": (3, 4)}
    matrices = {}
    for key, (rows, cols) in required.items():
        if key not in entries:
            raise MalformedFileError(f"{path}: missing calibration key {key}")
        matrices[key] = _parse_matrix(entries[key], rows, cols, key, path)
    return CalibrationSet(
        P=matrices["P2"], R=matrices["R0_rect"], T=matrices["Tr_velo_to_cam"],
        image_size=image_size,
    )


def write_calib(path, calib: CalibrationSet) -> None:
    """Write the three calibration keys `read_calib` requires."""
    def fmt(mat):
        # .17g round-trips float64 exactly
        return " ".join(f"{v:.17g}" for v in np.asarray(mat).ravel())

    text = (
        f"P2: {fmt(calib.P)}\n"
        f"R0_rect: {fmt(calib.R)}\n"
        f"Tr_velo_to_cam: {fmt(calib.T)}\n"
    )
    Path(path).write_text(text)


def read_masks(path, image_size: tuple[int, int] | None = None) -> tuple[list[InstanceMask], tuple[int, int]]:
    """Read a mask document; returns (masks sorted by instance id, (H, W)).

    When `image_size` is given it must match the document.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise MalformedFileError(f"{path}: invalid JSON: {err}") from None
    for key in ("image_size", "instances"):
        if key not in doc:
            raise MalformedFileError(f"{path}: missing key {key!r}")
    h, w = (int(v) for v in doc["image_size"])
    if image_size is not None and (h, w) != tuple(image_size):
        raise MalformedFileError(
            f"{path}: document image size {(h, w)} does not match expected {tuple(image_size)}"
        )
    masks = []
    seen = set()
    for inst in doc["instances"]:
        for key in ("id", "class", "rle"):
            if key not in inst:
                raise MalformedFileError(f"{path}: instance missing key {key!r}")
        iid = int(inst["id"])
        if iid in seen:
            raise MalformedFileError(f"{path}: duplicate instance id {iid}")
        seen.add(iid)
        try:
            grid = decode_rle(inst["rle"], (h, w))
            masks.append(InstanceMask(iid, str(inst["class"]), grid))
        except ValueError as err:
            raise MalformedFileError(f"{path}: instance {iid}: {err}") from None
    return sorted(masks, key=lambda m: m.instance_id), (h, w)


def write_masks(path, masks: list[InstanceMask], image_size: tuple[int, int]) -> None:
    """Inverse of :func:`read_masks`."""
    doc = {
        "image_size": [int(image_size[0]), int(image_size[1])],
        "instances": [
            {"id": m.instance_id, "class": m.class_name, "rle": encode_rle(m.grid)}
            for m in sorted(masks, key=lambda m: m.instance_id)
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def _lidar_yaw_to_rotation_y(yaw: float) -> float:
    ry = -yaw - math.pi / 2.0
    # keep within KITTI's [-pi, pi)
    return math.atan2(math.sin(ry), math.cos(ry))


def _rotation_y_to_lidar_yaw(ry: float) -> float:
    return -ry - math.pi / 2.0


def _project_box_2d(box: OrientedBox3D, calib: CalibrationSet) -> tuple[float, float, float, float] | None:
    """Pixel AABB of the projected box corners, clamped to the image, or None
    when the box is entirely behind the camera."""
    cam = calib.lidar_to_camera(box_corners(box))
    front = cam[:, 2] > 0.0
    if not front.any():
        return None
    homo = np.hstack([cam[front], np.ones((int(front.sum()), 1))])
    pix = (calib.P @ homo.T).T
    u = pix[:, 0] / pix[:, 2]
    v = pix[:, 1] / pix[:, 2]
    h, w = calib.image_size
    return (
        float(np.clip(u.min(), 0, w - 1)),
        float(np.clip(v.min(), 0, h - 1)),
        float(np.clip(u.max(), 0, w - 1)),
        float(np.clip(v.max(), 0, h - 1)),
    )


def write_labels(path, entries, calib: CalibrationSet) -> None:
    """Write KITTI label lines.

    `entries` is an iterable of (box, class_name, score); score may be None
    to emit the 15-column ground-truth layout. Boxes fully behind the camera
    get a zero 2D bbox and a log notice.
    """
    lines = []
    for box, class_name, score in entries:
        bbox = _project_box_2d(box, calib)
        if bbox is None:
            logger.warning("box for class %s is behind the camera; writing zero 2D bbox",
                           class_name)
            bbox = (0.0, 0.0, 0.0, 0.0)
        bottom_center = np.array(box.center) - [0.0, 0.0, box.height / 2.0]
        loc = calib.lidar_to_camera(bottom_center.reshape(1, 3))[0]
        ry = _lidar_yaw_to_rotation_y(box.yaw)
        alpha = ry - math.atan2(loc[0], loc[2])
        fields = [
            class_name,
            "0.00",  # truncated
            "0",     # occluded
            f"{alpha:.2f}",
            f"{bbox[0]:.2f}", f"{bbox[1]:.2f}", f"{bbox[2]:.2f}", f"{bbox[3]:.2f}",
            f"{box.height:.2f}", f"{box.width:.2f}", f"{box.length:.2f}",
            f"{loc[0]:.2f}", f"{loc[1]:.2f}", f"{loc[2]:.2f}",
            f"{ry:.2f}",
        ]
        if score is not None:
            fields.append(f"{score:.4f}")
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_labels(path, calib: CalibrationSet) -> list[tuple[OrientedBox3D, str, float | None]]:
    """Inverse of :func:`write_labels`; DontCare lines are skipped."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if fields[0] == "DontCare":
            continue
        if len(fields) not in (15, 16):
            raise MalformedFileError(
                f"{path}:{lineno}: expected 15 or 16 fields, got {len(fields)}"
            )
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError as err:
            raise MalformedFileError(f"{path}:{lineno}: {err}") from None
        h, w, l = values[7:10]
        loc = np.array(values[10:13])
        ry = values[13]
        score = values[14] if len(fields) == 16 else None
        bottom_center = calib.camera_to_lidar(loc.reshape(1, 3))[0]
        center = (bottom_center[0], bottom_center[1], bottom_center[2] + h / 2.0)
        try:
            box = OrientedBox3D(center, (l, w, h), _rotation_y_to_lidar_yaw(ry))
        except ValueError as err:
            raise MalformedFileError(f"{path}:{lineno}: {err}") from None
        out.append((box, fields[0], score))
    return out


def list_frames(root) -> list[str]:
    """Frame ids present in all of velodyne/, calib/, and masks/."""
    root = Path(root)
    stems = None
    for sub, suffix in (("velodyne", ".bin"), ("calib", ".txt"), ("masks", ".json")):
        found = {p.stem for p in (root / sub).glob(f"*{suffix}")}
        stems = found if stems is None else stems & found
    return sorted(stems or [])


def load_frame(root, frame_id: str, with_gt: bool = False) -> FrameBundle:
    """Assemble a FrameBundle from the dataset layout; the mask document's
    image size overrides the calibration default."""
    root = Path(root)
    masks, image_size = read_masks(root / "masks" / f"{frame_id}.json")
    calib = read_calib(root / "calib" / f"{frame_id}.txt", image_size=image_size)
    cloud = read_point_cloud(root / "velodyne" / f"{frame_id}.bin")
    gt_boxes = gt_classes = None
    if with_gt:
        labels = read_labels(root / "label_2" / f"{frame_id}.txt", calib)
        gt_boxes = [box for box, _, _ in labels]
        gt_classes = [cls for _, cls, _ in labels]
    return FrameBundle(frame_id, cloud, calib, masks, gt_boxes, gt_classes)
