"""2D instance masks and the boundary-shrink operation.

Masks are binary H x W grids. Pixel coordinates follow image convention:
u is the column index, v the row index, so ``grid[v, u]`` is the pixel at
(u, v). On the wire masks travel as uncompressed COCO-style run-length
counts: the flat column-major pixel sequence, alternating runs of zeros and
ones, always starting with the zero-run count (possibly 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InstanceMask",
    "ShrunkMask",
    "shrink_mask",
    "decode_rle",
    "encode_rle",
]


def decode_rle(counts, shape: tuple[int, int]) -> np.ndarray:
    """Decode column-major run-length counts into a binary (H, W) grid."""
    h, w = int(shape[0]), int(shape[1])
    if h <= 0 or w <= 0:
        raise ValueError(f"mask shape must be positive, got {shape}")
    counts = np.asarray(counts, dtype=np.int64).reshape(-1)
    if counts.size and counts.min() < 0:
        raise ValueError("run-length counts must be non-negative")
    if counts.sum() != h * w:
        raise ValueError(
            f"run-length counts sum to {counts.sum()}, expected {h * w} for shape {shape}"
        )
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False  # runs start with zeros
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape((h, w), order="F")


def encode_rle(grid: np.ndarray) -> list[int]:
    """Inverse of :func:`decode_rle`; returns the column-major counts list."""
    flat = np.asarray(grid, dtype=bool).reshape(-1, order="F")
    counts: list[int] = []
    value = False
    run = 0
    for elem in flat:
        if elem == value:
            run += 1
        else:
            counts.append(run)
            value = bool(elem)
            run = 1
    counts.append(run)
    return counts


@dataclass(frozen=True)
class InstanceMask:
    """One 2D foreground instance: id, class label, and a nonempty binary grid.

    Pixel bounds (u_min, u_max, v_min, v_max) are derived from the grid on
    construction.
    """

    instance_id: int
    class_name: str
    grid: np.ndarray
    bounds: tuple[int, int, int, int] = None  # type: ignore[assignment]

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=bool)
        if grid.ndim != 2 or grid.shape[0] == 0 or grid.shape[1] == 0:
            raise ValueError(f"mask grid must be 2-D and nonempty, got shape {grid.shape}")
        vs, us = np.nonzero(grid)
        if vs.size == 0:
            raise ValueError(f"instance {self.instance_id}: mask has no set pixels")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(
            self, "bounds", (int(us.min()), int(us.max()), int(vs.min()), int(vs.max()))
        )

    @property
    def image_size(self) -> tuple[int, int]:
        """(H, W) of the underlying grid."""
        return self.grid.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class ShrunkMask:
    """A mask restricted to the central fraction of its pixel bounds.

    `retained` is the continuous (u_lo, u_hi, v_lo, v_hi) rectangle; `grid`
    is the source mask intersected with it. The grid may be empty, in which
    case the instance is dropped downstream.
    """

    source_id: int
    class_name: str
    retained: tuple[float, float, float, float]
    grid: np.ndarray

    @property
    def is_empty(self) -> bool:
        return not self.grid.any()

    @property
    def center_uv(self) -> tuple[float, float]:
        """Center of the retained rectangle, used to resolve pixel collisions."""
        u_lo, u_hi, v_lo, v_hi = self.retained
        return (u_lo + u_hi) / 2.0, (v_lo + v_hi) / 2.0


def shrink_mask(mask: InstanceMask, shrink_factor: float) -> ShrunkMask:
    """Keep only the central `shrink_factor` fraction of the mask's bounds.

    The retained u-interval is
    [u_min + (1-g)/2 * du, u_min + (1+g)/2 * du] with du = u_max - u_min
    (same for v), and the effective grid is the source mask intersected with
    that rectangle. shrink_factor = 1 keeps the mask unchanged.
    """
    if not 0.0 < shrink_factor <= 1.0:
        raise ValueError(f"shrink factor must be in (0, 1], got {shrink_factor}")
    u_min, u_max, v_min, v_max = mask.bounds
    du = u_max - u_min
    dv = v_max - v_min
    u_lo = u_min + 0.5 * (1.0 - shrink_factor) * du
    u_hi = u_min + 0.5 * (1.0 + shrink_factor) * du
    v_lo = v_min + 0.5 * (1.0 - shrink_factor) * dv
    v_hi = v_min + 0.5 * (1.0 + shrink_factor) * dv

    grid = np.zeros_like(mask.grid)
    ui0, ui1 = math.ceil(u_lo), math.floor(u_hi)
    vi0, vi1 = math.ceil(v_lo), math.floor(v_hi)
    if ui0 <= ui1 and vi0 <= vi1:
        grid[vi0 : vi1 + 1, ui0 : ui1 + 1] = mask.grid[vi0 : vi1 + 1, ui0 : ui1 + 1]
    return ShrunkMask(mask.instance_id, mask.class_name, (u_lo, u_hi, v_lo, v_hi), grid)
