"""Ground-truth maps from depth frames by back-projection, and 2D projection.

The camera model has no intrinsics beyond the image size: pixel (h, w) looks
along ``R @ (1, (w - W/2)/(W/2), (h - H/2)/(H/2))`` with ``R`` the camera
orientation, i.e. a fixed 90 degree half-angle across both image axes.
The ray is normalized and depth is taken as the range along it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_CELL_SIZE,
    OccupancyGrid2D,
    PointCloud,
    Pose,
    VoxelGrid,
    voxel_downsample,
)
from .errors import InvalidInputError, ParseError
from .io import read_depth_pgm

log = logging.getLogger(__name__)

DEFAULT_MAX_RANGE = 10.0


@dataclass(frozen=True)
class DepthFrame:
    """Depth image in meters (NaN/inf/<=0 mark invalid pixels) seen from ``pose``."""

    depth: np.ndarray
    pose: Pose
    max_range: float = DEFAULT_MAX_RANGE
    rgb: Optional[np.ndarray] = None

    def __post_init__(self):
        depth = np.array(self.depth, dtype=np.float64)
        if depth.ndim != 2 or depth.shape[0] < 1 or depth.shape[1] < 1:
            raise InvalidInputError(f"depth must be a non-empty HxW array, got shape {depth.shape}")
        depth.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        if not self.max_range > 0:
            raise InvalidInputError("max_range must be positive")
        if self.rgb is not None:
            rgb = np.array(self.rgb, dtype=np.uint8)
            if rgb.shape != depth.shape + (3,):
                raise InvalidInputError("rgb image must be HxWx3 matching the depth image")
            rgb.setflags(write=False)
            object.__setattr__(self, "rgb", rgb)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


def camera_ray(width, height, h, w) -> np.ndarray:
    """Unit ray in the camera frame for (possibly fractional) pixel coordinates."""
    v = np.array([1.0, (w - width / 2) / (width / 2), (h - height / 2) / (height / 2)])
    return v / np.linalg.norm(v)


def camera_rays(width: int, height: int) -> np.ndarray:
    """(H, W, 3) unit camera-frame rays for every integer pixel."""
    hh, ww = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    v = np.stack(
        [np.ones_like(hh), (ww - width / 2) / (width / 2), (hh - height / 2) / (height / 2)], axis=-1
    )
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def pixel_ray(frame: DepthFrame, h: int, w: int) -> np.ndarray:
    """World-frame unit ray through pixel (h, w) of ``frame``."""
    if not (0 <= h < frame.height and 0 <= w < frame.width):
        raise IndexError(f"pixel ({h}, {w}) outside {frame.height}x{frame.width} image")
    return frame.pose.rotation @ camera_ray(frame.width, frame.height, h, w)


def pixel_rays(frame: DepthFrame) -> np.ndarray:
    """World-frame unit rays for every pixel, shape (H, W, 3)."""
    return camera_rays(frame.width, frame.height) @ frame.pose.rotation.T


def backproject_frame(frame: DepthFrame, frame_id: int = 0) -> PointCloud:
    """One point ``p + d * r`` per valid pixel, in row-major pixel order."""
    d = frame.depth
    valid = np.isfinite(d) & (d > 0) & (d <= frame.max_range)
    rays = pixel_rays(frame)[valid]
    xyz = frame.pose.position + d[valid][:, None] * rays
    skipped = d.size - int(valid.sum())
    if skipped:
        log.debug("frame %d: skipped %d of %d pixels", frame_id, skipped, d.size)
    colors = frame.rgb[valid] if frame.rgb is not None else None
    return PointCloud(xyz, colors, np.full(len(xyz), frame_id, dtype=np.int64))


def backproject_frames(frames: Sequence[DepthFrame]) -> PointCloud:
    """Concatenated back-projections, each point tagged with its frame's position in ``frames``."""
    frames = list(frames)
    if not frames:
        raise InvalidInputError("at least one depth frame is required")
    return PointCloud.concatenate([backproject_frame(f, i) for i, f in enumerate(frames)])


def build_gt_map(frames: Sequence[DepthFrame], cell_size: float = DEFAULT_CELL_SIZE, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    """Voxelized union of all back-projections.

    Occupancy does not depend on frame order. Cell colors come from the first
    point written into the cell, scanning frames in the given order.
    """
    cloud = backproject_frames(frames)
    return VoxelGrid.from_points(cloud.xyz, cell_size, origin, cloud.colors)


def build_gt_cloud(frames: Sequence[DepthFrame], cell_size: float = DEFAULT_CELL_SIZE, origin=(0.0, 0.0, 0.0)) -> PointCloud:
    """One observed surface point per occupied cell (the first one written), frame-tagged.

    Voxelizing the result at ``cell_size`` gives exactly :func:`build_gt_map`.
    """
    return voxel_downsample(backproject_frames(frames), cell_size, origin)


def project_to_2d(grid: VoxelGrid) -> OccupancyGrid2D:
    """Drop the vertical axis: (i, j) is occupied iff some (i, j, k) is."""
    return OccupancyGrid2D(grid.cell_size, grid.origin[:2], grid.cells[:, :2])


def load_depth_image(path) -> np.ndarray:
    """Depth in meters from ``.npy`` (float meters) or ``.pgm`` (16-bit millimeters)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        try:
            depth = np.load(path, allow_pickle=False)
        except ValueError as exc:
            raise ParseError(f"{path}: not a valid .npy array") from exc
        if depth.ndim != 2 or not np.issubdtype(depth.dtype, np.number):
            raise ParseError(f"{path}: expected a 2D numeric array")
        return depth.astype(np.float64)
    if suffix == ".pgm":
        with open(path, "rb") as f:
            return read_depth_pgm(f)
    raise ParseError(f"{path}: unsupported depth format {suffix!r}")


def list_depth_files(directory) -> list:
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".npy", ".pgm"))
    if not files:
        raise InvalidInputError(f"no .npy or .pgm depth images in {directory}")
    return files
