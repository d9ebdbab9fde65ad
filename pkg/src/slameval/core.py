"""Geometric primitives and containers shared across the package.

Conventions:
    - Quaternions are stored (qx, qy, qz, qw), the order used by trajectory files.
    - World frame is right-handed with z up. A camera looks along its own +x.
    - A point ``p`` falls in voxel ``floor((p - origin) / cell_size)``, so each
      cell owns the half-open box ``[k*s, (k+1)*s)`` along every axis.

Every container is immutable: arrays are copied on construction and flagged
read-only, which makes sharing them between threads safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidInputError

IDENTITY_QUATERNION = (0.0, 0.0, 0.0, 1.0)
DEFAULT_CELL_SIZE = 0.05


def _frozen(a, dtype=np.float64, shape=None):
    arr = np.array(a, dtype=dtype, copy=True)
    if shape is not None:
        try:
            arr = arr.reshape(shape)
        except ValueError as exc:
            raise InvalidInputError(f"expected shape {shape}, got {np.shape(a)}") from exc
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# Quaternions and rotations


def normalize_quaternion(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise InvalidInputError(f"quaternion must be 4 finite values, got {q!r}")
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise InvalidInputError("zero-norm quaternion")
    return q / n


def quaternion_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion given as (x, y, z, w)."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise InvalidInputError(f"quaternion must be 4 finite values, got {q!r}")
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise InvalidInputError("zero-norm quaternion")
    if abs(n - 1.0) > 1e-6:
        raise InvalidInputError(f"quaternion is not unit (norm {n})")
    x, y, z, w = q / n
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
            [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
            [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
        ]
    )


def quaternions_to_matrices(qs) -> np.ndarray:
    """Vectorized :func:`quaternion_to_matrix` for an (N, 4) array of unit quaternions."""
    qs = np.asarray(qs, dtype=np.float64).reshape(-1, 4)
    x, y, z, w = qs.T
    out = np.empty((len(qs), 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def matrix_to_quaternion(R) -> np.ndarray:
    """Unit quaternion (x, y, z, w) of a rotation matrix, with w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidInputError("rotation must be a finite 3x3 matrix")
    tr = np.trace(R)
    # Shepperd: branch on the largest diagonal term for stability.
    if tr > 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [(R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s, 0.25 * s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s, (R[2, 1] - R[1, 2]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s, (R[0, 2] - R[2, 0]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s, (R[1, 0] - R[0, 1]) / s]
    q = np.array(q)
    if q[3] < 0:
        q = -q
    return q / np.linalg.norm(q)


def quaternion_multiply(a, b) -> np.ndarray:
    """Hamilton product a*b of (x, y, z, w) quaternions: rotate by b, then by a."""
    ax, ay, az, aw = np.asarray(a, dtype=np.float64)
    bx, by, bz, bw = np.asarray(b, dtype=np.float64)
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def yaw_quaternion(yaw: float) -> np.ndarray:
    """Rotation about +z by ``yaw`` radians."""
    return np.array([0.0, 0.0, math.sin(yaw / 2), math.cos(yaw / 2)])


def rotation_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# --------------------------------------------------------------------------
# Poses and trajectories


@dataclass(frozen=True)
class Pose:
    timestamp: float
    position: np.ndarray
    orientation: np.ndarray = field(default=IDENTITY_QUATERNION)

    def __post_init__(self):
        t = float(self.timestamp)
        if not math.isfinite(t) or t < 0:
            raise InvalidInputError(f"timestamp must be finite and non-negative, got {self.timestamp}")
        pos = _frozen(self.position, shape=(3,))
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("pose position must be finite")
        quat = normalize_quaternion(self.orientation)
        quat.setflags(write=False)
        object.__setattr__(self, "timestamp", t)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @property
    def rotation(self) -> np.ndarray:
        return quaternion_to_matrix(self.orientation)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and np.array_equal(self.position, other.position)
            and np.array_equal(self.orientation, other.orientation)
        )

    __hash__ = None


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered sequence of poses (strictly increasing timestamps)."""

    poses: tuple = ()

    def __post_init__(self):
        poses = tuple(self.poses)
        for p in poses:
            if not isinstance(p, Pose):
                raise InvalidInputError(f"trajectory entries must be Pose, got {type(p).__name__}")
        for i in range(1, len(poses)):
            if not poses[i].timestamp > poses[i - 1].timestamp:
                raise InvalidInputError(
                    f"timestamps must be strictly increasing (pose {i}: "
                    f"{poses[i].timestamp} after {poses[i - 1].timestamp})"
                )
        object.__setattr__(self, "poses", poses)

    @classmethod
    def from_arrays(cls, timestamps, positions, orientations=None) -> "Trajectory":
        timestamps = np.asarray(timestamps, dtype=np.float64).reshape(-1)
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        if orientations is None:
            orientations = np.tile(IDENTITY_QUATERNION, (len(timestamps), 1))
        orientations = np.asarray(orientations, dtype=np.float64).reshape(-1, 4)
        if not len(timestamps) == len(positions) == len(orientations):
            raise InvalidInputError("timestamps, positions and orientations differ in length")
        return cls(tuple(Pose(t, p, q) for t, p, q in zip(timestamps, positions, orientations)))

    def __len__(self):
        return len(self.poses)

    def __iter__(self) -> Iterator[Pose]:
        return iter(self.poses)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trajectory(self.poses[i])
        return self.poses[i]

    @cached_property
    def timestamps(self) -> np.ndarray:
        return _frozen([p.timestamp for p in self.poses], shape=(-1,))

    @cached_property
    def positions(self) -> np.ndarray:
        return _frozen([p.position for p in self.poses], shape=(-1, 3))

    @cached_property
    def orientations(self) -> np.ndarray:
        return _frozen([p.orientation for p in self.poses], shape=(-1, 4))

    @cached_property
    def rotations(self) -> np.ndarray:
        return _frozen(quaternions_to_matrices(self.orientations), shape=(-1, 3, 3))


# --------------------------------------------------------------------------
# Point clouds


class Point3(NamedTuple):
    x: float
    y: float
    z: float
    color: Optional[tuple] = None
    frame_id: Optional[int] = None


@dataclass(frozen=True)
class PointCloud:
    """Unordered 3D points (meters), optionally with RGB colors and frame tags.

    ``frame_ids`` holds the index of the observing pose for each point, or -1
    where the point is untagged.
    """

    xyz: np.ndarray
    colors: Optional[np.ndarray] = None
    frame_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        xyz = _frozen(self.xyz, shape=(-1, 3))
        if not np.all(np.isfinite(xyz)):
            raise InvalidInputError("point coordinates must be finite")
        object.__setattr__(self, "xyz", xyz)
        if self.colors is not None:
            colors = np.asarray(self.colors)
            if colors.size and (colors.min() < 0 or colors.max() > 255):
                raise InvalidInputError("colors must lie in 0..255")
            colors = _frozen(colors, dtype=np.uint8, shape=(-1, 3))
            if len(colors) != len(xyz):
                raise InvalidInputError("colors and points differ in length")
            object.__setattr__(self, "colors", colors)
        if self.frame_ids is not None:
            ids = _frozen(self.frame_ids, dtype=np.int64, shape=(-1,))
            if len(ids) != len(xyz):
                raise InvalidInputError("frame_ids and points differ in length")
            object.__setattr__(self, "frame_ids", ids)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))

    @classmethod
    def from_points(cls, points: Iterable[Point3]) -> "PointCloud":
        points = [p if isinstance(p, Point3) else Point3(*p) for p in points]
        xyz = np.array([[p.x, p.y, p.z] for p in points], dtype=np.float64).reshape(-1, 3)
        colors = None
        if points and any(p.color is not None for p in points):
            if not all(p.color is not None for p in points):
                raise InvalidInputError("either all points carry a color or none does")
            colors = [p.color for p in points]
        frame_ids = None
        if any(p.frame_id is not None for p in points):
            frame_ids = [-1 if p.frame_id is None else p.frame_id for p in points]
        return cls(xyz, colors, frame_ids)

    @property
    def count(self) -> int:
        return len(self.xyz)

    def __len__(self):
        return len(self.xyz)

    def __getitem__(self, i: int) -> Point3:
        x, y, z = (float(v) for v in self.xyz[i])
        color = None if self.colors is None else tuple(int(c) for c in self.colors[i])
        frame = None
        if self.frame_ids is not None and self.frame_ids[i] >= 0:
            frame = int(self.frame_ids[i])
        return Point3(x, y, z, color, frame)

    def __iter__(self) -> Iterator[Point3]:
        return (self[i] for i in range(len(self)))

    def select(self, index) -> "PointCloud":
        """Subset by boolean mask or integer indices, preserving order."""
        return PointCloud(
            self.xyz[index],
            None if self.colors is None else self.colors[index],
            None if self.frame_ids is None else self.frame_ids[index],
        )

    def with_xyz(self, xyz) -> "PointCloud":
        return PointCloud(xyz, self.colors, self.frame_ids)

    def with_frame_ids(self, frame_ids) -> "PointCloud":
        return PointCloud(self.xyz, self.colors, frame_ids)

    @staticmethod
    def concatenate(clouds: Sequence["PointCloud"]) -> "PointCloud":
        clouds = list(clouds)
        if not clouds:
            return PointCloud.empty()
        xyz = np.concatenate([c.xyz for c in clouds])
        colors = None
        if all(c.colors is not None for c in clouds):
            colors = np.concatenate([c.colors for c in clouds])
        frame_ids = None
        if any(c.frame_ids is not None for c in clouds):
            frame_ids = np.concatenate(
                [c.frame_ids if c.frame_ids is not None else np.full(len(c), -1) for c in clouds]
            )
        return PointCloud(xyz, colors, frame_ids)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return same(self.xyz, other.xyz) and same(self.colors, other.colors) and same(self.frame_ids, other.frame_ids)

    __hash__ = None


# --------------------------------------------------------------------------
# Voxel and occupancy grids


def _unique_rows(cells: np.ndarray) -> tuple:
    """Lexicographically sorted unique rows and the first-occurrence index of each."""
    if len(cells) == 0:
        return cells.reshape(0, cells.shape[1]), np.zeros(0, dtype=np.int64)
    uniq, first = np.unique(cells, axis=0, return_index=True)
    return uniq, first


@dataclass(frozen=True)
class VoxelGrid:
    """Sparse occupancy over a regular 3D lattice.

    ``cells`` is a (K, 3) integer array kept sorted and duplicate-free, so two
    grids with the same occupied set compare equal regardless of build order.
    """

    cell_size: float = DEFAULT_CELL_SIZE
    origin: np.ndarray = field(default=(0.0, 0.0, 0.0))
    cells: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        s = float(self.cell_size)
        if not (math.isfinite(s) and s > 0):
            raise InvalidInputError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "cell_size", s)
        object.__setattr__(self, "origin", _frozen(self.origin, shape=(3,)))
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 3)
        uniq, first = _unique_rows(cells)
        object.__setattr__(self, "cells", _frozen(uniq, dtype=np.int64, shape=(-1, 3)))
        if self.colors is not None:
            colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(colors) != len(cells):
                raise InvalidInputError("colors and cells differ in length")
            object.__setattr__(self, "colors", _frozen(colors[first], dtype=np.uint8, shape=(-1, 3)))

    @classmethod
    def from_points(cls, xyz, cell_size=DEFAULT_CELL_SIZE, origin=(0.0, 0.0, 0.0), colors=None) -> "VoxelGrid":
        """Voxelize points; when colors are given the first point in each cell wins."""
        origin = np.asarray(origin, dtype=np.float64)
        cells = cell_index(xyz, cell_size, origin)
        return cls(cell_size, origin, cells, colors)

    def __len__(self):
        return len(self.cells)

    @cached_property
    def cell_set(self) -> frozenset:
        return frozenset(map(tuple, self.cells.tolist()))

    def __contains__(self, cell) -> bool:
        return tuple(int(c) for c in cell) in self.cell_set

    @cached_property
    def dense(self) -> tuple:
        """(lowest occupied index, boolean array over the occupied bounding box)."""
        if len(self.cells) == 0:
            return np.zeros(3, dtype=np.int64), np.zeros((0, 0, 0), dtype=bool)
        lo = self.cells.min(axis=0)
        occ = np.zeros(tuple(self.cells.max(axis=0) - lo + 1), dtype=bool)
        occ[tuple((self.cells - lo).T)] = True
        occ.setflags(write=False)
        return lo, occ

    def centers(self) -> np.ndarray:
        return self.origin + (self.cells + 0.5) * self.cell_size

    def cell_of(self, xyz) -> np.ndarray:
        return cell_index(xyz, self.cell_size, self.origin)

    def union(self, other: "VoxelGrid") -> "VoxelGrid":
        """Set union; where both grids color a cell, this grid's color wins."""
        if other.cell_size != self.cell_size or not np.array_equal(other.origin, self.origin):
            raise InvalidInputError("cannot union grids on different lattices")
        cells = np.concatenate([self.cells, other.cells])
        colors = None
        if self.colors is not None and other.colors is not None:
            colors = np.concatenate([self.colors, other.colors])
        return VoxelGrid(self.cell_size, self.origin, cells, colors)

    def to_cloud(self) -> PointCloud:
        return PointCloud(self.centers(), self.colors)

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None


def cell_index(xyz, cell_size, origin) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    return np.floor((xyz - np.asarray(origin, dtype=np.float64)) / cell_size).astype(np.int64)


def voxelize(cloud: PointCloud, cell_size=DEFAULT_CELL_SIZE, origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    return VoxelGrid.from_points(cloud.xyz, cell_size, origin, cloud.colors)


def voxel_downsample(cloud: PointCloud, cell_size=DEFAULT_CELL_SIZE, origin=(0.0, 0.0, 0.0)) -> PointCloud:
    """Keep the first point (in input order) that falls in each occupied cell."""
    if len(cloud) == 0:
        return cloud
    _, first = _unique_rows(cell_index(cloud.xyz, cell_size, origin))
    return cloud.select(np.sort(first))


@dataclass(frozen=True)
class OccupancyGrid2D:
    """Boolean ground-plane grid; ``cells`` are absolute (i, j) lattice indices."""

    cell_size: float
    origin: np.ndarray = field(default=(0.0, 0.0))
    cells: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    width: Optional[int] = None
    height: Optional[int] = None

    def __post_init__(self):
        s = float(self.cell_size)
        if not (math.isfinite(s) and s > 0):
            raise InvalidInputError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "cell_size", s)
        object.__setattr__(self, "origin", _frozen(self.origin, shape=(2,)))
        cells, _ = _unique_rows(np.asarray(self.cells, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "cells", _frozen(cells, dtype=np.int64, shape=(-1, 2)))
        w, h = self._extents()
        width = w if self.width is None else int(self.width)
        height = h if self.height is None else int(self.height)
        if width < w or height < h:
            raise InvalidInputError(f"{width}x{height} grid cannot hold a {w}x{h} occupied extent")
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "height", height)

    def _extents(self):
        if len(self.cells) == 0:
            return 0, 0
        span = self.cells.max(axis=0) - self.cells.min(axis=0) + 1
        return int(span[0]), int(span[1])

    @property
    def min_cell(self) -> tuple:
        if len(self.cells) == 0:
            return (0, 0)
        lo = self.cells.min(axis=0)
        return int(lo[0]), int(lo[1])

    @cached_property
    def cell_set(self) -> frozenset:
        return frozenset(map(tuple, self.cells.tolist()))

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid2D):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None


# --------------------------------------------------------------------------
# Rigid (similarity) transforms


@dataclass(frozen=True)
class RigidTransform:
    """x -> scale * rotation @ x + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default=(0.0, 0.0, 0.0))
    scale: float = 1.0

    def __post_init__(self):
        R = _frozen(self.rotation, shape=(3, 3))
        t = _frozen(self.translation, shape=(3,))
        s = float(self.scale)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t)) and math.isfinite(s)):
            raise InvalidInputError("transform entries must be finite")
        if s <= 0:
            raise InvalidInputError(f"scale must be positive, got {s}")
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or np.linalg.det(R) <= 0:
            raise InvalidInputError("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "scale", s)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    def apply(self, xyz) -> np.ndarray:
        xyz = np.asarray(xyz, dtype=np.float64)
        return self.scale * xyz @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -(Rt @ self.translation) / self.scale, 1.0 / self.scale)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.scale * self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying ``b`` first, then ``a``."""
    R = a.rotation @ b.rotation
    # Re-orthonormalize so long chains stay within the RigidTransform invariant.
    u, _, vt = np.linalg.svd(R)
    R = u @ vt
    return RigidTransform(R, a.scale * (a.rotation @ b.translation) + a.translation, a.scale * b.scale)


# --------------------------------------------------------------------------
# Associations


@dataclass(frozen=True)
class Association:
    """Matches from predicted-map point indices to ground-truth points.

    ``pred_indices[k]`` is matched with ``matched[k]``; ``unmatched`` lists the
    predicted indices that found no partner. ``gt_indices`` is filled by
    associations that pick an existing ground-truth point (nearest neighbor).
    """

    pred_indices: np.ndarray
    matched: np.ndarray
    unmatched: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    gt_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        idx = _frozen(self.pred_indices, dtype=np.int64, shape=(-1,))
        matched = _frozen(self.matched, shape=(-1, 3))
        unmatched = _frozen(np.sort(np.asarray(self.unmatched, dtype=np.int64).reshape(-1)), dtype=np.int64)
        if len(idx) != len(matched):
            raise InvalidInputError("pred_indices and matched differ in length")
        both = np.concatenate([idx, unmatched])
        if len(np.unique(both)) != len(both):
            raise InvalidInputError("a predicted index appears more than once in the association")
        object.__setattr__(self, "pred_indices", idx)
        object.__setattr__(self, "matched", matched)
        object.__setattr__(self, "unmatched", unmatched)
        if self.gt_indices is not None:
            gt = _frozen(self.gt_indices, dtype=np.int64, shape=(-1,))
            if len(gt) != len(idx):
                raise InvalidInputError("gt_indices and pred_indices differ in length")
            object.__setattr__(self, "gt_indices", gt)

    @property
    def matched_count(self) -> int:
        return len(self.pred_indices)

    @property
    def miss_count(self) -> int:
        return len(self.unmatched)

    @property
    def pairs(self) -> list:
        return [(int(i), Point3(*map(float, m))) for i, m in zip(self.pred_indices, self.matched)]
