"""Synthetic rooms, camera paths, rendered depth and perturbed "SLAM output".

Everything here is a pure function of its spec and seed; randomness comes
from numpy's PCG64 generator (``numpy.random.default_rng``).

Spec files are flat ``key = value`` text, ``#`` comments allowed::

    room = 3.0 2.5 1.5          # extents in meters
    box = 1.0 1.0 0.0 1.4 1.6 0.8   # repeatable obstacle, min and max corner
    seed = 7
    width = 32
    height = 24
    trans_sigma = 0.01          # per-step random walk, meters
    scale = 1.0
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import binary_dilation

from .core import (
    DEFAULT_CELL_SIZE,
    PointCloud,
    Pose,
    Trajectory,
    VoxelGrid,
    quaternion_multiply,
    rotation_z,
    yaw_quaternion,
)
from .errors import InvalidInputError, InvalidPoseError, ParseError
from .gtmap import DepthFrame, build_gt_cloud, build_gt_map, camera_rays, project_to_2d
from .raycast import raycast_batch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SceneSpec:
    extents: tuple = (2.0, 2.0, 1.5)
    wall_thickness: int = 1
    boxes: tuple = ()
    seed: int = 0
    cell_size: float = DEFAULT_CELL_SIZE
    random_boxes: int = 0

    def __post_init__(self):
        ext = tuple(float(v) for v in self.extents)
        if len(ext) != 3 or not all(math.isfinite(v) and v > 0 for v in ext):
            raise InvalidInputError(f"room extents must be three positive values, got {self.extents}")
        object.__setattr__(self, "extents", ext)
        if int(self.wall_thickness) < 1:
            raise InvalidInputError("wall_thickness must be at least one cell")
        if not self.cell_size > 0:
            raise InvalidInputError("cell_size must be positive")
        boxes = []
        for box in self.boxes:
            lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
            if lo.shape != (3,) or hi.shape != (3,) or np.any(lo >= hi) or np.any(lo < 0) or np.any(hi > ext):
                raise InvalidInputError(f"box {box} must be non-empty and inside the room")
            boxes.append((tuple(lo), tuple(hi)))
        object.__setattr__(self, "boxes", tuple(boxes))


@dataclass(frozen=True)
class NoiseSpec:
    trans_sigma: float = 0.0
    yaw_sigma: float = 0.0
    scale: float = 1.0
    depth_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.trans_sigma, self.yaw_sigma, self.depth_sigma) < 0:
            raise InvalidInputError("noise sigmas must be non-negative")
        if not self.scale > 0:
            raise InvalidInputError("scale must be positive")

    @property
    def is_zero(self) -> bool:
        return self.trans_sigma == 0 and self.yaw_sigma == 0 and self.depth_sigma == 0 and self.scale == 1


@dataclass(frozen=True)
class RenderSpec:
    width: int = 32
    height: int = 24
    max_range: float = 10.0
    waypoints: int = 4
    speed: float = 0.5
    rate: float = 10.0
    camera_height: Optional[float] = None
    margin: float = 0.25


# --------------------------------------------------------------------------
# Scenes


def _cells_per_axis(spec: SceneSpec) -> np.ndarray:
    n = np.array([int(round(e / spec.cell_size)) for e in spec.extents])
    if np.any(n < 2 * spec.wall_thickness + 1):
        raise InvalidInputError(f"room {spec.extents} too small for walls of {spec.wall_thickness} cells")
    return n


def _random_boxes(spec: SceneSpec) -> list:
    rng = np.random.default_rng(spec.seed)
    ext = np.array(spec.extents)
    boxes = []
    for _ in range(spec.random_boxes):
        size = np.array([*(rng.uniform(0.15, 0.35, 2) * ext[:2]), rng.uniform(0.2, 0.6) * ext[2]])
        lo = np.array([*rng.uniform(0, 1, 2) * (ext[:2] - size[:2]), 0.0])
        boxes.append((tuple(lo), tuple(lo + size)))
    return boxes


def gen_scene(spec: SceneSpec) -> VoxelGrid:
    """Closed box room (walls, floor, ceiling) plus obstacle boxes, origin at (0, 0, 0)."""
    n = _cells_per_axis(spec)
    th = spec.wall_thickness
    idx = np.indices(tuple(n)).reshape(3, -1).T
    solid = np.any((idx < th) | (idx >= n - th), axis=1)
    centers = (idx + 0.5) * spec.cell_size
    for lo, hi in list(spec.boxes) + _random_boxes(spec):
        solid |= np.all((centers >= lo) & (centers < hi), axis=1)
    return VoxelGrid(spec.cell_size, (0.0, 0.0, 0.0), idx[solid])


def is_free(grid: VoxelGrid, xyz) -> np.ndarray:
    cells = grid.cell_of(xyz)
    occ = grid.cell_set
    return np.array([tuple(c) not in occ for c in cells.tolist()], dtype=bool)


# --------------------------------------------------------------------------
# Camera paths


def gen_trajectory(scene: VoxelGrid, spec: SceneSpec, render: RenderSpec = RenderSpec(), seed: Optional[int] = None) -> Trajectory:
    """Smooth path through random free waypoints, sampled at ``render.rate`` Hz.

    The camera keeps a constant height, moves at ``render.speed`` and faces
    its direction of motion (yaw only). Waypoints and path keep at least
    ``render.margin`` meters from any occupied cell.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    ext = np.array(spec.extents)
    z = render.camera_height if render.camera_height is not None else min(1.0, ext[2] / 2)
    if not 0 < z < ext[2]:
        raise InvalidInputError(f"camera height {z} outside the room")
    clearance = max(0, math.ceil(render.margin / scene.cell_size))
    lo, occ = scene.dense
    blocked = binary_dilation(occ, iterations=clearance) if clearance else occ

    def clear(points):
        c = scene.cell_of(points) - lo
        inside = np.all((c >= 0) & (c < np.array(blocked.shape)), axis=1)
        ok = np.ones(len(c), dtype=bool)
        ok[inside] = ~blocked[c[inside, 0], c[inside, 1], c[inside, 2]]
        return ok

    lo_xy, hi_xy = np.full(2, render.margin), ext[:2] - render.margin
    if np.any(hi_xy <= lo_xy):
        raise InvalidInputError("room too small for the requested margin")
    step = render.speed / render.rate
    for _ in range(500):
        wp = rng.uniform(lo_xy, hi_xy, size=(max(2, render.waypoints), 2))
        seg = np.linalg.norm(np.diff(wp, axis=0), axis=1)
        if np.any(seg < 0.2):
            continue
        u = np.concatenate([[0.0], np.cumsum(seg)])
        path = PchipInterpolator(u, wp)
        fine_u = np.linspace(0.0, u[-1], max(200, int(u[-1] / step * 20)))
        fine = path(fine_u)
        arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(fine, axis=0), axis=1))])
        if arc[-1] < 2 * step:
            continue
        s = np.arange(0.0, arc[-1], step)
        us = np.interp(s, arc, fine_u)
        xy = path(us)
        pts = np.column_stack([xy, np.full(len(xy), z)])
        dense_pts = np.column_stack([fine, np.full(len(fine), z)])
        if not (clear(pts).all() and clear(dense_pts).all()):
            continue
        tangent = path.derivative()(us)
        yaw = np.arctan2(tangent[:, 1], tangent[:, 0])
        quats = np.array([yaw_quaternion(a) for a in yaw])
        return Trajectory.from_arrays(np.arange(len(pts)) / render.rate, pts, quats)
    raise InvalidInputError("could not place a collision-free path in this scene")


# --------------------------------------------------------------------------
# Rendering


def render_depth(scene: VoxelGrid, pose: Pose, width: int, height: int, max_range: float) -> DepthFrame:
    """Depth image of ``scene`` from ``pose``; NaN where nothing is hit within range.

    Each depth is the midpoint of the ray's chord through the first occupied
    cell, so back-projecting it lands inside that cell; rays that only graze
    a cell edge get no depth.
    """
    if tuple(scene.cell_of(pose.position)[0]) in scene.cell_set:
        raise InvalidPoseError(f"camera at {pose.position.tolist()} is inside an occupied cell")
    rays = (camera_rays(width, height) @ pose.rotation.T).reshape(-1, 3)
    origins = np.broadcast_to(pose.position, rays.shape)
    hit, cells, alpha, exit_ = raycast_batch(scene, origins, rays, max_range)
    depth = np.full(len(rays), np.nan)
    depth[hit] = 0.5 * (alpha[hit] + exit_[hit])
    depth[depth > max_range] = np.nan
    # A ray grazing a cell edge has a near-zero chord and its midpoint can round
    # into a neighbor cell; such pixels are left without depth.
    ok = np.isfinite(depth)
    landed = scene.cell_of(origins[ok] + depth[ok, None] * rays[ok])
    grazing = np.nonzero(ok)[0][np.any(landed != cells[ok], axis=1)]
    if len(grazing):
        log.debug("dropped %d grazing pixels", len(grazing))
        depth[grazing] = np.nan
    return DepthFrame(depth.reshape(height, width), pose, max_range)


def render_sequence(scene: VoxelGrid, traj: Trajectory, width: int, height: int, max_range: float) -> list:
    return [render_depth(scene, p, width, height, max_range) for p in traj]


# --------------------------------------------------------------------------
# Perturbation


def perturb(traj: Trajectory, cloud: PointCloud, noise: NoiseSpec):
    """Estimate-like copies of a trajectory and its map.

    Pose error accumulates as a random walk in yaw and translation; frame t
    is mapped by ``x -> p0 + scale * (Rz(yaw_t) (x - p0) + drift_t)`` with
    ``p0`` the first position. Map points move with the transform of the frame
    that observed them (untagged points with frame 0's), after an optional
    range jitter along their viewing ray.
    """
    if noise.is_zero:
        return traj, cloud
    if len(traj) == 0:
        raise InvalidInputError("trajectory is empty")
    rng = np.random.default_rng(noise.seed)
    n = len(traj)
    yaw = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, noise.yaw_sigma, n - 1))]) if noise.yaw_sigma else np.zeros(n)
    drift = np.zeros((n, 3))
    if noise.trans_sigma:
        drift[1:] = np.cumsum(rng.normal(0.0, noise.trans_sigma, (n - 1, 3)), axis=0)
    p0 = traj.positions[0]
    rots = np.array([rotation_z(a) for a in yaw])

    def move(x, f):
        return p0 + noise.scale * (np.einsum("nij,nj->ni", rots[f], x - p0) + drift[f])

    frames = np.arange(n)
    new_pos = move(traj.positions, frames)
    poses = tuple(
        Pose(p.timestamp, new_pos[i], quaternion_multiply(yaw_quaternion(yaw[i]), p.orientation))
        for i, p in enumerate(traj)
    )

    xyz = cloud.xyz.copy()
    fid = np.zeros(len(cloud), dtype=np.int64)
    if cloud.frame_ids is not None:
        tagged = (cloud.frame_ids >= 0) & (cloud.frame_ids < n)
        fid[tagged] = cloud.frame_ids[tagged]
        if noise.depth_sigma and tagged.any():
            v = xyz[tagged] - traj.positions[fid[tagged]]
            r = np.linalg.norm(v, axis=1, keepdims=True)
            jitter = rng.normal(0.0, noise.depth_sigma, (len(v), 1))
            xyz[tagged] += np.divide(v, r, out=np.zeros_like(v), where=r > 0) * jitter
    new_cloud = cloud.with_xyz(move(xyz, fid)) if len(cloud) else cloud
    return Trajectory(poses), new_cloud


# --------------------------------------------------------------------------
# Bundles


@dataclass
class SynthBundle:
    scene: VoxelGrid
    gt_traj: Trajectory
    frames: list
    gt_grid: VoxelGrid
    gt_cloud: PointCloud
    est_traj: Trajectory
    est_cloud: PointCloud


def make_bundle(scene_spec: SceneSpec, render: RenderSpec = RenderSpec(), noise: NoiseSpec = NoiseSpec()) -> SynthBundle:
    """Scene, path, rendered frames, ground-truth map and a (possibly perturbed) estimate.

    The ground-truth cloud keeps the first observed surface point per cell,
    tagged with its frame. With zero noise the estimate equals the ground
    truth exactly.
    """
    scene = gen_scene(scene_spec)
    traj = gen_trajectory(scene, scene_spec, render)
    frames = render_sequence(scene, traj, render.width, render.height, render.max_range)
    grid = build_gt_map(frames, scene_spec.cell_size)
    cloud = build_gt_cloud(frames, scene_spec.cell_size)
    est_traj, est_cloud = perturb(traj, cloud, noise)
    return SynthBundle(scene, traj, frames, grid, cloud, est_traj, est_cloud)


_SCENE_KEYS = {"room", "wall_thickness", "box", "seed", "cell_size", "random_boxes"}
_RENDER_KEYS = {"width", "height", "max_range", "waypoints", "speed", "rate", "camera_height", "margin"}
_NOISE_KEYS = {"trans_sigma", "yaw_sigma", "scale", "depth_sigma", "noise_seed"}
_INT_KEYS = {"wall_thickness", "seed", "random_boxes", "width", "height", "waypoints", "noise_seed"}


def parse_synth_spec(text: str):
    """Parse a ``key = value`` spec into (SceneSpec, RenderSpec, NoiseSpec)."""
    scene, render, noise = {}, {}, {}
    boxes = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        key, value = (s.strip() for s in line.split("=", 1))
        parts = value.split()
        try:
            if key in _INT_KEYS:
                if len(parts) != 1:
                    raise ValueError
                val = int(parts[0])
            else:
                val = [float(p) for p in parts]
                if not val or not all(math.isfinite(v) for v in val):
                    raise ValueError
        except ValueError:
            raise ParseError(f"bad value for {key!r}: {value!r}", line=n) from None
        if key == "room":
            if len(val) != 3:
                raise ParseError("room needs three extents", line=n)
            scene["extents"] = tuple(val)
        elif key == "box":
            if len(val) != 6:
                raise ParseError("box needs six numbers: min corner then max corner", line=n)
            boxes.append((tuple(val[:3]), tuple(val[3:])))
        elif key in _SCENE_KEYS | _RENDER_KEYS | _NOISE_KEYS:
            if isinstance(val, list):
                if len(val) != 1:
                    raise ParseError(f"{key} takes a single value", line=n)
                val = val[0]
            if key in _SCENE_KEYS:
                scene[key] = val
            elif key in _RENDER_KEYS:
                render[key] = val
            else:
                noise["seed" if key == "noise_seed" else key] = val
        else:
            raise ParseError(f"unknown key {key!r}", line=n)
    if boxes:
        scene["boxes"] = tuple(boxes)
    try:
        return SceneSpec(**scene), RenderSpec(**render), NoiseSpec(**noise)
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from exc


def write_bundle(bundle: SynthBundle, out_dir) -> list:
    """Write a bundle as files; returns the written paths in creation order."""
    from .io import save_cloud, save_trajectory, write_grid_pgm

    out = Path(out_dir)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    written = []

    def track(p):
        written.append(p)
        return p

    save_cloud(bundle.scene.to_cloud(), track(out / "scene.pcd"))
    save_trajectory(bundle.gt_traj, track(out / "gt_traj.txt"))
    save_trajectory(bundle.est_traj, track(out / "est_traj.txt"))
    save_cloud(bundle.gt_cloud, track(out / "gt_map.pcd"))
    save_cloud(bundle.est_cloud, track(out / "est_map.pcd"))
    with open(track(out / "gt_map_2d.pgm"), "w", encoding="utf-8", newline="\n") as f:
        write_grid_pgm(project_to_2d(bundle.gt_grid), f)
    for i, frame in enumerate(bundle.frames):
        np.save(track(out / "depth" / f"frame_{i:05d}.npy"), frame.depth)
    return written
