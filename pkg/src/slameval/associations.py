"""Point correspondences between a predicted map and the ground-truth map.

Two association rules are provided:

* nearest neighbor: each predicted point goes to its closest ground-truth
  point (Euclidean, ties to the lowest ground-truth index);
* trajectory-aware ray casting: the direction from the predicted camera to a
  predicted point is carried over to the ground-truth camera at the same
  moment, and the point is matched with the first ground-truth cell along that
  ray.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .alignment import DEFAULT_MAX_DT, pair_indices
from .core import Association, PointCloud, Trajectory, VoxelGrid
from .errors import InvalidInputError, UnresolvedFrameError
from .raycast import raycast_batch

BRUTE_FORCE_BELOW = 256
_CHUNK = 4096
_TIE_RTOL = 1e-9


def _sqdist(points, candidates):
    """Squared distances from one point to each candidate row; shared by every NN path."""
    diff = candidates - points
    return np.einsum("ij,ij->i", diff, diff)


def _nn_brute(pred_xyz, gt_xyz):
    out = np.empty(len(pred_xyz), dtype=np.int64)
    for start in range(0, len(pred_xyz), _CHUNK):
        p = pred_xyz[start:start + _CHUNK]
        diff = p[:, None, :] - gt_xyz[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:start + _CHUNK] = np.argmin(d2, axis=1)
    return out


def _nn_tree(pred_xyz, gt_xyz):
    tree = cKDTree(gt_xyz)
    dd, ii = tree.query(pred_xyz, k=2)
    best = ii[:, 0].astype(np.int64)
    # The tree may order near-equal distances arbitrarily; settle those exactly.
    ambiguous = np.nonzero(dd[:, 1] <= dd[:, 0] * (1 + _TIE_RTOL) + 1e-12)[0]
    for k in ambiguous:
        r = dd[k, 0] * (1 + _TIE_RTOL) + 1e-12
        cand = np.array(sorted(tree.query_ball_point(pred_xyz[k], r)), dtype=np.int64)
        d2 = _sqdist(pred_xyz[k], gt_xyz[cand])
        best[k] = cand[np.argmin(d2)]
    return best


def nn_indices(pred_xyz, gt_xyz) -> np.ndarray:
    """Index of the nearest ground-truth point for every predicted point."""
    pred_xyz = np.asarray(pred_xyz, dtype=np.float64).reshape(-1, 3)
    gt_xyz = np.asarray(gt_xyz, dtype=np.float64).reshape(-1, 3)
    if len(gt_xyz) == 0:
        raise InvalidInputError("ground-truth cloud is empty")
    if len(pred_xyz) == 0:
        return np.zeros(0, dtype=np.int64)
    if len(gt_xyz) < BRUTE_FORCE_BELOW:
        return _nn_brute(pred_xyz, gt_xyz)
    return _nn_tree(pred_xyz, gt_xyz)


def nn_associate(pred: PointCloud, gt: PointCloud) -> Association:
    if len(gt) == 0:
        raise InvalidInputError("ground-truth cloud is empty")
    if len(pred) == 0:
        raise InvalidInputError("predicted cloud is empty")
    idx = nn_indices(pred.xyz, gt.xyz)
    return Association(np.arange(len(pred)), gt.xyz[idx], gt_indices=idx)


def ray_directions(pred_xyz, pred_pos, pred_rot, gt_rot, swap_rotation=False) -> np.ndarray:
    """Unnormalized ray directions in the ground-truth frame.

    Default order is ``inv(R_pred) @ R_gt @ (m - p_pred)``; ``swap_rotation``
    uses ``R_gt @ inv(R_pred) @ (m - p_pred)`` instead. For rotations about a
    common axis (e.g. yaw-only robots) the two coincide.
    """
    v = np.asarray(pred_xyz) - pred_pos
    if swap_rotation:
        cam = np.einsum("nji,nj->ni", pred_rot, v)        # R_pred^T v
        return np.einsum("nij,nj->ni", gt_rot, cam)       # R_gt (...)
    w = np.einsum("nij,nj->ni", gt_rot, v)                # R_gt v
    return np.einsum("nji,nj->ni", pred_rot, w)           # R_pred^T (...)


def raycast_associate(
    pred: PointCloud,
    pred_traj: Trajectory,
    gt_traj: Trajectory,
    gt_map: VoxelGrid,
    max_range: float,
    max_dt: float = DEFAULT_MAX_DT,
    swap_rotation: bool = False,
) -> Association:
    """Associate each predicted point with the first ground-truth cell its ray meets.

    Every point must carry a ``frame_id`` indexing ``pred_traj`` whose pose has
    a timestamp partner in ``gt_traj``. The matched point is the hit cell's
    center; points whose ray meets nothing within ``max_range`` (or that
    coincide with their camera) are returned as unmatched.
    """
    if len(gt_map) == 0:
        raise InvalidInputError("ground-truth map is empty")
    if not max_range > 0:
        raise InvalidInputError("max_range must be positive")
    n = len(pred)
    if n == 0:
        return Association(np.zeros(0), np.zeros((0, 3)))
    if pred.frame_ids is None:
        raise UnresolvedFrameError("predicted points carry no frame ids", range(n))

    gt_for_est = np.full(len(pred_traj), -1, dtype=np.int64)
    for g, e in pair_indices(gt_traj, pred_traj, max_dt):
        gt_for_est[e] = g
    fid = pred.frame_ids
    in_range = (fid >= 0) & (fid < len(pred_traj))
    resolvable = in_range.copy()
    resolvable[in_range] = gt_for_est[fid[in_range]] >= 0
    if not resolvable.all():
        bad = np.nonzero(~resolvable)[0]
        shown = ", ".join(str(i) for i in bad[:20]) + (" ..." if len(bad) > 20 else "")
        raise UnresolvedFrameError(
            f"{len(bad)} predicted points reference frames without a ground-truth pose: {shown}", bad
        )

    gid = gt_for_est[fid]
    dirs = ray_directions(
        pred.xyz, pred_traj.positions[fid], pred_traj.rotations[fid], gt_traj.rotations[gid], swap_rotation
    )
    hit, cells, _, _ = raycast_batch(gt_map, gt_traj.positions[gid], dirs, max_range)
    idx = np.nonzero(hit)[0]
    centers = gt_map.origin + (cells[idx] + 0.5) * gt_map.cell_size
    return Association(idx, centers, np.nonzero(~hit)[0])


def remove_floor(cloud: PointCloud, z_threshold: float) -> PointCloud:
    """Drop points with z <= ``z_threshold``; order of the rest is preserved."""
    if not np.isfinite(z_threshold):
        raise InvalidInputError("floor threshold must be finite")
    return cloud.select(cloud.xyz[:, 2] > z_threshold)


def floor_threshold(traj: Trajectory, mounting_height: float = 0.0, margin: float = 0.1) -> float:
    """Floor cut height: lowest camera z, minus the camera's mounting height, plus ``margin``."""
    if len(traj) == 0:
        raise InvalidInputError("trajectory is empty")
    return float(traj.positions[:, 2].min() - mounting_height + margin)


def infer_frame_ids(pred: PointCloud, pred_traj: Trajectory, fov_check: bool = True, return_flags: bool = False):
    """Tag untagged points (no frame id, or -1) with the closest observing pose.

    With ``fov_check`` only poses that have the point in front of the camera
    (positive component along the optical axis) are eligible. A point in front
    of no camera falls back to the closest pose and is flagged. Existing tags
    are kept. With ``return_flags`` the flag mask is returned alongside.
    """
    if len(pred_traj) == 0:
        raise InvalidInputError("trajectory is empty")
    n = len(pred)
    ids = np.full(n, -1, dtype=np.int64) if pred.frame_ids is None else pred.frame_ids.copy()
    flags = np.zeros(n, dtype=bool)
    todo = np.nonzero(ids < 0)[0]
    pos = pred_traj.positions
    axis = pred_traj.rotations[:, :, 0]  # optical axis (+x of each camera) in world
    step = max(1, 2_000_000 // max(1, len(pos)))
    for start in range(0, len(todo), step):
        sel = todo[start:start + step]
        v = pred.xyz[sel][:, None, :] - pos[None, :, :]
        d2 = np.einsum("ntk,ntk->nt", v, v)
        nearest = np.argmin(d2, axis=1)
        if fov_check:
            ahead = np.einsum("ntk,tk->nt", v, axis) > 0
            masked = np.where(ahead, d2, np.inf)
            visible = np.argmin(masked, axis=1)
            none = ~ahead.any(axis=1)
            ids[sel] = np.where(none, nearest, visible)
            flags[sel] = none
        else:
            ids[sel] = nearest
    out = pred.with_frame_ids(ids)
    return (out, flags) if return_flags else out
