"""Timestamp pairing and rigid alignment of an estimate into the ground-truth frame."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .core import (
    PointCloud,
    Pose,
    RigidTransform,
    Trajectory,
    matrix_to_quaternion,
    quaternion_multiply,
)
from .errors import DegenerateGeometryError, InvalidInputError, NoOverlapError

DEFAULT_MAX_DT = 0.02

ALIGN_MODES = ("umeyama", "first-pose", "none")


def pair_indices(gt: Trajectory, est: Trajectory, max_dt: float = DEFAULT_MAX_DT) -> list:
    """Greedy nearest-timestamp pairing as (gt index, est index) tuples.

    Candidate pairs within ``max_dt`` are accepted in order of increasing
    offset (ties broken by gt index, then est index); each pose is used at
    most once. The result is sorted by ground-truth index.
    """
    if len(gt) == 0 or len(est) == 0:
        raise InvalidInputError("both trajectories must be non-empty")
    if not max_dt > 0:
        raise InvalidInputError(f"max_dt must be positive, got {max_dt}")
    tg, te = gt.timestamps, est.timestamps
    # Both stamp arrays are sorted, so each gt stamp sees a contiguous est window.
    lo = np.searchsorted(te, tg - max_dt, side="left")
    hi = np.searchsorted(te, tg + max_dt, side="right")
    gi = np.repeat(np.arange(len(tg)), hi - lo)
    ei = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi)]).astype(np.int64)
    dt = np.abs(tg[gi] - te[ei])
    keep = dt <= max_dt
    gi, ei, dt = gi[keep], ei[keep], dt[keep]
    used_g = np.zeros(len(tg), dtype=bool)
    used_e = np.zeros(len(te), dtype=bool)
    chosen = []
    for k in np.lexsort((ei, gi, dt)):
        g, e = int(gi[k]), int(ei[k])
        if not used_g[g] and not used_e[e]:
            used_g[g] = used_e[e] = True
            chosen.append((g, e))
    if not chosen:
        raise NoOverlapError(f"no timestamps within {max_dt} s of each other")
    chosen.sort()
    return chosen


def associate_timestamps(gt: Trajectory, est: Trajectory, max_dt: float = DEFAULT_MAX_DT) -> list:
    """(gt pose, est pose) pairs from :func:`pair_indices`, sorted by gt timestamp."""
    return [(gt[g], est[e]) for g, e in pair_indices(gt, est, max_dt)]


def umeyama_align(gt_pts, est_pts, with_scale: bool = False) -> RigidTransform:
    """Least-squares similarity taking ``est_pts`` onto ``gt_pts``.

    Minimizes sum ||gt_i - (s R est_i + t)||^2 with det(R) = +1 (Umeyama 1991);
    ``s`` is fixed to 1 unless ``with_scale``.
    """
    gt_pts = np.asarray(gt_pts, dtype=np.float64).reshape(-1, 3)
    est_pts = np.asarray(est_pts, dtype=np.float64).reshape(-1, 3)
    if len(gt_pts) != len(est_pts):
        raise InvalidInputError("point sets differ in length")
    if len(gt_pts) < 3:
        raise DegenerateGeometryError("at least 3 point pairs are required")
    mu_g, mu_e = gt_pts.mean(axis=0), est_pts.mean(axis=0)
    dg, de = gt_pts - mu_g, est_pts - mu_e
    cov = dg.T @ de / len(gt_pts)
    U, d, Vt = np.linalg.svd(cov)
    if d[0] <= 0 or d[1] <= 1e-12 * d[0]:
        raise DegenerateGeometryError("point sets are collinear or coincident; rotation is not determined")
    S = np.ones(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2] = -1.0
    R = (U * S) @ Vt
    scale = 1.0
    if with_scale:
        var_e = np.mean(np.sum(de**2, axis=1))
        scale = float(np.dot(d, S) / var_e)
    t = mu_g - scale * R @ mu_e
    return RigidTransform(R, t, scale)


def first_pose_alignment(gt_pose: Pose, est_pose: Pose) -> RigidTransform:
    """Rigid transform that puts the first estimated pose onto the first ground-truth pose."""
    R = gt_pose.rotation @ est_pose.rotation.T
    u, _, vt = np.linalg.svd(R)
    R = u @ vt
    return RigidTransform(R, gt_pose.position - R @ est_pose.position)


def align_pairs(pairs: Sequence, mode: str = "umeyama", with_scale: bool = False) -> RigidTransform:
    """Alignment of the estimated side of ``pairs`` onto the ground truth."""
    if not pairs:
        raise InvalidInputError("no pose pairs to align")
    if mode == "none":
        return RigidTransform.identity()
    if mode == "first-pose":
        return first_pose_alignment(*pairs[0])
    if mode == "umeyama":
        gt = np.array([g.position for g, _ in pairs])
        est = np.array([e.position for _, e in pairs])
        return umeyama_align(gt, est, with_scale)
    raise InvalidInputError(f"unknown alignment mode {mode!r}; expected one of {ALIGN_MODES}")


def alignment_label(mode: str, with_scale: bool) -> str:
    return f"{mode}+scale" if with_scale and mode == "umeyama" else mode


def apply_alignment(x: Union[Trajectory, PointCloud], T: RigidTransform):
    """Move a trajectory or cloud by ``T``; orientations are left-multiplied by its rotation."""
    if isinstance(x, PointCloud):
        if len(x) == 0:
            return x
        return x.with_xyz(T.apply(x.xyz))
    if isinstance(x, Trajectory):
        qr = matrix_to_quaternion(T.rotation)
        poses = tuple(
            Pose(p.timestamp, T.apply(p.position), quaternion_multiply(qr, p.orientation)) for p in x
        )
        return Trajectory(poses)
    raise InvalidInputError(f"cannot align a {type(x).__name__}")
