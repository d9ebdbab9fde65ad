"""Trajectory, map and overlap metrics, and the evaluation pipeline that reports them."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from . import alignment as al
from .associations import floor_threshold, infer_frame_ids, nn_associate, raycast_associate, remove_floor
from .core import DEFAULT_CELL_SIZE, Association, OccupancyGrid2D, PointCloud, Trajectory, voxelize
from .errors import InvalidInputError, UndefinedMetricError
from .gtmap import DEFAULT_MAX_RANGE, project_to_2d

log = logging.getLogger(__name__)


def _pair_arrays(pairs):
    gt = np.array([g.position for g, _ in pairs], dtype=np.float64).reshape(-1, 3)
    est = np.array([e.position for _, e in pairs], dtype=np.float64).reshape(-1, 3)
    return gt, est


def ate_per_pose(pairs: Sequence) -> np.ndarray:
    """Position error of every (gt, est) pose pair."""
    if len(pairs) == 0:
        raise InvalidInputError("ATE needs at least one pose pair")
    gt, est = _pair_arrays(pairs)
    return np.linalg.norm(gt - est, axis=1)


def ate(pairs: Sequence) -> float:
    """Absolute trajectory error: RMSE of the paired position differences."""
    err = ate_per_pose(pairs)
    return float(np.sqrt(np.mean(err**2)))


def rpe(pairs: Sequence) -> float:
    """Relative pose error over consecutive pairs, translation only.

    Each step's displacement is expressed in the frame of the pose it starts
    from, for ground truth and estimate separately; the result is the RMSE of
    their difference.
    """
    if len(pairs) < 2:
        raise InvalidInputError("RPE needs at least two pose pairs")
    gt, est = _pair_arrays(pairs)
    Rg = np.array([g.rotation for g, _ in pairs[:-1]])
    Re = np.array([e.rotation for _, e in pairs[:-1]])
    dg = np.einsum("nji,nj->ni", Rg, np.diff(gt, axis=0))
    de = np.einsum("nji,nj->ni", Re, np.diff(est, axis=0))
    return float(np.sqrt(np.mean(np.sum((dg - de) ** 2, axis=1))))


def ame(assoc: Association, pred: PointCloud) -> float:
    """Absolute mapping error: RMSE between matched predicted points and their partners."""
    if assoc.matched_count == 0:
        raise UndefinedMetricError("no predicted point was matched; AME is undefined")
    if len(assoc.pred_indices) and assoc.pred_indices.max() >= len(pred):
        raise InvalidInputError("association refers to points outside the predicted cloud")
    diff = pred.xyz[assoc.pred_indices] - assoc.matched
    return float(np.sqrt(np.mean(np.sum(diff**2, axis=1))))


def _world_cells(g: OccupancyGrid2D, origin) -> set:
    """Cells of ``g`` re-expressed on the lattice anchored at ``origin``."""
    if len(g) == 0:
        return set()
    shift = (g.origin - np.asarray(origin)) / g.cell_size
    if np.allclose(shift, np.round(shift), atol=1e-9):
        cells = g.cells + np.round(shift).astype(np.int64)
    else:
        centers = g.origin + (g.cells + 0.5) * g.cell_size
        cells = np.floor((centers - origin) / g.cell_size).astype(np.int64)
    return set(map(tuple, cells.tolist()))


def iou2d(a: OccupancyGrid2D, b: OccupancyGrid2D) -> float:
    """Intersection over union of two occupancy grids on a shared lattice."""
    if a.cell_size != b.cell_size:
        raise InvalidInputError(f"cell sizes differ ({a.cell_size} vs {b.cell_size})")
    sa = _world_cells(a, a.origin)
    sb = _world_cells(b, a.origin)
    union = len(sa | sb)
    if union == 0:
        raise UndefinedMetricError("both grids are empty; IoU is undefined")
    return len(sa & sb) / union


def map_iou(map_a: PointCloud, map_b: PointCloud, cell_size: float = DEFAULT_CELL_SIZE) -> float:
    """IoU of two clouds' ground-plane projections at ``cell_size``."""
    ga = project_to_2d(voxelize(map_a, cell_size))
    gb = project_to_2d(voxelize(map_b, cell_size))
    return iou2d(ga, gb)


# --------------------------------------------------------------------------
# Evaluation pipeline


@dataclass(frozen=True)
class Bundle:
    """Trajectory and/or map from one source (ground truth or an estimate)."""

    trajectory: Optional[Trajectory] = None
    map: Optional[PointCloud] = None
    name: str = ""


@dataclass(frozen=True)
class EvalOptions:
    max_dt: float = al.DEFAULT_MAX_DT
    align: str = "umeyama"
    with_scale: bool = False
    associations: tuple = ("nn", "raycast")
    cell_size: float = DEFAULT_CELL_SIZE
    max_range: float = DEFAULT_MAX_RANGE
    remove_floor: Optional[float] = None
    swap_rotation: bool = False
    fov_check: bool = True


@dataclass
class MetricReport:
    ate: Optional[float] = None
    rpe: Optional[float] = None
    ame_nn: Optional[float] = None
    ame_raycast: Optional[float] = None
    iou: Optional[float] = None
    pair_count: Optional[int] = None
    matched_count: Optional[int] = None
    miss_count: Optional[int] = None
    miss_rate: Optional[float] = None
    alignment_mode: str = "none"
    per_pose_errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def as_dict(self, digits: int = 6) -> dict:
        def num(v):
            if v is None or isinstance(v, (int, str)) and not isinstance(v, bool):
                return v
            return float(f"{v:.{digits}g}")

        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "per_pose_errors":
                out[f.name] = [num(x) for x in v]
            elif f.name == "warnings":
                out[f.name] = list(v)
            else:
                out[f.name] = num(v)
        return out

    def to_text(self, digits: int = 6, keys: Optional[Sequence[str]] = None) -> str:
        """``key=value`` lines; absent values are ``null``, lists are comma-separated."""
        d = self.as_dict(digits)
        lines = []
        for k, v in d.items():
            if keys is not None and k not in keys:
                continue
            if v is None:
                s = "null"
            elif isinstance(v, list):
                s = ",".join(f"{x:.{digits}g}" if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                s = f"{v:.{digits}g}"
            else:
                s = str(v)
            lines.append(f"{k}={s}")
        return "\n".join(lines) + "\n"

    def to_json(self, digits: int = 6, keys: Optional[Sequence[str]] = None) -> str:
        d = self.as_dict(digits)
        if keys is not None:
            d = {k: v for k, v in d.items() if k in keys}
        return json.dumps(d, indent=2) + "\n"


def evaluate(gt: Bundle, est: Bundle, options: EvalOptions = EvalOptions()) -> MetricReport:
    """Run every metric the inputs allow.

    Trajectory metrics need both trajectories; map metrics need both maps.
    The estimate is first aligned to the ground truth (``options.align``),
    and the same transform is applied to the estimated map. The ray-cast
    association additionally needs both trajectories.
    """
    report = MetricReport()
    for kind in options.associations:
        if kind not in ("nn", "raycast"):
            raise InvalidInputError(f"unknown association {kind!r}")
    have_traj = gt.trajectory is not None and est.trajectory is not None
    T = None
    est_traj = est.trajectory
    if have_traj:
        idx = al.pair_indices(gt.trajectory, est.trajectory, options.max_dt)
        pairs = [(gt.trajectory[g], est.trajectory[e]) for g, e in idx]
        T = al.align_pairs(pairs, options.align, options.with_scale)
        report.alignment_mode = al.alignment_label(options.align, options.with_scale)
        est_traj = al.apply_alignment(est.trajectory, T)
        aligned = [(gt.trajectory[g], est_traj[e]) for g, e in idx]
        report.pair_count = len(aligned)
        errs = ate_per_pose(aligned)
        report.ate = float(np.sqrt(np.mean(errs**2)))
        report.per_pose_errors = [float(e) for e in errs]
        if len(aligned) >= 2:
            report.rpe = rpe(aligned)
        else:
            report.warnings.append("only one pose pair; rpe undefined")

    if gt.map is None or est.map is None:
        return report

    gt_map, pred = gt.map, est.map
    if T is not None:
        pred = al.apply_alignment(pred, T)
    if options.remove_floor is not None:
        z = options.remove_floor
        gt_map, pred = remove_floor(gt_map, z), remove_floor(pred, z)
        for name, before, after in (("gt", gt.map, gt_map), ("predicted", est.map, pred)):
            removed = len(before) - len(after)
            log.info("floor removal at z=%g dropped %d %s points", z, removed, name)
            if len(after) == 0 and len(before) > 0:
                report.warnings.append(f"floor removal at z={z:g} removed every {name} map point")
    if len(gt_map) == 0 or len(pred) == 0:
        raise UndefinedMetricError("a map is empty; map metrics are undefined")

    if "nn" in options.associations:
        report.ame_nn = ame(nn_associate(pred, gt_map), pred)
    if "raycast" in options.associations:
        if not have_traj:
            report.warnings.append("ray-cast association needs both trajectories; skipped")
        else:
            grid = voxelize(gt_map, options.cell_size)
            tagged = pred
            if pred.frame_ids is None or np.any(pred.frame_ids < 0):
                tagged = infer_frame_ids(pred, est_traj, options.fov_check)
            assoc = raycast_associate(
                tagged, est_traj, gt.trajectory, grid, options.max_range, options.max_dt, options.swap_rotation
            )
            report.matched_count = assoc.matched_count
            report.miss_count = assoc.miss_count
            report.miss_rate = assoc.miss_count / len(pred)
            report.ame_raycast = ame(assoc, tagged)
    try:
        report.iou = map_iou(gt_map, pred, options.cell_size)
    except UndefinedMetricError:
        report.iou = None
    return report


__all__ = [
    "ate", "ate_per_pose", "rpe", "ame", "iou2d", "map_iou",
    "Bundle", "EvalOptions", "MetricReport", "evaluate", "floor_threshold",
]
