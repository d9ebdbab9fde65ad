"""Evaluation of SLAM trajectories and maps against depth-derived ground truth."""

__version__ = "0.1.0"

from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    InvalidPoseError,
    NoOverlapError,
    OrderingError,
    ParseError,
    SlamEvalError,
    UndefinedMetricError,
    UnresolvedFrameError,
)
from .core import (
    DEFAULT_CELL_SIZE,
    Association,
    OccupancyGrid2D,
    Point3,
    PointCloud,
    Pose,
    RigidTransform,
    Trajectory,
    VoxelGrid,
    compose,
    voxel_downsample,
    voxelize,
)
from .io import load_cloud, load_trajectory, save_cloud, save_trajectory
from .gtmap import DepthFrame, backproject_frame, build_gt_cloud, build_gt_map, project_to_2d
from .alignment import associate_timestamps, pair_indices, umeyama_align
from .raycast import raycast, raycast_batch
from .associations import infer_frame_ids, nn_associate, raycast_associate, remove_floor
from .metrics import Bundle, EvalOptions, MetricReport, ame, ate, evaluate, iou2d, map_iou, rpe

__all__ = [
    "__version__",
    "DegenerateGeometryError",
    "InvalidInputError",
    "InvalidPoseError",
    "NoOverlapError",
    "OrderingError",
    "ParseError",
    "SlamEvalError",
    "UndefinedMetricError",
    "UnresolvedFrameError",
    "DEFAULT_CELL_SIZE",
    "Association",
    "OccupancyGrid2D",
    "Point3",
    "PointCloud",
    "Pose",
    "RigidTransform",
    "Trajectory",
    "VoxelGrid",
    "compose",
    "voxel_downsample",
    "voxelize",
    "load_cloud",
    "load_trajectory",
    "save_cloud",
    "save_trajectory",
    "DepthFrame",
    "backproject_frame",
    "build_gt_cloud",
    "build_gt_map",
    "project_to_2d",
    "associate_timestamps",
    "pair_indices",
    "umeyama_align",
    "raycast",
    "raycast_batch",
    "infer_frame_ids",
    "nn_associate",
    "raycast_associate",
    "remove_floor",
    "Bundle",
    "EvalOptions",
    "MetricReport",
    "ame",
    "ate",
    "evaluate",
    "iou2d",
    "map_iou",
    "rpe",
]
