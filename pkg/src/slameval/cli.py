"""Command-line entry point.

Exit codes: 0 success, 1 other failure, 2 parse/format error,
3 no temporal overlap between trajectories, 4 undefined metric.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .core import DEFAULT_CELL_SIZE, voxel_downsample
from .errors import NoOverlapError, ParseError, SlamEvalError, UndefinedMetricError
from .gtmap import DEFAULT_MAX_RANGE, DepthFrame, build_gt_map, backproject_frames, list_depth_files, load_depth_image, project_to_2d
from .io import load_cloud, load_trajectory, read_text, save_cloud, write_grid_pgm
from .metrics import Bundle, EvalOptions, MetricReport, evaluate, map_iou
from .alignment import ALIGN_MODES, DEFAULT_MAX_DT

log = logging.getLogger("slameval")

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_NO_OVERLAP, EXIT_UNDEFINED = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_OTHER):
        super().__init__(message)
        self.code = code


def _load(loader, path):
    try:
        return loader(path)
    except ParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}", EXIT_OTHER) from exc


def _emit(report: MetricReport, keys, as_json: bool):
    sys.stdout.write(report.to_json(keys=keys) if as_json else report.to_text(keys=keys))


def find_sample_files(sample_dir) -> dict:
    """Locate per-run maps and trajectories inside a dataset ``sampleN`` directory.

    Maps are ``.pcd`` files whose names do not mention "merge", trajectories
    are ``.txt`` files with "traj" in the name (start/goal files excluded);
    each list is sorted by name, so index 0 is the first run.
    """
    d = Path(sample_dir)
    if not d.is_dir():
        raise CliError(f"{d}: not a directory", EXIT_OTHER)
    files = sorted(p for p in d.rglob("*") if p.is_file())
    maps = [p for p in files if p.suffix.lower() == ".pcd" and "merge" not in p.name.lower()]
    trajs = [
        p for p in files
        if p.suffix.lower() == ".txt" and "traj" in p.name.lower()
        and not any(w in p.name.lower() for w in ("start", "goal"))
    ]
    return {"maps": maps, "trajectories": trajs}


# --------------------------------------------------------------------------
# Commands


def cmd_eval_traj(args) -> int:
    gt = _load(load_trajectory, args.gt_file)
    est = _load(load_trajectory, args.est_file)
    opts = EvalOptions(max_dt=args.max_dt, align=args.align, with_scale=args.scale)
    report = evaluate(Bundle(gt, name=args.gt_file), Bundle(est, name=args.est_file), opts)
    keys = ["ate", "rpe", "pair_count", "alignment_mode", "warnings"]
    if args.per_pose:
        keys.append("per_pose_errors")
    _emit(report, keys, args.json)
    return EXIT_OK


def cmd_eval_map(args) -> int:
    gt_map_path, pred_map_path = args.gt_map, args.pred_map
    gt_traj_path, pred_traj_path = args.gt_traj, args.pred_traj
    if args.sample:
        found = find_sample_files(args.sample)
        if len(found["maps"]) < 1 or len(found["trajectories"]) < 1:
            raise CliError(f"{args.sample}: no ground-truth map/trajectory found", EXIT_PARSE)
        gt_map_path = gt_map_path or found["maps"][args.run]
        gt_traj_path = gt_traj_path or found["trajectories"][args.run]
    if gt_map_path is None or pred_map_path is None:
        raise CliError("both a ground-truth map and a predicted map are required", EXIT_PARSE)
    if args.assoc == "raycast" and (gt_traj_path is None or pred_traj_path is None):
        raise CliError("--assoc raycast needs both trajectories", EXIT_PARSE)
    gt_map = _load(load_cloud, gt_map_path)
    pred_map = _load(load_cloud, pred_map_path)
    gt_traj = _load(load_trajectory, gt_traj_path) if gt_traj_path else None
    pred_traj = _load(load_trajectory, pred_traj_path) if pred_traj_path else None
    align = args.align or ("umeyama" if gt_traj is not None and pred_traj is not None else "none")
    opts = EvalOptions(
        max_dt=args.max_dt,
        align=align,
        with_scale=args.scale,
        associations=(args.assoc,),
        cell_size=args.cell,
        max_range=args.max_range,
        remove_floor=args.remove_floor,
        swap_rotation=args.swap_rotation,
    )
    report = evaluate(Bundle(gt_traj, gt_map, str(gt_map_path)), Bundle(pred_traj, pred_map, str(pred_map_path)), opts)
    if args.assoc == "nn":
        keys = ["ame_nn", "alignment_mode", "warnings"]
    else:
        keys = ["ame_raycast", "matched_count", "miss_count", "miss_rate", "alignment_mode", "warnings"]
    _emit(report, keys, args.json)
    return EXIT_OK


def cmd_iou(args) -> int:
    a, b = args.map_a, args.map_b
    if args.sample:
        maps = find_sample_files(args.sample)["maps"]
        if len(maps) != 2:
            raise CliError(f"{args.sample}: expected two per-run maps, found {len(maps)}", EXIT_PARSE)
        a, b = a or maps[0], b or maps[1]
    if a is None or b is None:
        raise CliError("two maps (or --sample) are required", EXIT_PARSE)
    report = MetricReport(iou=map_iou(_load(load_cloud, a), _load(load_cloud, b), args.cell))
    _emit(report, ["iou"], args.json)
    return EXIT_OK


def cmd_build_gt_map(args) -> int:
    traj = _load(load_trajectory, args.traj_file)
    files = list_depth_files(args.depth_dir)
    if len(files) != len(traj):
        raise CliError(f"{len(files)} depth images but {len(traj)} poses", EXIT_PARSE)
    frames = [
        DepthFrame(_load(load_depth_image, f), pose, args.max_range) for f, pose in zip(files, traj)
    ]
    if args.points == "center":
        grid = build_gt_map(frames, args.cell)
        cloud = grid.to_cloud()
    else:
        cloud = voxel_downsample(backproject_frames(frames), args.cell)
        grid = build_gt_map(frames, args.cell)
    save_cloud(cloud, args.out)
    if args.pgm:
        with open(args.pgm, "w", encoding="utf-8", newline="\n") as f:
            write_grid_pgm(project_to_2d(grid), f)
    sys.stdout.write(f"cells={len(grid)}\npoints={len(cloud)}\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import make_bundle, parse_synth_spec, write_bundle

    text = _load(read_text, args.spec_file)
    try:
        scene, render, noise = parse_synth_spec(text)
    except ParseError as exc:
        raise CliError(f"{args.spec_file}: {exc}", EXIT_PARSE) from exc
    bundle = make_bundle(scene, render, noise)
    written = write_bundle(bundle, args.out_dir)
    sys.stdout.write(
        f"poses={len(bundle.gt_traj)}\ncells={len(bundle.gt_grid)}\nfiles={len(written)}\n"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slameval", description="Evaluate SLAM trajectories and maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, align_default="umeyama"):
        sp.add_argument("--max-dt", type=float, default=DEFAULT_MAX_DT, help="max timestamp offset for pairing (s)")
        sp.add_argument("--align", choices=ALIGN_MODES, default=align_default)
        sp.add_argument("--scale", action="store_true", help="also estimate scale (umeyama only)")
        sp.add_argument("--json", action="store_true", help="structured output")

    sp = sub.add_parser("eval-traj", help="ATE and RPE of an estimated trajectory")
    sp.add_argument("gt_file")
    sp.add_argument("est_file")
    sp.add_argument("--per-pose", action="store_true", help="also print per-pose position errors")
    common(sp)
    sp.set_defaults(func=cmd_eval_traj)

    sp = sub.add_parser("eval-map", help="AME of a predicted map")
    sp.add_argument("gt_map", nargs="?")
    sp.add_argument("pred_map", nargs="?")
    sp.add_argument("gt_traj", nargs="?")
    sp.add_argument("pred_traj", nargs="?")
    sp.add_argument("--assoc", choices=("nn", "raycast"), default="nn")
    sp.add_argument("--remove-floor", type=float, metavar="Z", help="drop points with z <= Z from both maps")
    sp.add_argument("--max-range", type=float, default=DEFAULT_MAX_RANGE, metavar="R")
    sp.add_argument("--cell", type=float, default=DEFAULT_CELL_SIZE)
    sp.add_argument("--swap-rotation", action="store_true", help="apply R_gt inv(R_pred) instead of inv(R_pred) R_gt")
    sp.add_argument("--sample", metavar="DIR", help="dataset sample directory supplying the ground truth")
    sp.add_argument("--run", type=int, default=0, choices=(0, 1), help="which run of --sample to use")
    common(sp, align_default=None)
    sp.set_defaults(func=cmd_eval_map)

    sp = sub.add_parser("iou", help="IoU of two maps' ground-plane projections")
    sp.add_argument("map_a", nargs="?")
    sp.add_argument("map_b", nargs="?")
    sp.add_argument("--cell", type=float, default=DEFAULT_CELL_SIZE)
    sp.add_argument("--sample", metavar="DIR", help="dataset sample directory holding both runs' maps")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_iou)

    sp = sub.add_parser("build-gt-map", help="ground-truth map from depth images and poses")
    sp.add_argument("depth_dir")
    sp.add_argument("traj_file")
    sp.add_argument("out", help="output .pcd (or XYZ text for other suffixes)")
    sp.add_argument("--cell", type=float, default=DEFAULT_CELL_SIZE)
    sp.add_argument("--max-range", type=float, default=DEFAULT_MAX_RANGE)
    sp.add_argument("--points", choices=("first", "center"), default="first",
                    help="per cell: first observed point (frame-tagged) or cell center")
    sp.add_argument("--pgm", help="also write the 2D projection as PGM")
    sp.set_defaults(func=cmd_build_gt_map)

    sp = sub.add_parser("synth", help="generate a synthetic evaluation bundle")
    sp.add_argument("spec_file")
    sp.add_argument("out_dir")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoOverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_OVERLAP
    except UndefinedMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except (SlamEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
