"""First-hit ray casting in a sparse voxel grid by incremental (DDA) traversal.

The traversal visits, in order, every cell the ray passes through, one cell
per step (Amanatides & Woo). Where the ray crosses a cell edge or corner
exactly, x steps before y before z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import VoxelGrid
from .errors import InvalidInputError


@dataclass(frozen=True)
class RayHit:
    cell: tuple
    alpha: float
    hit_point: np.ndarray


def _check_ray(origin, direction, max_range):
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    if not (np.all(np.isfinite(o)) and np.all(np.isfinite(d))):
        raise InvalidInputError("ray origin and direction must be finite")
    n = float(np.linalg.norm(d))
    if n == 0.0:
        raise InvalidInputError("zero ray direction")
    if abs(n - 1.0) > 1e-6:
        raise InvalidInputError(f"ray direction must be unit length (norm {n})")
    if not max_range > 0:
        raise InvalidInputError("max_range must be positive")
    return o, d / n


def raycast(grid: VoxelGrid, origin, direction, max_range: float) -> Optional[RayHit]:
    """First occupied cell along the ray, or None when nothing is hit within ``max_range``.

    ``alpha`` is the distance at which the ray enters the hit cell; a ray that
    starts inside an occupied cell hits it at alpha = 0.
    """
    o, d = _check_ray(origin, direction, max_range)
    if len(grid) == 0:
        return None
    occupied = grid.cell_set
    lo_arr, occ = grid.dense
    lo = lo_arr.tolist()
    hi = (lo_arr + np.array(occ.shape) - 1).tolist()
    s = grid.cell_size
    g = (o - grid.origin) / s
    cell = [math.floor(v) for v in g]
    step = [0, 0, 0]
    t_max = [math.inf] * 3
    t_delta = [math.inf] * 3
    for a in range(3):
        if d[a] > 0:
            step[a] = 1
            t_max[a] = (cell[a] + 1 - g[a]) * s / d[a]
            t_delta[a] = s / d[a]
        elif d[a] < 0:
            step[a] = -1
            t_max[a] = (g[a] - cell[a]) * s / -d[a]
            t_delta[a] = s / -d[a]
    t = 0.0
    while t <= max_range:
        if tuple(cell) in occupied:
            c = tuple(cell)
            return RayHit(c, t, grid.origin + (np.array(c) + 0.5) * s)
        for a in range(3):
            if (cell[a] < lo[a] and step[a] <= 0) or (cell[a] > hi[a] and step[a] >= 0):
                return None
        a = 0
        if t_max[1] < t_max[a]:
            a = 1
        if t_max[2] < t_max[a]:
            a = 2
        t = t_max[a]
        cell[a] += step[a]
        t_max[a] += t_delta[a]
    return None


def raycast_batch(grid: VoxelGrid, origins, directions, max_range):
    """Vectorized :func:`raycast` over N rays.

    Directions are normalized here; zero directions are reported as misses.
    Returns ``(hit, cells, alpha, exit)``: a boolean mask, the (N, 3) hit
    cells, the entry distances and the distances at which each ray leaves its
    hit cell. Entries for misses are -1 / NaN.
    """
    o = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    d = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    n = len(o)
    if len(d) != n:
        raise InvalidInputError("origins and directions differ in length")
    max_range = np.broadcast_to(np.asarray(max_range, dtype=np.float64), (n,))
    hit = np.zeros(n, dtype=bool)
    hit_cells = np.full((n, 3), -1, dtype=np.int64)
    alpha = np.full(n, np.nan)
    exit_ = np.full(n, np.nan)
    if n == 0 or len(grid) == 0:
        return hit, hit_cells, alpha, exit_

    norm = np.linalg.norm(d, axis=1)
    ok = (norm > 0) & np.all(np.isfinite(d), axis=1) & np.all(np.isfinite(o), axis=1)
    ids = np.nonzero(ok)[0]
    d = d[ids] / norm[ids, None]
    s = grid.cell_size
    g = (o[ids] - grid.origin) / s
    cell = np.floor(g).astype(np.int64)
    step = np.sign(d).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_max = np.where(d > 0, (cell + 1 - g) * s / d, np.where(d < 0, (g - cell) * s / -d, np.inf))
        t_delta = np.where(d != 0, s / np.abs(d), np.inf)
    t = np.zeros(len(ids))
    limit = max_range[ids]

    lo, occ = grid.dense
    hi = lo + np.array(occ.shape) - 1
    while len(ids):
        inside = np.all((cell >= lo) & (cell <= hi), axis=1)
        occupied = np.zeros(len(ids), dtype=bool)
        rel = cell[inside] - lo
        occupied[inside] = occ[rel[:, 0], rel[:, 1], rel[:, 2]]
        within = t <= limit
        got = occupied & within
        if got.any():
            k = ids[got]
            hit[k] = True
            hit_cells[k] = cell[got]
            alpha[k] = t[got]
            exit_[k] = t_max[got].min(axis=1)
        escaped = np.any(((cell < lo) & (step <= 0)) | ((cell > hi) & (step >= 0)), axis=1)
        alive = ~got & within & ~escaped
        if not alive.all():
            ids, cell, step, t_max, t_delta, t, limit = (
                ids[alive], cell[alive], step[alive], t_max[alive], t_delta[alive], t[alive], limit[alive]
            )
        if not len(ids):
            break
        axis = np.argmin(t_max, axis=1)
        rows = np.arange(len(ids))
        t = t_max[rows, axis]
        cell[rows, axis] += step[rows, axis]
        t_max[rows, axis] += t_delta[rows, axis]
    return hit, hit_cells, alpha, exit_
