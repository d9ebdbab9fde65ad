"""Readers and writers for the on-disk formats.

Trajectory text (one pose per line, ``#`` starts a comment)::

    timestamp tx ty tz qx qy qz qw

ASCII PCD v0.7 with ``FIELDS x y z`` plus optional ``rgb`` (0x00RRGGBB packed
into a float32, PCL convention) and optional integer ``frame`` (observing pose
index). XYZ text holds ``x y z`` or ``x y z r g b`` per line. Occupancy grids
are exported as plain P2 PGM (occupied = 0, free = 255).

Floats are written with ``repr`` so every value survives a round trip exactly.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import IO, Iterator, Union

import numpy as np

from .core import OccupancyGrid2D, PointCloud, Pose, Trajectory
from .errors import InvalidInputError, OrderingError, ParseError

TRAJECTORY_HEADER = "# timestamp tx ty tz qx qy qz qw"

PathLike = Union[str, Path]


def _fmt(v) -> str:
    return repr(float(v))


def _lines(stream) -> Iterator[tuple]:
    """Yield (1-based line number, text) from a text or binary stream."""
    for n, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError("input is not valid UTF-8 text", line=n) from exc
        yield n, raw


def _floats(fields, lineno):
    try:
        vals = [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(f"non-numeric field in {' '.join(fields)!r}", line=lineno) from exc
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite value", line=lineno)
    return vals


# --------------------------------------------------------------------------
# Trajectories


def parse_trajectory(stream) -> Trajectory:
    poses = []
    for n, line in _lines(stream):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 8:
            raise ParseError(f"expected 8 fields, found {len(fields)}", line=n)
        vals = _floats(fields, n)
        try:
            pose = Pose(vals[0], vals[1:4], vals[4:8])
        except InvalidInputError as exc:
            raise ParseError(str(exc), line=n) from exc
        if poses and not pose.timestamp > poses[-1].timestamp:
            raise OrderingError(
                f"timestamp {pose.timestamp!r} does not follow {poses[-1].timestamp!r}", line=n
            )
        poses.append(pose)
    return Trajectory(tuple(poses))


def write_trajectory(traj: Trajectory, stream: IO[str]) -> None:
    stream.write(TRAJECTORY_HEADER + "\n")
    for p in traj:
        vals = [p.timestamp, *p.position, *p.orientation]
        stream.write(" ".join(_fmt(v) for v in vals) + "\n")


def load_trajectory(path: PathLike) -> Trajectory:
    with open(path, "rb") as f:
        return parse_trajectory(f)


def save_trajectory(traj: Trajectory, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_trajectory(traj, f)


# --------------------------------------------------------------------------
# PCD


def pack_rgb(colors) -> np.ndarray:
    """Pack (N, 3) uint8 colors into float32 values holding 0x00RRGGBB."""
    c = np.asarray(colors, dtype=np.uint32).reshape(-1, 3)
    packed = (c[:, 0] << 16) | (c[:, 1] << 8) | c[:, 2]
    return packed.astype(np.uint32).view(np.float32)


def unpack_rgb(packed) -> np.ndarray:
    """Inverse of :func:`pack_rgb`; accepts float32 bit patterns."""
    bits = np.asarray(packed, dtype=np.float32).reshape(-1).view(np.uint32)
    return np.stack([(bits >> 16) & 0xFF, (bits >> 8) & 0xFF, bits & 0xFF], axis=1).astype(np.uint8)


_REQUIRED_PCD_KEYS = ("FIELDS", "SIZE", "TYPE", "WIDTH", "HEIGHT", "POINTS", "DATA")


def _header_int(header, key):
    try:
        v = int(header[key][0])
    except (ValueError, IndexError) as exc:
        raise ParseError("expected a single integer", key=key) from exc
    if v < 0:
        raise ParseError("must be non-negative", key=key)
    return v


def parse_pcd(stream) -> PointCloud:
    header = {}
    lines = _lines(stream)
    for n, line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        header[key.upper()] = rest
        if key.upper() == "DATA":
            break
    for key in _REQUIRED_PCD_KEYS:
        if key not in header:
            raise ParseError("missing header field", key=key)
    data = [v.lower() for v in header["DATA"]]
    if data != ["ascii"]:
        raise ParseError(f"only ASCII PCD is supported, got DATA {' '.join(header['DATA'])}", key="DATA")

    fields = [f.lower() for f in header["FIELDS"]]
    nf = len(fields)
    for key in ("SIZE", "TYPE"):
        if len(header[key]) != nf:
            raise ParseError(f"expected {nf} entries to match FIELDS", key=key)
    counts = header.get("COUNT", ["1"] * nf)
    try:
        counts = [int(c) for c in counts]
    except ValueError as exc:
        raise ParseError("non-integer entry", key="COUNT") from exc
    if len(counts) != nf or any(c < 1 for c in counts):
        raise ParseError(f"expected {nf} positive entries", key="COUNT")
    for axis in ("x", "y", "z"):
        if axis not in fields:
            raise ParseError(f"FIELDS lacks {axis!r}", key="FIELDS")
    types = [t.upper() for t in header["TYPE"]]
    if any(t not in ("F", "U", "I") for t in types):
        raise ParseError("TYPE entries must be F, U or I", key="TYPE")
    width = _header_int(header, "WIDTH")
    height = _header_int(header, "HEIGHT")
    npoints = _header_int(header, "POINTS")
    if width * height != npoints:
        raise ParseError(f"WIDTH*HEIGHT = {width * height} but POINTS = {npoints}", key="POINTS")

    # Column offset of every field inside a data row.
    offsets, col = {}, 0
    for f, c in zip(fields, counts):
        offsets[f] = col
        col += c
    ncols = col

    rows = []
    for n, line in lines:
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise ParseError(f"expected {ncols} values, found {len(parts)}", line=n)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError("non-numeric value", line=n) from exc
    if len(rows) != npoints:
        raise ParseError(f"header declares {npoints} points, body has {len(rows)}", key="POINTS")

    table = np.array(rows, dtype=np.float64).reshape(len(rows), ncols)
    xyz = table[:, [offsets["x"], offsets["y"], offsets["z"]]]
    keep = np.all(np.isfinite(xyz), axis=1)  # PCL marks invalid points with NaN

    colors = None
    if "rgb" in offsets or "rgba" in offsets:
        name = "rgb" if "rgb" in offsets else "rgba"
        raw = table[:, offsets[name]]
        kind = types[fields.index(name)]
        if kind == "F":
            with np.errstate(over="ignore", invalid="ignore"):
                colors = unpack_rgb(raw.astype(np.float32))
        else:
            if not np.all(np.isfinite(raw)) or np.any(raw < 0) or np.any(raw >= 2**32):
                raise ParseError("rgb values out of range", key="TYPE")
            colors = unpack_rgb(raw.astype(np.uint32).view(np.float32))
        colors = colors[keep]

    frame_ids = None
    if "frame" in offsets:
        raw = table[:, offsets["frame"]][keep]
        if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)) or np.any(np.abs(raw) >= 2**62):
            raise ParseError("frame values must be integers", key="FIELDS")
        frame_ids = raw.astype(np.int64)

    return PointCloud(xyz[keep], colors, frame_ids)


def write_pcd(cloud: PointCloud, stream: IO[str]) -> None:
    fields, sizes, types = ["x", "y", "z"], ["8", "8", "8"], ["F", "F", "F"]
    if cloud.colors is not None:
        fields.append("rgb"); sizes.append("4"); types.append("F")
    if cloud.frame_ids is not None:
        fields.append("frame"); sizes.append("4"); types.append("I")
    n = len(cloud)
    stream.write(
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\n"
        f"FIELDS {' '.join(fields)}\n"
        f"SIZE {' '.join(sizes)}\n"
        f"TYPE {' '.join(types)}\n"
        f"COUNT {' '.join('1' for _ in fields)}\n"
        f"WIDTH {n}\n"
        "HEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\n"
        f"POINTS {n}\n"
        "DATA ascii\n"
    )
    packed = pack_rgb(cloud.colors) if cloud.colors is not None else None
    for i in range(n):
        row = [_fmt(v) for v in cloud.xyz[i]]
        if packed is not None:
            row.append(repr(float(packed[i])))
        if cloud.frame_ids is not None:
            row.append(str(int(cloud.frame_ids[i])))
        stream.write(" ".join(row) + "\n")


# --------------------------------------------------------------------------
# XYZ text


def parse_xyz(stream) -> PointCloud:
    xyz, rgb = [], []
    width = None
    for n, line in _lines(stream):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (3, 6):
            raise ParseError(f"expected 3 or 6 fields, found {len(fields)}", line=n)
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields like the first row, found {len(fields)}", line=n)
        vals = _floats(fields, n)
        xyz.append(vals[:3])
        if width == 6:
            color = vals[3:]
            if any(c != int(c) or not 0 <= c <= 255 for c in color):
                raise ParseError("color channels must be integers in 0..255", line=n)
            rgb.append([int(c) for c in color])
    return PointCloud(np.array(xyz).reshape(-1, 3), np.array(rgb).reshape(-1, 3) if width == 6 else None)


def write_xyz(cloud: PointCloud, stream: IO[str]) -> None:
    for i in range(len(cloud)):
        row = [_fmt(v) for v in cloud.xyz[i]]
        if cloud.colors is not None:
            row.extend(str(int(c)) for c in cloud.colors[i])
        stream.write(" ".join(row) + "\n")


def load_cloud(path: PathLike) -> PointCloud:
    """Read a ``.pcd`` file, or XYZ text for any other suffix."""
    path = Path(path)
    with open(path, "rb") as f:
        if path.suffix.lower() == ".pcd":
            return parse_pcd(f)
        return parse_xyz(f)


def save_cloud(cloud: PointCloud, path: PathLike) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if path.suffix.lower() == ".pcd":
            write_pcd(cloud, f)
        else:
            write_xyz(cloud, f)


# --------------------------------------------------------------------------
# PGM


def write_grid_pgm(grid: OccupancyGrid2D, stream: IO[str]) -> None:
    """Plain P2 image of the grid, y axis pointing up the image.

    A comment line records the cell size, origin and the lattice index of the
    lower-left pixel so :func:`read_grid_pgm` can restore absolute cells.
    """
    i0, j0 = grid.min_cell
    w, h = grid.width, grid.height
    img = np.full((h, w), 255, dtype=np.int64)
    if len(grid):
        cols = grid.cells[:, 0] - i0
        rows = h - 1 - (grid.cells[:, 1] - j0)
        img[rows, cols] = 0
    stream.write("P2\n")
    stream.write(
        f"# cell_size {_fmt(grid.cell_size)} origin {_fmt(grid.origin[0])} {_fmt(grid.origin[1])} "
        f"min_cell {i0} {j0}\n"
    )
    stream.write(f"{w} {h}\n255\n")
    for row in img:
        stream.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(stream) -> tuple:
    """Read a P2 or P5 PGM (8 or 16 bit). Returns (pixels as int array, comment lines)."""
    data = stream.read()
    if isinstance(data, str):
        data = data.encode("latin-1", errors="replace")
    comments = []
    tokens = []
    pos = 0
    # Header is magic, width, height, maxval; '#' comments may appear between tokens.
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ParseError("truncated PGM header", key="header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            end = len(data) if end < 0 else end
            comments.append(data[pos + 1:end].decode("utf-8", errors="replace").strip())
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos].decode("ascii", errors="replace"))
    magic = tokens[0]
    if magic not in ("P2", "P5"):
        raise ParseError(f"unsupported magic {magic!r}", key="magic")
    try:
        w, h, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise ParseError("non-integer dimension", key="size") from exc
    if w < 0 or h < 0 or not 0 < maxval < 65536:
        raise ParseError("invalid dimensions or maxval", key="size")
    if magic == "P2":
        try:
            vals = [int(t) for t in data[pos:].split()]
        except ValueError as exc:
            raise ParseError("non-integer pixel", key="pixels") from exc
        if len(vals) != w * h:
            raise ParseError(f"expected {w * h} pixels, found {len(vals)}", key="pixels")
        img = np.array(vals, dtype=np.int64).reshape(h, w)
    else:
        pos += 1  # single whitespace byte ends the header
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        body = data[pos:pos + need]
        if len(body) != need:
            raise ParseError(f"expected {need} bytes of pixels, found {len(body)}", key="pixels")
        img = np.frombuffer(body, dtype=dtype).astype(np.int64).reshape(h, w)
    if img.size and (img.min() < 0 or img.max() > maxval):
        raise ParseError("pixel exceeds maxval", key="pixels")
    return img, comments


def read_grid_pgm(stream) -> OccupancyGrid2D:
    img, comments = read_pgm(stream)
    meta = {"cell_size": 1.0, "origin": (0.0, 0.0), "min_cell": (0, 0)}
    for c in comments:
        parts = c.split()
        try:
            for k in range(len(parts)):
                if parts[k] == "cell_size":
                    meta["cell_size"] = float(parts[k + 1])
                elif parts[k] == "origin":
                    meta["origin"] = (float(parts[k + 1]), float(parts[k + 2]))
                elif parts[k] == "min_cell":
                    meta["min_cell"] = (int(parts[k + 1]), int(parts[k + 2]))
        except (ValueError, IndexError) as exc:
            raise ParseError(f"malformed grid metadata {c!r}", key="comment") from exc
    h, w = img.shape
    rows, cols = np.nonzero(img == 0)
    i0, j0 = meta["min_cell"]
    cells = np.stack([cols + i0, (h - 1 - rows) + j0], axis=1)
    try:
        return OccupancyGrid2D(meta["cell_size"], meta["origin"], cells, w, h)
    except InvalidInputError as exc:
        raise ParseError(str(exc), key="comment") from exc


def write_depth_pgm(depth, stream: IO[bytes]) -> None:
    """16-bit binary PGM in millimeters; non-finite or non-positive depth becomes 0."""
    d = np.asarray(depth, dtype=np.float64)
    mm = np.where(np.isfinite(d) & (d > 0), np.round(d * 1000.0), 0)
    if mm.max(initial=0) > 65535:
        raise InvalidInputError("depth exceeds the 65.535 m range of 16-bit millimeters")
    h, w = d.shape
    stream.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
    stream.write(mm.astype(">u2").tobytes())


def read_depth_pgm(stream) -> np.ndarray:
    """Depth image in meters from a 16-bit millimeter PGM; 0 becomes NaN."""
    img, _ = read_pgm(stream)
    depth = img.astype(np.float64) / 1000.0
    depth[img == 0] = np.nan
    return depth


def read_text(path: PathLike) -> str:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8 text") from exc


__all__ = [
    "parse_trajectory", "write_trajectory", "load_trajectory", "save_trajectory",
    "parse_pcd", "write_pcd", "parse_xyz", "write_xyz", "load_cloud", "save_cloud",
    "pack_rgb", "unpack_rgb", "write_grid_pgm", "read_grid_pgm", "read_pgm",
    "write_depth_pgm", "read_depth_pgm", "read_text",
]
