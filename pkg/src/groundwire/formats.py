"""File formats: binary PGM masks, 16-bit PGM depth, ASCII PLY clouds,
occupancy-grid PGM + JSON sidecar, and the length-prefixed mask stream.

Masks are stored as P5 PGM, one byte per pixel, 0 = background and 255 =
foreground; on read, any value >= 128 counts as foreground.  Depth is P5
with maxval 65535 (16-bit big-endian per the PGM standard), raw units are
millimeters by default.  Grid PGMs use the common robot map-file values:
0 = occupied, 254 = free, top image row = highest y cell.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

from groundwire.geometry import CameraIntrinsics, Extrinsics, GridSpec, OccupancyGrid

__all__ = [
    "read_pgm_mask",
    "write_pgm_mask",
    "read_pgm_depth",
    "write_pgm_depth",
    "read_ply",
    "write_ply",
    "write_grid",
    "read_grid",
    "read_intrinsics",
    "write_intrinsics",
    "read_extrinsics",
    "write_extrinsics",
    "iter_mask_stream",
    "write_mask_stream",
    "list_pgm_files",
]

GRID_OCCUPIED = 0
GRID_FREE = 254


def _read_pgm_header(f: BinaryIO) -> tuple[int, int, int]:
    def next_token() -> bytes:
        tok = b""
        while True:
            ch = f.read(1)
            if not ch:
                raise ValueError("truncated PGM header")
            if ch == b"#":  # comment runs to end of line
                while ch not in (b"\n", b""):
                    ch = f.read(1)
                continue
            if ch.isspace():
                if tok:
                    return tok
                continue
            tok += ch

    magic = next_token()
    if magic != b"P5":
        raise ValueError(f"not a binary PGM (P5) file, magic={magic!r}")
    width = int(next_token())
    height = int(next_token())
    maxval = int(next_token())
    return width, height, maxval


def read_pgm_mask(path: str | Path) -> np.ndarray:
    """Read an 8-bit PGM as a boolean mask (values >= 128 are foreground)."""
    with open(path, "rb") as f:
        width, height, maxval = _read_pgm_header(f)
        if maxval > 255:
            raise ValueError(f"{path}: mask PGM must be 8-bit, maxval={maxval}")
        data = f.read(width * height)
    if len(data) != width * height:
        raise ValueError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width) >= 128


def write_pgm_mask(path: str | Path, mask: np.ndarray) -> None:
    mask = np.asarray(mask).astype(bool, copy=False)
    h, w = mask.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write((mask.astype(np.uint8) * 255).tobytes())


def read_pgm_depth(path: str | Path) -> np.ndarray:
    """Read a 16-bit PGM depth frame (big-endian samples) as uint16."""
    with open(path, "rb") as f:
        width, height, maxval = _read_pgm_header(f)
        if maxval < 256:
            raise ValueError(f"{path}: depth PGM must be 16-bit, maxval={maxval}")
        data = f.read(width * height * 2)
    if len(data) != width * height * 2:
        raise ValueError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=">u2").reshape(height, width).astype(np.uint16)


def write_pgm_depth(path: str | Path, depth: np.ndarray) -> None:
    depth = np.asarray(depth, dtype=np.uint16)
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(depth.astype(">u2").tobytes())


def write_ply(path: str | Path, points: np.ndarray) -> None:
    """Write an (N, 3) cloud as ASCII PLY with float x, y, z properties."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "w") as f:
        f.write("ply\n")
        f.write("format ascii 1.0\n")
        f.write(f"element vertex {len(points)}\n")
        f.write("property float x\n")
        f.write("property float y\n")
        f.write("property float z\n")
        f.write("end_header\n")
        for x, y, z in points:
            f.write(f"{x:.9g} {y:.9g} {z:.9g}\n")


def read_ply(path: str | Path) -> np.ndarray:
    with open(path, "r") as f:
        line = f.readline().strip()
        if line != "ply":
            raise ValueError(f"{path}: not a PLY file")
        count = None
        while True:
            line = f.readline()
            if not line:
                raise ValueError(f"{path}: missing end_header")
            line = line.strip()
            if line.startswith("format") and "ascii" not in line:
                raise ValueError(f"{path}: only ASCII PLY is supported")
            if line.startswith("element vertex"):
                count = int(line.split()[-1])
            if line == "end_header":
                break
        if count is None:
            raise ValueError(f"{path}: no vertex element")
        points = np.zeros((count, 3), dtype=np.float64)
        for i in range(count):
            parts = f.readline().split()
            points[i] = [float(parts[0]), float(parts[1]), float(parts[2])]
    return points


def write_grid(path_prefix: str | Path, grid: OccupancyGrid) -> tuple[Path, Path]:
    """Write ``<prefix>.pgm`` + ``<prefix>.json`` sidecar; returns both paths.

    The PGM is vertically flipped (top row = highest y cell) so the file
    views like a map; the sidecar records that along with the geometry.
    """
    path_prefix = Path(path_prefix)
    img = np.where(grid.cells, GRID_OCCUPIED, GRID_FREE).astype(np.uint8)[::-1, :]
    pgm_path = path_prefix.with_suffix(".pgm")
    h, w = img.shape
    with open(pgm_path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())
    sidecar = {
        "resolution": grid.spec.resolution,
        "origin": list(grid.spec.origin),
        "width": grid.spec.width,
        "height": grid.spec.height,
        "z_band": list(grid.spec.z_band),
        "min_hits": grid.spec.min_hits,
        "occupied_value": GRID_OCCUPIED,
        "free_value": GRID_FREE,
        "row_order": "top row = highest y cell",
        "out_of_bounds_points": grid.oob_count,
    }
    json_path = path_prefix.with_suffix(".json")
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return pgm_path, json_path


def read_grid(path_prefix: str | Path) -> OccupancyGrid:
    path_prefix = Path(path_prefix)
    sidecar = json.loads(path_prefix.with_suffix(".json").read_text())
    with open(path_prefix.with_suffix(".pgm"), "rb") as f:
        width, height, maxval = _read_pgm_header(f)
        data = f.read(width * height)
    img = np.frombuffer(data, dtype=np.uint8).reshape(height, width)[::-1, :]
    spec = GridSpec(
        resolution=sidecar["resolution"],
        origin=tuple(sidecar["origin"]),
        width=sidecar["width"],
        height=sidecar["height"],
        z_band=tuple(sidecar["z_band"]),
        min_hits=sidecar.get("min_hits", 1),
    )
    return OccupancyGrid(
        spec=spec,
        cells=img == sidecar.get("occupied_value", GRID_OCCUPIED),
        oob_count=sidecar.get("out_of_bounds_points", 0),
    )


def read_intrinsics(path: str | Path) -> CameraIntrinsics:
    return CameraIntrinsics.from_dict(json.loads(Path(path).read_text()))


def write_intrinsics(path: str | Path, intrinsics: CameraIntrinsics) -> None:
    Path(path).write_text(json.dumps(intrinsics.to_dict(), indent=2, sort_keys=True) + "\n")


def read_extrinsics(path: str | Path) -> Extrinsics:
    return Extrinsics.from_dict(json.loads(Path(path).read_text()))


def write_extrinsics(path: str | Path, extrinsics: Extrinsics) -> None:
    Path(path).write_text(json.dumps(extrinsics.to_dict(), indent=2, sort_keys=True) + "\n")


def iter_mask_stream(stream: BinaryIO) -> Iterator[np.ndarray]:
    """Yield masks from a length-prefixed binary stream.

    Frame layout: width u32, height u32 (little-endian), then width*height
    bytes, one per pixel, >= 128 meaning foreground.  A clean EOF at a
    frame boundary ends the stream; EOF inside a frame is an error.
    """
    while True:
        header = stream.read(8)
        if not header:
            return
        if len(header) != 8:
            raise ValueError("truncated stream frame header")
        width, height = struct.unpack("<II", header)
        if width == 0 or height == 0:
            raise ValueError(f"invalid stream frame size {width}x{height}")
        data = stream.read(width * height)
        if len(data) != width * height:
            raise ValueError("truncated stream frame data")
        yield np.frombuffer(data, dtype=np.uint8).reshape(height, width) >= 128


def write_mask_stream(stream: BinaryIO, masks) -> None:
    for mask in masks:
        mask = np.asarray(mask).astype(bool, copy=False)
        h, w = mask.shape
        stream.write(struct.pack("<II", w, h))
        stream.write((mask.astype(np.uint8) * 255).tobytes())


def list_pgm_files(directory: str | Path) -> list[Path]:
    """PGM files of a sequence directory in lexicographic filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return sorted(directory.glob("*.pgm"), key=lambda p: p.name)
