"""Depth back-projection, voxel downsampling, and obstacle rasterization.

Camera convention: optical frame with x right, y down, z forward (meters).
Depth frames are raw 16-bit counts (0 = no return) scaled to meters by the
intrinsics' ``depth_scale``.  Point clouds are (N, 3) float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CameraIntrinsics",
    "Extrinsics",
    "GridSpec",
    "OccupancyGrid",
    "backproject",
    "project",
    "voxel_downsample",
    "rasterize_obstacles",
]


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters; ``depth_scale`` is meters per raw depth unit."""

    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float = 0.001

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")
        if self.depth_scale <= 0:
            raise ValueError(f"depth_scale must be > 0, got {self.depth_scale}")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "depth_scale": self.depth_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(
            fx=float(d["fx"]), fy=float(d["fy"]),
            cx=float(d["cx"]), cy=float(d["cy"]),
            depth_scale=float(d.get("depth_scale", 0.001)),
        )


@dataclass(frozen=True)
class Extrinsics:
    """Rigid camera-to-ground transform: p_ground = rotation @ p_camera + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {r.shape}")
        if t.shape != (3,):
            raise ValueError(f"translation must have 3 components, got shape {t.shape}")
        if abs(np.linalg.det(r)) < 1e-9:
            raise ValueError("rotation matrix is not invertible")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Extrinsics":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Extrinsics":
        return cls(rotation=np.asarray(d["rotation"]), translation=np.asarray(d["translation"]))


def backproject(
    depth: np.ndarray, intrinsics: CameraIntrinsics, mask: np.ndarray
) -> np.ndarray:
    """Lift masked depth pixels to camera-frame points.

    For each foreground pixel (u, v) with raw depth r > 0:
    z = r * depth_scale, x = (u - cx) * z / fx, y = (v - cy) * z / fy.
    Pixels with r = 0 are skipped; output rows are in raster order.
    """
    depth = np.asarray(depth)
    mask = np.asarray(mask).astype(bool, copy=False)
    if depth.shape != mask.shape:
        raise ValueError(f"depth shape {depth.shape} != mask shape {mask.shape}")
    vs, us = np.nonzero(mask & (depth > 0))
    z = depth[vs, us].astype(np.float64) * intrinsics.depth_scale
    x = (us - intrinsics.cx) * z / intrinsics.fx
    y = (vs - intrinsics.cy) * z / intrinsics.fy
    return np.column_stack([x, y, z])


def project(points: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Forward pinhole model: (N, 3) camera points -> (N, 3) of (u, v, z meters)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if np.any(points[:, 2] <= 0):
        raise ValueError("cannot project points with z <= 0")
    u = points[:, 0] * intrinsics.fx / points[:, 2] + intrinsics.cx
    v = points[:, 1] * intrinsics.fy / points[:, 2] + intrinsics.cy
    return np.column_stack([u, v, points[:, 2]])


def voxel_downsample(points: np.ndarray, leaf: float) -> np.ndarray:
    """One centroid per occupied cubic voxel of edge ``leaf`` meters.

    Voxel index is floor(p / leaf) per axis (true floor, so a boundary point
    belongs to the higher-index voxel and negatives bucket correctly).
    Output rows are sorted by ascending (ix, iy, iz) voxel index.
    """
    if leaf <= 0:
        raise ValueError(f"voxel leaf must be > 0, got {leaf}")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return points.copy()
    idx = np.floor(points / leaf).astype(np.int64)
    uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.zeros((len(uniq), 3), dtype=np.float64)
    np.add.at(sums, inverse, points)
    counts = np.bincount(inverse, minlength=len(uniq)).astype(np.float64)
    return sums / counts[:, None]


@dataclass(frozen=True)
class GridSpec:
    """Occupancy-grid geometry: origin is the (x, y) of cell (0, 0)'s corner.

    ``z_band`` is the [z_min, z_max] height slab (ground frame, inclusive)
    whose points count as obstacles; ``min_hits`` point hits are required
    before a cell is marked occupied.
    """

    resolution: float = 0.05
    origin: tuple[float, float] = (0.0, 0.0)
    width: int = 120
    height: int = 120
    z_band: tuple[float, float] = (0.005, 0.30)
    min_hits: int = 1

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1 cells, got {self.width}x{self.height}")
        if self.min_hits < 1:
            raise ValueError(f"min_hits must be >= 1, got {self.min_hits}")

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "origin": list(self.origin),
            "width": self.width,
            "height": self.height,
            "z_band": list(self.z_band),
            "min_hits": self.min_hits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            resolution=float(d.get("resolution", 0.05)),
            origin=tuple(float(v) for v in d.get("origin", (0.0, 0.0))),
            width=int(d.get("width", 120)),
            height=int(d.get("height", 120)),
            z_band=tuple(float(v) for v in d.get("z_band", (0.005, 0.30))),
            min_hits=int(d.get("min_hits", 1)),
        )


@dataclass
class OccupancyGrid:
    """Result grid: ``cells[iy, ix]`` True = occupied.

    ``oob_count`` tallies in-band points that fell outside the grid bounds
    (they are ignored, not an error).
    """

    spec: GridSpec
    cells: np.ndarray
    oob_count: int = 0

    @property
    def occupied_cells(self) -> list[tuple[int, int]]:
        """Occupied (ix, iy) pairs in ascending order."""
        ys, xs = np.nonzero(self.cells)
        return sorted(zip(xs.tolist(), ys.tolist()))


def rasterize_obstacles(
    points: np.ndarray,
    spec: GridSpec,
    extrinsics: Extrinsics | None = None,
) -> OccupancyGrid:
    """Mark grid cells hit by in-band points.

    Points are moved to the ground frame, kept if their height lies inside
    ``spec.z_band``, and binned into cells by floor((x - origin) /
    resolution).  Cells reaching ``min_hits`` are occupied.  The result is
    independent of point order.
    """
    extrinsics = extrinsics or Extrinsics.identity()
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cells = np.zeros((spec.height, spec.width), dtype=np.int64)
    oob = 0
    if len(points):
        ground = extrinsics.apply(points)
        in_band = (ground[:, 2] >= spec.z_band[0]) & (ground[:, 2] <= spec.z_band[1])
        gx = ground[in_band, 0]
        gy = ground[in_band, 1]
        ix = np.floor((gx - spec.origin[0]) / spec.resolution).astype(np.int64)
        iy = np.floor((gy - spec.origin[1]) / spec.resolution).astype(np.int64)
        in_bounds = (ix >= 0) & (ix < spec.width) & (iy >= 0) & (iy < spec.height)
        oob = int(np.count_nonzero(~in_bounds))
        np.add.at(cells, (iy[in_bounds], ix[in_bounds]), 1)
    return OccupancyGrid(spec=spec, cells=cells >= spec.min_hits, oob_count=oob)
