"""Binary-mask morphology and connected-region extraction.

Masks are 2-D boolean numpy arrays (True = foreground).  All operations are
pure functions; nothing here holds state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

__all__ = [
    "StructuringElement",
    "RegionStats",
    "erode",
    "dilate",
    "label_regions",
    "filter_by_area",
]


@dataclass(frozen=True)
class StructuringElement:
    """All-ones rectangular structuring element of ``rows`` x ``cols`` pixels."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"structuring element must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def is_identity(self) -> bool:
        return self.rows == 1 and self.cols == 1


@dataclass(frozen=True)
class RegionStats:
    """Area and centroid of one connected foreground region.

    ``centroid`` is the unweighted mean of member pixel coordinates as
    fractional ``(x, y)``; no rounding, so downstream centroid distances
    are stable.
    """

    label: int
    area: int
    centroid: tuple[float, float]


def _check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.size == 0:
        raise ValueError("mask is empty (zero-sized)")
    return mask.astype(bool, copy=False)

def _footprint_windows(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """View of the footprint under every pixel, zero-padded at the borders.

    The element is anchored at floor(center), i.e. index (rows-1)//2 /
    (cols-1)//2, so even dimensions anchor one pixel up/left of the
    geometric middle.  Out-of-bounds pixels read as background.
    """
    if se.rows > mask.shape[0] or se.cols > mask.shape[1]:
        raise ValueError(
            f"structuring element {se.rows}x{se.cols} exceeds mask {mask.shape[0]}x{mask.shape[1]}"
        )
    top = (se.rows - 1) // 2
    left = (se.cols - 1) // 2
    padded = np.pad(
        mask,
        ((top, se.rows - 1 - top), (left, se.cols - 1 - left)),
        constant_values=False,
    )
    return sliding_window_view(padded, (se.rows, se.cols))


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Erode ``mask``: a pixel stays foreground iff every pixel under the
    centered footprint is foreground (out-of-bounds counts as background)."""
    mask = _check_mask(mask)
    if se.is_identity:
        return mask.copy()
    return _footprint_windows(mask, se).all(axis=(2, 3))


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Dilate ``mask``: a pixel becomes foreground iff any pixel under the
    centered footprint is foreground (out-of-bounds counts as background)."""
    mask = _check_mask(mask)
    if se.is_identity:
        return mask.copy()
    return _footprint_windows(mask, se).any(axis=(2, 3))


_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)
_STRUCTURE_8 = np.ones((3, 3), dtype=np.int8)


def label_regions(
    mask: np.ndarray, connectivity: int = 8
) -> tuple[np.ndarray, list[RegionStats]]:
    """Label connected foreground regions and compute their stats.

    Returns an int32 label map (0 = background, regions numbered densely
    from 1 in raster-scan order of each region's first pixel) and one
    :class:`RegionStats` per region, in label order.
    """
    mask = np.asarray(mask).astype(bool, copy=False)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")

    labels, count = ndimage.label(mask, structure=structure)
    labels = labels.astype(np.int32, copy=False)
    if count == 0:
        return labels, []

    # scipy's numbering is an implementation detail; renumber by raster-scan
    # first occurrence so identical inputs always yield identical labels.
    flat = labels.ravel()
    nonzero = np.flatnonzero(flat)
    first_seen = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first_seen, flat[nonzero], nonzero)
    order = np.argsort(first_seen[1:], kind="stable") + 1
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[order] = np.arange(1, count + 1, dtype=np.int32)
    labels = remap[labels]
    flat = labels.ravel()

    areas = np.bincount(flat, minlength=count + 1)[1:]
    ys, xs = np.nonzero(labels)
    region_ids = labels[ys, xs]
    sum_x = np.bincount(region_ids, weights=xs, minlength=count + 1)[1:]
    sum_y = np.bincount(region_ids, weights=ys, minlength=count + 1)[1:]

    stats = [
        RegionStats(
            label=int(i + 1),
            area=int(areas[i]),
            centroid=(float(sum_x[i] / areas[i]), float(sum_y[i] / areas[i])),
        )
        for i in range(count)
    ]
    return labels, stats


def filter_by_area(regions: list[RegionStats], min_area: int) -> list[RegionStats]:
    """Keep regions whose area strictly exceeds ``min_area``, order preserved."""
    if min_area < 0:
        raise ValueError(f"min_area must be >= 0, got {min_area}")
    return [r for r in regions if r.area > min_area]
