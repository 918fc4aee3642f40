"""Temporal mask denoising and floor-level obstacle mapping.

The package turns noisy per-frame binary segmentation masks into stable
obstacle maps: connected regions are tracked across frames, voted over a
sliding window, and the surviving mask is combined with depth data to
produce a downsampled point cloud and an occupancy grid.  A small set of
strip-convolution forward blocks is included for running the segmentation
head, with weights supplied from files.
"""

from groundwire.mask_ops import (
    RegionStats,
    StructuringElement,
    dilate,
    erode,
    filter_by_area,
    label_regions,
)
from groundwire.tracking import (
    FrameResult,
    PipelineConfig,
    SequenceError,
    SlidingWindowFilter,
    TrackerState,
    VoteWindow,
    assign_ids,
    filter_mask,
    push_and_vote,
)

__all__ = [
    "StructuringElement",
    "RegionStats",
    "erode",
    "dilate",
    "label_regions",
    "filter_by_area",
    "TrackerState",
    "VoteWindow",
    "PipelineConfig",
    "FrameResult",
    "SequenceError",
    "SlidingWindowFilter",
    "assign_ids",
    "push_and_vote",
    "filter_mask",
]

__version__ = "0.1.0"
