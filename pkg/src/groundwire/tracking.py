"""Centroid tracking across frames and sliding-window ID voting.

Per frame, connected regions are matched to the previous frame's regions by
centroid distance and inherit the matched track ID; unmatched regions get a
fresh ID.  Each frame's ID set is pushed into a FIFO window and only IDs that
occur persistently enough survive the vote; everything else is filtered out
of the output mask.  Flickering false detections keep losing their track and
never accumulate votes, while a real object drifting less than the distance
threshold per frame keeps a single ID for the whole sequence.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from groundwire.mask_ops import (
    RegionStats,
    StructuringElement,
    dilate,
    erode,
    filter_by_area,
    label_regions,
)

__all__ = [
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


class SequenceError(ValueError):
    """Frame stream violated a whole-sequence precondition (e.g. size change)."""


@dataclass
class TrackerState:
    """Mutable per-sequence tracker state.

    ``previous`` holds the (track ID, centroid) pairs of the last processed
    frame only; an ID absent for one frame is forgotten and a reappearing
    region gets a fresh ID.  IDs are never reused within a sequence.
    """

    dist_threshold: float = 50.0
    next_id: int = 1
    previous: list[tuple[int, tuple[float, float]]] = field(default_factory=list)

    def __post_init__(self):
        if self.dist_threshold <= 0:
            raise ValueError(f"dist_threshold must be > 0, got {self.dist_threshold}")


def assign_ids(
    state: TrackerState, regions: list[RegionStats]
) -> list[tuple[RegionStats, int]]:
    """Match regions to the previous frame's tracks and assign IDs.

    Matching is greedy nearest-first one-to-one: all (previous track,
    current region) pairs with Euclidean centroid distance strictly below
    ``state.dist_threshold`` are sorted by ascending distance (ties by track
    ID, then region order) and accepted while both endpoints are unclaimed.
    Unmatched regions receive fresh IDs in region order.  ``state`` is
    updated to the current frame's (ID, centroid) pairs.
    """
    candidates = []
    for prev_id, (px, py) in state.previous:
        for idx, region in enumerate(regions):
            d = math.hypot(region.centroid[0] - px, region.centroid[1] - py)
            if d < state.dist_threshold:
                candidates.append((d, prev_id, idx))
    candidates.sort()

    claimed_prev: set[int] = set()
    matched: dict[int, int] = {}
    for d, prev_id, idx in candidates:
        if prev_id in claimed_prev or idx in matched:
            continue
        claimed_prev.add(prev_id)
        matched[idx] = prev_id

    assigned: list[tuple[RegionStats, int]] = []
    for idx, region in enumerate(regions):
        track_id = matched.get(idx)
        if track_id is None:
            track_id = state.next_id
            state.next_id += 1
        assigned.append((region, track_id))

    state.previous = [(tid, r.centroid) for r, tid in assigned]
    return assigned


class VoteWindow:
    """FIFO window of per-frame track-ID sets, at most ``capacity`` deep."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.queue: deque[frozenset[int]] = deque()

    def __len__(self) -> int:
        return len(self.queue)

    def push(self, frame_ids: frozenset[int]) -> None:
        self.queue.append(frozenset(frame_ids))
        while len(self.queue) > self.capacity:
            self.queue.popleft()

    def counts(self) -> Counter[int]:
        """Occurrence count of every ID over the stored frames."""
        counter: Counter[int] = Counter()
        for ids in self.queue:
            counter.update(ids)
        return counter


def push_and_vote(
    window: VoteWindow,
    frame_ids: frozenset[int] | set[int],
    keep_mode: str = "argmax",
    keep_fraction: float | None = None,
) -> set[int]:
    """Push ``frame_ids`` into the window and return the IDs that survive.

    ``argmax`` keeps the single most frequent ID over the window (ties go to
    the smallest, i.e. oldest, ID).  ``fraction`` keeps every ID whose count
    is at least ceil(keep_fraction * frames held); during warm-up the vote
    runs over the frames available rather than suppressing output.
    """
    window.push(frozenset(frame_ids))
    counts = window.counts()
    if not counts:
        return set()
    if keep_mode == "argmax":
        best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        return {best[0]}
    if keep_mode == "fraction":
        if keep_fraction is None or not (0.0 < keep_fraction <= 1.0):
            raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
        needed = math.ceil(keep_fraction * len(window))
        return {tid for tid, n in counts.items() if n >= needed}
    raise ValueError(f"unknown keep_mode: {keep_mode!r}")


def filter_mask(
    labels: np.ndarray,
    assigned: list[tuple[RegionStats, int]],
    keep: set[int],
) -> np.ndarray:
    """Binary mask of exactly the regions whose track ID is in ``keep``.

    IDs in ``keep`` with no region this frame contribute nothing (they may
    reappear later).
    """
    lut = np.zeros(int(labels.max()) + 1 if labels.size else 1, dtype=bool)
    for region, track_id in assigned:
        if track_id in keep:
            lut[region.label] = True
    return lut[labels]


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the whole per-frame denoising pipeline.

    Defaults follow the reference configuration: 45-frame window, (1, 1)
    erosion kernel, 50 px centroid distance threshold, area threshold 50.
    """

    se: StructuringElement = StructuringElement(1, 1)
    min_area: int = 50
    connectivity: int = 8
    window: int = 45
    dist_threshold: float = 50.0
    keep_mode: str = "argmax"
    keep_fraction: float | None = None
    morphology: str = "erode"

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.dist_threshold <= 0:
            raise ValueError(f"dist_threshold must be > 0, got {self.dist_threshold}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.morphology not in ("erode", "dilate", "none"):
            raise ValueError(f"morphology must be erode|dilate|none, got {self.morphology!r}")
        if self.keep_mode not in ("argmax", "fraction"):
            raise ValueError(f"keep_mode must be argmax|fraction, got {self.keep_mode!r}")
        if self.keep_mode == "fraction" and (
            self.keep_fraction is None or not (0.0 < self.keep_fraction <= 1.0)
        ):
            raise ValueError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")

    def to_dict(self) -> dict:
        return {
            "kernel": [self.se.rows, self.se.cols],
            "min_area": self.min_area,
            "connectivity": self.connectivity,
            "window": self.window,
            "dist_threshold": self.dist_threshold,
            "keep_mode": self.keep_mode,
            "keep_fraction": self.keep_fraction,
            "morphology": self.morphology,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        kernel = d.get("kernel", [1, 1])
        return cls(
            se=StructuringElement(int(kernel[0]), int(kernel[1])),
            min_area=int(d.get("min_area", 50)),
            connectivity=int(d.get("connectivity", 8)),
            window=int(d.get("window", 45)),
            dist_threshold=float(d.get("dist_threshold", 50.0)),
            keep_mode=d.get("keep_mode", "argmax"),
            keep_fraction=(
                float(d["keep_fraction"]) if d.get("keep_fraction") is not None else None
            ),
            morphology=d.get("morphology", "erode"),
        )


@dataclass
class FrameResult:
    """Everything the pipeline produced for one frame."""

    assigned: list[tuple[RegionStats, int]]
    kept_ids: set[int]
    output: np.ndarray
    vote_counts: dict[int, int]


class SlidingWindowFilter:
    """Stateful per-sequence mask denoiser.

    One instance owns one sequence and must see its frames strictly in
    order; distinct sequences want distinct instances.  Processing is
    morphology -> region labeling -> area filter -> ID assignment ->
    window vote -> mask filter.
    """

    def __init__(self, config: PipelineConfig | None = None):
        self.config = config or PipelineConfig()
        self.state = TrackerState(dist_threshold=self.config.dist_threshold)
        self.window = VoteWindow(self.config.window)
        self._shape: tuple[int, int] | None = None
        self.frame_index = 0

    def process(self, mask: np.ndarray) -> FrameResult:
        mask = np.asarray(mask).astype(bool, copy=False)
        if self._shape is None:
            self._shape = mask.shape
        elif mask.shape != self._shape:
            raise SequenceError(
                f"frame {self.frame_index} has shape {mask.shape}, sequence started with {self._shape}"
            )

        cfg = self.config
        if cfg.morphology == "erode":
            worked = erode(mask, cfg.se)
        elif cfg.morphology == "dilate":
            worked = dilate(mask, cfg.se)
        else:
            worked = mask

        labels, regions = label_regions(worked, cfg.connectivity)
        regions = filter_by_area(regions, cfg.min_area)
        assigned = assign_ids(self.state, regions)
        frame_ids = frozenset(tid for _, tid in assigned)
        kept = push_and_vote(self.window, frame_ids, cfg.keep_mode, cfg.keep_fraction)
        output = filter_mask(labels, assigned, kept)

        self.frame_index += 1
        return FrameResult(
            assigned=assigned,
            kept_ids=kept,
            output=output,
            vote_counts=dict(self.window.counts()),
        )
