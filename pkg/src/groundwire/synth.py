"""Synthetic noisy mask sequences with exact ground truth.

A scene is a thick polyline (the wire-like target) drifting slowly across
the frame, plus a handful of fixed distractor regions that flicker in and
out with per-frame Bernoulli probability, mimicking the intermittent false
positives a low-resolution segmentation model produces on line-like scene
features.  Ground truth is the polyline alone; the drift is kept below the
tracker's matching threshold so the true track is stable by construction.

Optionally emits depth frames from a simple tilted-camera-over-floor model:
floor pixels take the ray-plane distance, target and distractor pixels sit
at a small configurable height so they land inside an occupancy grid's
obstacle band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from groundwire.geometry import CameraIntrinsics, Extrinsics
from groundwire.mask_ops import StructuringElement, dilate

__all__ = [
    "DloSpec",
    "NoiseSpec",
    "DepthModel",
    "SynthConfig",
    "SynthSequence",
    "generate",
    "write_dataset",
]

# Distractors are sampled this many pixels clear of the target's swept area
# so regions never merge under 8-connectivity.
_SEPARATION_PX = 4
# ... and are resampled until comfortably above the default area filter.
_MIN_NOISE_AREA = 56


@dataclass(frozen=True)
class DloSpec:
    """Thick polyline target: control points (x, y), stroke thickness, and
    a constant per-frame drift vector in pixels."""

    points: tuple[tuple[float, float], ...]
    thickness: float = 5.0
    drift: tuple[float, float] = (0.4, 0.25)

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("polyline needs at least 2 control points")
        if self.thickness <= 0:
            raise ValueError(f"thickness must be > 0, got {self.thickness}")

    @property
    def drift_magnitude(self) -> float:
        return math.hypot(*self.drift)


@dataclass(frozen=True)
class NoiseSpec:
    """Flickering distractor regions: axis-aligned rectangles and short
    thick line segments, each present per frame with probability ``flicker_p``."""

    count: int = 3
    size_range: tuple[int, int] = (8, 28)
    flicker_p: float = 0.3

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"noise count must be >= 0, got {self.count}")
        if not (0.0 <= self.flicker_p <= 1.0):
            raise ValueError(f"flicker_p must be in [0, 1], got {self.flicker_p}")
        lo, hi = self.size_range
        if lo < 4 or hi < lo:
            raise ValueError(f"size_range must satisfy 4 <= lo <= hi, got {self.size_range}")


@dataclass(frozen=True)
class DepthModel:
    """Camera tilted down over a flat floor.

    The optical axis pitches ``pitch_deg`` below horizontal from
    ``camera_height`` meters up; every pixel must look at the floor (no
    horizon in frame).  Mask foreground sits ``object_height`` meters above
    the floor.  Raw depth units are ``depth_scale`` meters each.
    """

    fx: float = 390.0
    fy: float = 390.0
    cx: float = 320.0
    cy: float = 240.0
    camera_height: float = 0.5
    pitch_deg: float = 45.0
    object_height: float = 0.02
    depth_scale: float = 0.001

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(
            fx=self.fx, fy=self.fy, cx=self.cx, cy=self.cy, depth_scale=self.depth_scale
        )

    def extrinsics(self) -> Extrinsics:
        """Camera-to-ground transform for this pose (ground: x forward,
        y left, z up; origin on the floor under the camera)."""
        phi = math.radians(self.pitch_deg)
        s, c = math.sin(phi), math.cos(phi)
        rotation = np.array(
            [
                [0.0, -s, c],
                [-1.0, 0.0, 0.0],
                [0.0, -c, -s],
            ]
        )
        return Extrinsics(rotation=rotation, translation=np.array([0.0, 0.0, self.camera_height]))

    def _ray_denominator(self, v: np.ndarray) -> np.ndarray:
        phi = math.radians(self.pitch_deg)
        return math.sin(phi) + math.cos(phi) * (v - self.cy) / self.fy

    def depth_frame(self, mask: np.ndarray) -> np.ndarray:
        """Raw uint16 depth for one frame: floor everywhere, mask pixels at
        ``object_height``."""
        h, w = mask.shape
        denom = self._ray_denominator(np.arange(h, dtype=np.float64))
        if np.any(denom <= 0):
            raise ValueError(
                "camera sees above the horizon; increase pitch_deg or narrow the frame"
            )
        floor_z = self.camera_height / denom
        object_z = (self.camera_height - self.object_height) / denom
        z = np.repeat(floor_z[:, None], w, axis=1)
        z = np.where(mask, np.repeat(object_z[:, None], w, axis=1), z)
        raw = np.rint(z / self.depth_scale)
        if np.any(raw > 65535):
            raise ValueError("depth exceeds 16-bit range; shrink the scene or scale")
        return np.maximum(raw, 1).astype(np.uint16)

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "camera_height": self.camera_height,
            "pitch_deg": self.pitch_deg,
            "object_height": self.object_height,
            "depth_scale": self.depth_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DepthModel":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class SynthConfig:
    frames: int
    width: int
    height: int
    dlo: DloSpec
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    depth: DepthModel | None = None

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.width < 8 or self.height < 8:
            raise ValueError(f"frame must be at least 8x8, got {self.width}x{self.height}")

    @classmethod
    def default_scene(
        cls,
        frames: int = 90,
        width: int = 640,
        height: int = 480,
        seed: int = 0,
        noise_count: int = 3,
        flicker_p: float = 0.3,
        with_depth: bool = False,
    ) -> "SynthConfig":
        """A wire-like polyline spanning the frame plus flickering distractors."""
        w, h = float(width), float(height)
        points = (
            (0.15 * w, 0.72 * h),
            (0.38 * w, 0.45 * h),
            (0.62 * w, 0.62 * h),
            (0.85 * w, 0.38 * h),
        )
        return cls(
            frames=frames,
            width=width,
            height=height,
            dlo=DloSpec(points=points, thickness=5.0, drift=(0.4, 0.25)),
            noise=NoiseSpec(count=noise_count, flicker_p=flicker_p),
            seed=seed,
            depth=DepthModel(cx=w / 2.0, cy=h / 2.0) if with_depth else None,
        )

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "width": self.width,
            "height": self.height,
            "dlo": {
                "points": [list(p) for p in self.dlo.points],
                "thickness": self.dlo.thickness,
                "drift": list(self.dlo.drift),
            },
            "noise": {
                "count": self.noise.count,
                "size_range": list(self.noise.size_range),
                "flicker_p": self.noise.flicker_p,
            },
            "seed": self.seed,
            "depth": self.depth.to_dict() if self.depth else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        dlo = d["dlo"]
        noise = d.get("noise", {})
        return cls(
            frames=int(d["frames"]),
            width=int(d["width"]),
            height=int(d["height"]),
            dlo=DloSpec(
                points=tuple(tuple(float(c) for c in p) for p in dlo["points"]),
                thickness=float(dlo.get("thickness", 5.0)),
                drift=tuple(float(c) for c in dlo.get("drift", (0.4, 0.25))),
            ),
            noise=NoiseSpec(
                count=int(noise.get("count", 3)),
                size_range=tuple(int(v) for v in noise.get("size_range", (8, 28))),
                flicker_p=float(noise.get("flicker_p", 0.3)),
            ),
            seed=int(d.get("seed", 0)),
            depth=DepthModel.from_dict(d["depth"]) if d.get("depth") else None,
        )


@dataclass
class SynthSequence:
    """Generated frames: noisy inputs, clean ground truth, the distractor
    pixels alone, and (optionally) raw depth."""

    config: SynthConfig
    inputs: list[np.ndarray]
    truths: list[np.ndarray]
    noise_masks: list[np.ndarray]
    depths: list[np.ndarray] | None = None
    presence: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=bool))


def _stroke_segment(mask: np.ndarray, p0, p1, radius: float) -> None:
    """Set pixels within ``radius`` of segment p0-p1 (inclusive)."""
    h, w = mask.shape
    x0, y0 = p0
    x1, y1 = p1
    xmin = max(int(math.floor(min(x0, x1) - radius)), 0)
    xmax = min(int(math.ceil(max(x0, x1) + radius)), w - 1)
    ymin = max(int(math.floor(min(y0, y1) - radius)), 0)
    ymax = min(int(math.ceil(max(y0, y1) + radius)), h - 1)
    if xmin > xmax or ymin > ymax:
        return
    ys, xs = np.mgrid[ymin : ymax + 1, xmin : xmax + 1]
    vx, vy = x1 - x0, y1 - y0
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0:
        d2 = (xs - x0) ** 2 + (ys - y0) ** 2
    else:
        t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / seg_len2, 0.0, 1.0)
        d2 = (xs - (x0 + t * vx)) ** 2 + (ys - (y0 + t * vy)) ** 2
    mask[ymin : ymax + 1, xmin : xmax + 1] |= d2 <= radius * radius


def _polyline_mask(cfg: SynthConfig, offset: tuple[float, float]) -> np.ndarray:
    mask = np.zeros((cfg.height, cfg.width), dtype=bool)
    radius = cfg.dlo.thickness / 2.0
    pts = [(x + offset[0], y + offset[1]) for x, y in cfg.dlo.points]
    for p0, p1 in zip(pts[:-1], pts[1:]):
        _stroke_segment(mask, p0, p1, radius)
    return mask


def _check_bounds(cfg: SynthConfig) -> None:
    radius = cfg.dlo.thickness / 2.0 + 1.0
    last = cfg.frames - 1
    for x, y in cfg.dlo.points:
        for t in (0, last):
            px = x + cfg.dlo.drift[0] * t
            py = y + cfg.dlo.drift[1] * t
            if not (radius <= px <= cfg.width - 1 - radius and radius <= py <= cfg.height - 1 - radius):
                raise ValueError(
                    f"polyline exits frame bounds at frame {t}: control point ({px:.1f}, {py:.1f})"
                )


def _sample_noise_shapes(cfg: SynthConfig, rng: np.random.Generator, forbidden: np.ndarray) -> list[np.ndarray]:
    """Fixed geometry per distractor, clear of ``forbidden`` and of each other."""
    lo, hi = cfg.noise.size_range
    shapes: list[np.ndarray] = []
    blocked = forbidden.copy()
    for i in range(cfg.noise.count):
        for _ in range(200):
            candidate = np.zeros_like(forbidden)
            kind = rng.integers(0, 2)
            if kind == 0:  # rectangle
                rw = int(rng.integers(lo, hi + 1))
                rh = int(rng.integers(lo, hi + 1))
                x0 = int(rng.integers(0, cfg.width - rw))
                y0 = int(rng.integers(0, cfg.height - rh))
                candidate[y0 : y0 + rh, x0 : x0 + rw] = True
            else:  # short thick segment, the baseboard-like case
                length = float(rng.integers(max(3 * lo, 24), 3 * hi + 1))
                angle = rng.uniform(0, math.pi)
                cx = rng.uniform(length, cfg.width - 1 - length)
                cy = rng.uniform(length, cfg.height - 1 - length)
                dx, dy = length / 2 * math.cos(angle), length / 2 * math.sin(angle)
                _stroke_segment(candidate, (cx - dx, cy - dy), (cx + dx, cy + dy), 1.5)
            if candidate.sum() <= _MIN_NOISE_AREA:
                continue
            inflated = dilate(candidate, StructuringElement(2 * _SEPARATION_PX + 1, 2 * _SEPARATION_PX + 1))
            if not (inflated & blocked).any():
                shapes.append(candidate)
                blocked |= inflated
                break
        else:
            raise ValueError(
                f"could not place distractor {i}; frame too crowded for noise spec {cfg.noise}"
            )
    return shapes


def generate(cfg: SynthConfig) -> SynthSequence:
    """Render the sequence; deterministic for a given config (seed included)."""
    _check_bounds(cfg)
    rng = np.random.default_rng(cfg.seed)

    truths = [
        _polyline_mask(cfg, (cfg.dlo.drift[0] * t, cfg.dlo.drift[1] * t))
        for t in range(cfg.frames)
    ]
    swept = np.zeros((cfg.height, cfg.width), dtype=bool)
    for truth in truths:
        swept |= truth
    forbidden = dilate(swept, StructuringElement(2 * _SEPARATION_PX + 1, 2 * _SEPARATION_PX + 1))

    shapes = _sample_noise_shapes(cfg, rng, forbidden)
    presence = rng.random((cfg.frames, cfg.noise.count)) < cfg.noise.flicker_p

    inputs, noise_masks = [], []
    for t in range(cfg.frames):
        noise = np.zeros((cfg.height, cfg.width), dtype=bool)
        for i, shape in enumerate(shapes):
            if presence[t, i]:
                noise |= shape
        noise_masks.append(noise)
        inputs.append(truths[t] | noise)

    depths = None
    if cfg.depth is not None:
        depths = [cfg.depth.depth_frame(inputs[t]) for t in range(cfg.frames)]

    return SynthSequence(
        config=cfg,
        inputs=inputs,
        truths=truths,
        noise_masks=noise_masks,
        depths=depths,
        presence=presence,
    )


def write_dataset(seq: SynthSequence, out_dir: str | Path) -> dict:
    """Write input/, gt/ (and depth/) PGM sequences plus dataset.json.

    Returns the dataset manifest dict.
    """
    import json

    from groundwire.formats import write_pgm_depth, write_pgm_mask

    out_dir = Path(out_dir)
    (out_dir / "input").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    if seq.depths is not None:
        (out_dir / "depth").mkdir(parents=True, exist_ok=True)

    for t in range(seq.config.frames):
        name = f"{t:06d}.pgm"
        write_pgm_mask(out_dir / "input" / name, seq.inputs[t])
        write_pgm_mask(out_dir / "gt" / name, seq.truths[t])
        if seq.depths is not None:
            write_pgm_depth(out_dir / "depth" / name, seq.depths[t])

    manifest = {
        "config": seq.config.to_dict(),
        "frames": seq.config.frames,
        "directories": {
            "input": "input",
            "gt": "gt",
            "depth": "depth" if seq.depths is not None else None,
        },
    }
    (out_dir / "dataset.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
