"""Sequence orchestration: directory/stream post-processing and the
end-to-end run (masks -> denoised masks -> reports -> cloud -> grid).

Every run writes a manifest recording the fully resolved configuration and
the SHA-256 of each input and output file, so a run can be reproduced
bit-for-bit from the manifest alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from groundwire.formats import (
    iter_mask_stream,
    list_pgm_files,
    read_pgm_depth,
    read_pgm_mask,
    write_grid,
    write_pgm_mask,
    write_ply,
)
from groundwire.geometry import (
    CameraIntrinsics,
    Extrinsics,
    GridSpec,
    backproject,
    rasterize_obstacles,
    voxel_downsample,
)
from groundwire.metrics import MetricsReport, score_masks
from groundwire.synth import SynthConfig, generate, write_dataset
from groundwire.tracking import FrameResult, PipelineConfig, SlidingWindowFilter

__all__ = [
    "postprocess_frames",
    "postprocess_directory",
    "postprocess_stream",
    "RunConfig",
    "run_pipeline",
    "run_from_manifest",
    "MANIFEST_VERSION",
]

MANIFEST_VERSION = 1


def _log_line(index: int, result: FrameResult) -> str:
    record = {
        "frame": index,
        "region_count": len(result.assigned),
        "assigned_ids": [tid for _, tid in result.assigned],
        "kept_ids": sorted(result.kept_ids),
        "vote_counts": {str(tid): n for tid, n in sorted(result.vote_counts.items())},
    }
    return json.dumps(record, sort_keys=True)


def postprocess_frames(
    masks: Iterable[np.ndarray], config: PipelineConfig | None = None
) -> Iterator[FrameResult]:
    """Denoise an in-memory mask sequence, yielding one result per frame."""
    pipeline = SlidingWindowFilter(config)
    for mask in masks:
        yield pipeline.process(mask)


def _postprocess_to_dir(
    masks: Iterable[np.ndarray],
    names: Iterable[str],
    out_dir: Path,
    config: PipelineConfig | None,
    log_path: Path | None,
) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    log_file = open(log_path, "w") if log_path else None
    try:
        for index, (name, result) in enumerate(zip(names, postprocess_frames(masks, config))):
            write_pgm_mask(out_dir / name, result.output)
            if log_file:
                log_file.write(_log_line(index, result) + "\n")
            count += 1
    finally:
        if log_file:
            log_file.close()
    return count


def postprocess_directory(
    in_dir: str | Path,
    out_dir: str | Path,
    config: PipelineConfig | None = None,
    log_path: str | Path | None = None,
) -> int:
    """Denoise a directory of PGM masks (lexicographic order) into ``out_dir``.

    Output masks keep their input filenames; the optional JSON log gets one
    line per frame.  Returns the frame count.
    """
    files = list_pgm_files(in_dir)
    if not files:
        raise ValueError(f"no .pgm masks found in {in_dir}")
    masks = (read_pgm_mask(p) for p in files)
    return _postprocess_to_dir(
        masks, [p.name for p in files], Path(out_dir), config, Path(log_path) if log_path else None
    )


def postprocess_stream(
    stream: BinaryIO,
    out_dir: str | Path,
    config: PipelineConfig | None = None,
    log_path: str | Path | None = None,
) -> int:
    """Denoise a length-prefixed binary mask stream into ``out_dir``.

    Frames are numbered ``000000.pgm`` onward, so a stream and a directory
    holding the same frames produce identical outputs.
    """

    def names() -> Iterator[str]:
        i = 0
        while True:
            yield f"{i:06d}.pgm"
            i += 1

    return _postprocess_to_dir(
        iter_mask_stream(stream), names(), Path(out_dir), config, Path(log_path) if log_path else None
    )


@dataclass
class RunConfig:
    """Fully resolved configuration of an end-to-end run.

    Either ``synth`` (generate the scene) or ``masks_dir`` (real input) must
    be set.  Geometry stages run when depth and intrinsics are available; in
    synth mode both camera models default to the generator's.
    """

    pipeline: PipelineConfig
    synth: SynthConfig | None = None
    masks_dir: str | None = None
    gt_dir: str | None = None
    depth_dir: str | None = None
    intrinsics: CameraIntrinsics | None = None
    extrinsics: Extrinsics | None = None
    voxel_leaf: float = 0.05
    grid: GridSpec = GridSpec()
    figures: bool = True

    def __post_init__(self):
        if (self.synth is None) == (self.masks_dir is None):
            raise ValueError("exactly one of synth config or masks_dir must be set")
        if self.voxel_leaf <= 0:
            raise ValueError(f"voxel_leaf must be > 0, got {self.voxel_leaf}")
        if self.synth is not None and self.synth.dlo.drift_magnitude >= self.pipeline.dist_threshold:
            raise ValueError(
                f"scene drift {self.synth.dlo.drift_magnitude:.1f} px/frame would break the "
                f"track (threshold {self.pipeline.dist_threshold})"
            )

    def validate_paths(self) -> None:
        for label, d in (("masks_dir", self.masks_dir), ("gt_dir", self.gt_dir), ("depth_dir", self.depth_dir)):
            if d is not None and not Path(d).is_dir():
                raise FileNotFoundError(f"{label} does not exist: {d}")

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline.to_dict(),
            "synth": self.synth.to_dict() if self.synth else None,
            "masks_dir": self.masks_dir,
            "gt_dir": self.gt_dir,
            "depth_dir": self.depth_dir,
            "intrinsics": self.intrinsics.to_dict() if self.intrinsics else None,
            "extrinsics": self.extrinsics.to_dict() if self.extrinsics else None,
            "voxel_leaf": self.voxel_leaf,
            "grid": self.grid.to_dict(),
            "figures": self.figures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            pipeline=PipelineConfig.from_dict(d.get("pipeline", {})),
            synth=SynthConfig.from_dict(d["synth"]) if d.get("synth") else None,
            masks_dir=d.get("masks_dir"),
            gt_dir=d.get("gt_dir"),
            depth_dir=d.get("depth_dir"),
            intrinsics=CameraIntrinsics.from_dict(d["intrinsics"]) if d.get("intrinsics") else None,
            extrinsics=Extrinsics.from_dict(d["extrinsics"]) if d.get("extrinsics") else None,
            voxel_leaf=float(d.get("voxel_leaf", 0.05)),
            grid=GridSpec.from_dict(d.get("grid", {})),
            figures=bool(d.get("figures", True)),
        )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_tree(root: Path, paths: Iterable[Path]) -> dict[str, str]:
    return {str(p.relative_to(root)): _sha256(p) for p in sorted(paths)}


def _write_report(report: MetricsReport, out_dir: Path, stem: str, label: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.json").write_text(report.to_json())
    (out_dir / f"{stem}.txt").write_text(report.format_table(label))
    (out_dir / f"{stem}.csv").write_text(report.to_csv())


def run_pipeline(config: RunConfig, out_dir: str | Path) -> dict:
    """Execute the full chain under ``out_dir`` and return the manifest dict.

    Stages: (synth) -> postprocess -> reports (when ground truth exists) ->
    obstacle cloud + occupancy grid (when depth exists).  The grid
    accumulates frames from the first full vote window onward so start-up
    transients never leave obstacles on the map.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.validate_paths()

    input_hashes: dict[str, str] = {}
    intrinsics = config.intrinsics
    extrinsics = config.extrinsics

    if config.synth is not None:
        seq = generate(config.synth)
        write_dataset(seq, out_dir / "dataset")
        names = [f"{t:06d}.pgm" for t in range(config.synth.frames)]
        inputs = seq.inputs
        truths = seq.truths
        depths = seq.depths
        if config.synth.depth is not None:
            intrinsics = intrinsics or config.synth.depth.intrinsics()
            extrinsics = extrinsics or config.synth.depth.extrinsics()
    else:
        files = list_pgm_files(config.masks_dir)
        if not files:
            raise ValueError(f"no .pgm masks found in {config.masks_dir}")
        names = [p.name for p in files]
        inputs = [read_pgm_mask(p) for p in files]
        input_hashes.update({f"masks/{p.name}": _sha256(p) for p in files})
        truths = None
        if config.gt_dir:
            gt_files = list_pgm_files(config.gt_dir)
            if [p.name for p in gt_files] != names:
                raise ValueError("ground-truth filenames do not match input masks")
            truths = [read_pgm_mask(p) for p in gt_files]
            input_hashes.update({f"gt/{p.name}": _sha256(p) for p in gt_files})
        depths = None
        if config.depth_dir:
            depth_files = list_pgm_files(config.depth_dir)
            if [p.name for p in depth_files] != names:
                raise ValueError("depth filenames do not match input masks")
            depths = [read_pgm_depth(p) for p in depth_files]
            input_hashes.update({f"depth/{p.name}": _sha256(p) for p in depth_files})

    # Post-process.
    post_dir = out_dir / "post"
    post_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    with open(post_dir / "log.jsonl", "w") as log_file:
        for index, result in enumerate(postprocess_frames(inputs, config.pipeline)):
            outputs.append(result.output)
            write_pgm_mask(post_dir / names[index], result.output)
            log_file.write(_log_line(index, result) + "\n")

    summary: dict = {"frames": len(outputs)}

    # Reports.
    if truths is not None:
        reports_dir = out_dir / "reports"
        pre_report = score_masks(inputs, truths, names)
        post_report = score_masks(outputs, truths, names)
        _write_report(pre_report, reports_dir, "pre", "raw input")
        _write_report(post_report, reports_dir, "post", "denoised")
        summary["pre"] = {"miou": pre_report.miou, "precision": pre_report.precision}
        summary["post"] = {"miou": post_report.miou, "precision": post_report.precision}
        if config.figures:
            from groundwire.figures import save_comparison_figure, save_report_figures

            save_report_figures(pre_report, reports_dir, "pre")
            save_report_figures(post_report, reports_dir, "post")
            save_comparison_figure(
                [("raw input", pre_report), ("denoised", post_report)],
                reports_dir / "comparison.png",
            )

    # Geometry.
    if depths is not None and intrinsics is not None:
        extrinsics = extrinsics or Extrinsics.identity()
        first_grid_frame = min(config.pipeline.window, len(outputs)) - 1
        clouds = []
        for t in range(first_grid_frame, len(outputs)):
            cloud = backproject(depths[t], intrinsics, outputs[t])
            if len(cloud):
                clouds.append(voxel_downsample(cloud, config.voxel_leaf))
        merged = np.vstack(clouds) if clouds else np.zeros((0, 3))
        cloud_dir = out_dir / "cloud"
        cloud_dir.mkdir(parents=True, exist_ok=True)
        write_ply(cloud_dir / "obstacles.ply", merged)
        grid = rasterize_obstacles(merged, config.grid, extrinsics)
        grid_dir = out_dir / "grid"
        grid_dir.mkdir(parents=True, exist_ok=True)
        write_grid(grid_dir / "grid", grid)
        summary["grid"] = {
            "occupied_cells": int(grid.cells.sum()),
            "out_of_bounds_points": grid.oob_count,
            "first_frame": first_grid_frame,
        }
        if config.figures:
            from groundwire.figures import save_grid_figure

            save_grid_figure(grid, grid_dir / "grid.png")

    produced = [
        p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json"
    ]
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "config": config.to_dict(),
        "inputs": dict(sorted(input_hashes.items())),
        "outputs": _hash_tree(out_dir, produced),
        "summary": summary,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def run_from_manifest(manifest_path: str | Path, out_dir: str | Path) -> dict:
    """Re-execute a run from its manifest; outputs are bitwise reproducible."""
    manifest = json.loads(Path(manifest_path).read_text())
    if manifest.get("manifest_version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version: {manifest.get('manifest_version')}")
    return run_pipeline(RunConfig.from_dict(manifest["config"]), out_dir)
