"""Command-line interface.

Subcommands:
  postprocess   denoise a mask directory (or a binary mask stream on stdin)
  eval          score predicted masks against ground truth
  synth         generate a synthetic noisy dataset
  cloud         back-project a mask + depth frame to a PLY point cloud
  grid          rasterize a PLY cloud into an occupancy grid
  convcheck     run the randomized convolution-equivalence suite
  run           the whole chain end to end, with a reproducibility manifest

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from groundwire import formats
from groundwire.geometry import CameraIntrinsics, Extrinsics, GridSpec, backproject, rasterize_obstacles, voxel_downsample
from groundwire.mask_ops import StructuringElement
from groundwire.metrics import batch_eval
from groundwire.pipeline import RunConfig, postprocess_directory, postprocess_stream, run_from_manifest, run_pipeline
from groundwire.synth import SynthConfig, generate, write_dataset
from groundwire.tracking import PipelineConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_CHECK_FAILED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract wants 1 for validation.
    def error(self, message):
        raise _UsageError(message)


def _parse_kernel(text: str) -> StructuringElement:
    try:
        rows, cols = text.lower().split("x")
        return StructuringElement(int(rows), int(cols))
    except (ValueError, TypeError) as exc:
        raise _UsageError(f"kernel must look like 3x3, got {text!r}") from exc


def _pipeline_config(args) -> PipelineConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
        if "pipeline" in base:  # accept a full run config as well
            base = base["pipeline"]
    overrides = {
        "window": args.k,
        "dist_threshold": args.dist_threshold,
        "min_area": args.min_area,
        "connectivity": args.connectivity,
        "keep_mode": args.keep_mode,
        "keep_fraction": args.keep_fraction,
        "morphology": args.morphology,
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if args.kernel is not None:
        se = _parse_kernel(args.kernel)
        base["kernel"] = [se.rows, se.cols]
    return PipelineConfig.from_dict(base)


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON (flags win over file values)")
    parser.add_argument("--k", type=int, help="sliding window size in frames (default 45)")
    parser.add_argument("--dist-threshold", type=float, help="centroid match threshold in px (default 50)")
    parser.add_argument("--min-area", type=int, help="keep regions with area strictly above this (default 50)")
    parser.add_argument("--kernel", help="morphology kernel as MxN (default 1x1)")
    parser.add_argument("--connectivity", type=int, choices=(4, 8), help="region connectivity (default 8)")
    parser.add_argument("--keep-mode", choices=("argmax", "fraction"), help="vote survivor rule (default argmax)")
    parser.add_argument("--keep-fraction", type=float, help="fraction mode: keep IDs present in at least this share of the window")
    parser.add_argument("--morphology", choices=("erode", "dilate", "none"), help="pre-step (default erode)")


def _cmd_postprocess(args) -> int:
    config = _pipeline_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else out_dir / "log.jsonl"
    if args.stdin:
        count = postprocess_stream(sys.stdin.buffer, out_dir, config, log_path)
    else:
        if not args.masks:
            raise _UsageError("postprocess needs --masks DIR or --stdin")
        count = postprocess_directory(args.masks, out_dir, config, log_path)
    print(f"postprocessed {count} frames -> {out_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = batch_eval(args.pred, args.gt, allow_missing=args.allow_missing)
    table = report.format_table(Path(args.pred).name or "pred")
    print(table, end="")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(report.to_json())
        (out_dir / "report.txt").write_text(table)
        (out_dir / "report.csv").write_text(report.to_csv())
        if not args.no_figures:
            from groundwire.figures import save_report_figures

            for path in save_report_figures(report, out_dir, "report"):
                print(f"wrote {path}")
        print(f"wrote {out_dir / 'report.json'}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.config:
        cfg = SynthConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = SynthConfig.default_scene(
            frames=args.frames,
            width=args.width,
            height=args.height,
            seed=args.seed,
            noise_count=args.noise_count,
            flicker_p=args.flicker_p,
            with_depth=args.with_depth,
        )
    seq = generate(cfg)
    write_dataset(seq, args.out)
    depth_note = " + depth" if seq.depths is not None else ""
    print(f"wrote {cfg.frames} frames{depth_note} -> {args.out}")
    return EXIT_OK


def _cmd_cloud(args) -> int:
    mask = formats.read_pgm_mask(args.mask)
    depth = formats.read_pgm_depth(args.depth)
    intrinsics = formats.read_intrinsics(args.intrinsics)
    cloud = backproject(depth, intrinsics, mask)
    if args.leaf:
        cloud = voxel_downsample(cloud, args.leaf)
    formats.write_ply(args.out, cloud)
    print(f"wrote {len(cloud)} points -> {args.out}")
    return EXIT_OK


def _cmd_grid(args) -> int:
    points = formats.read_ply(args.cloud)
    extrinsics = formats.read_extrinsics(args.extrinsics) if args.extrinsics else Extrinsics.identity()
    spec = GridSpec(
        resolution=args.resolution,
        origin=tuple(args.origin),
        width=args.width,
        height=args.height,
        z_band=tuple(args.z_band),
        min_hits=args.min_hits,
    )
    grid = rasterize_obstacles(points, spec, extrinsics)
    pgm_path, json_path = formats.write_grid(args.out, grid)
    print(f"{int(grid.cells.sum())} occupied cells ({grid.oob_count} points out of bounds)")
    print(f"wrote {pgm_path} and {json_path}")
    if args.figure:
        from groundwire.figures import save_grid_figure

        print(f"wrote {save_grid_figure(grid, args.figure)}")
    return EXIT_OK


def _cmd_convcheck(args) -> int:
    from groundwire.convcheck import run_suite

    report = run_suite(cases=args.cases, seed=args.seed, tolerance=args.tolerance)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_run(args) -> int:
    if bool(args.config) == bool(args.manifest):
        raise _UsageError("run needs exactly one of --config or --manifest")
    if args.manifest:
        manifest = run_from_manifest(args.manifest, args.out)
    else:
        config_dict = json.loads(Path(args.config).read_text())
        if args.seed is not None:
            if not config_dict.get("synth"):
                raise _UsageError("--seed only applies to synthetic-scene configs")
            config_dict["synth"]["seed"] = args.seed
        config = RunConfig.from_dict(config_dict)
        manifest = run_pipeline(config, args.out)
    summary = manifest["summary"]
    print(f"processed {summary['frames']} frames -> {args.out}")
    if "pre" in summary:
        print(
            f"mIoU {summary['pre']['miou']:.4f} -> {summary['post']['miou']:.4f}, "
            f"precision {summary['pre']['precision']:.4f} -> {summary['post']['precision']:.4f}"
        )
    if "grid" in summary:
        print(
            f"grid: {summary['grid']['occupied_cells']} occupied cells "
            f"(frames {summary['grid']['first_frame']}+)"
        )
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groundwire", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("postprocess", help="denoise a mask sequence")
    p.add_argument("--masks", help="input directory of PGM masks (lexicographic order)")
    p.add_argument("--stdin", action="store_true", help="read a length-prefixed binary mask stream from stdin")
    p.add_argument("--out", required=True, help="output directory for denoised masks")
    p.add_argument("--log", help="JSON-lines log path (default OUT/log.jsonl)")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted masks")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--out", help="write report.json/.txt/.csv and figures here")
    p.add_argument("--allow-missing", action="store_true", help="score the filename intersection instead of failing")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic noisy dataset")
    p.add_argument("--out", required=True, help="dataset directory (input/, gt/, depth/)")
    p.add_argument("--config", help="scene config JSON (overrides the flags below)")
    p.add_argument("--frames", type=int, default=90)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-count", type=int, default=3)
    p.add_argument("--flicker-p", type=float, default=0.3)
    p.add_argument("--with-depth", action="store_true", help="also emit synthetic depth frames")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("cloud", help="mask + depth + intrinsics -> PLY point cloud")
    p.add_argument("--mask", required=True, help="PGM mask")
    p.add_argument("--depth", required=True, help="16-bit PGM depth frame")
    p.add_argument("--intrinsics", required=True, help="camera intrinsics JSON")
    p.add_argument("--out", required=True, help="output PLY path")
    p.add_argument("--leaf", type=float, help="voxel leaf (m) to downsample with")
    p.set_defaults(func=_cmd_cloud)

    p = sub.add_parser("grid", help="PLY cloud -> occupancy grid PGM + JSON")
    p.add_argument("--cloud", required=True, help="input PLY")
    p.add_argument("--out", required=True, help="output path prefix (writes .pgm and .json)")
    p.add_argument("--extrinsics", help="camera-to-ground transform JSON (default identity)")
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--origin", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    p.add_argument("--width", type=int, default=120)
    p.add_argument("--height", type=int, default=120)
    p.add_argument("--z-band", type=float, nargs=2, default=(0.005, 0.30), metavar=("MIN", "MAX"))
    p.add_argument("--min-hits", type=int, default=1)
    p.add_argument("--figure", help="also render the grid to this PNG")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("convcheck", help="randomized convolution equivalence suite")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=_cmd_convcheck)

    p = sub.add_parser("run", help="run the whole chain and write a manifest")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--manifest", help="reproduce a previous run from its manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the synthetic scene seed")
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
