"""Report figures rendered to files next to the delimited output.

matplotlib is imported lazily (Agg backend) so non-reporting paths never
pay for it; all figures are static PNGs and byte-deterministic for
identical inputs.
"""

from __future__ import annotations

from pathlib import Path

from groundwire.geometry import OccupancyGrid
from groundwire.metrics import MetricsReport

__all__ = [
    "save_report_figures",
    "save_comparison_figure",
    "save_grid_figure",
]


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_report_figures(report: MetricsReport, out_dir: str | Path, stem: str = "report") -> list[Path]:
    """Summary bar chart plus, for multi-image reports, per-frame curves."""
    plt = _plt()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    names = ["Precision", "Recall", "Mean IoU", "F1 Score"]
    values = [report.precision, report.recall, report.miou, report.f1]
    bars = ax.bar(names, values, color="#4878a8")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"{stem}: micro-averaged over {report.image_count} images")
    ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{stem}_summary.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    if report.image_count > 1:
        fig, ax = plt.subplots(figsize=(6.5, 3.5))
        xs = range(report.image_count)
        ax.plot(xs, [e["iou_foreground"] for e in report.per_image], label="foreground IoU", lw=1.2)
        ax.plot(xs, [e["precision"] for e in report.per_image], label="precision", lw=1.2)
        ax.plot(xs, [e["recall"] for e in report.per_image], label="recall", lw=1.2)
        ax.set_xlabel("frame")
        ax.set_ylabel("score")
        ax.set_ylim(-0.02, 1.05)
        ax.set_title(f"{stem}: per-frame scores")
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{stem}_per_frame.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    return written


def save_comparison_figure(
    labeled_reports: list[tuple[str, MetricsReport]], path: str | Path
) -> Path:
    """Grouped bars comparing several reports (e.g. raw vs denoised)."""
    plt = _plt()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = ["Precision", "Recall", "Mean IoU", "F1 Score"]
    width = 0.8 / max(len(labeled_reports), 1)
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    for i, (label, report) in enumerate(labeled_reports):
        values = [report.precision, report.recall, report.miou, report.f1]
        offset = (i - (len(labeled_reports) - 1) / 2) * width
        xs = [j + offset for j in range(len(names))]
        bars = ax.bar(xs, values, width=width, label=label)
        ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=7)
    ax.set_xticks(range(len(names)), names)
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("score")
    ax.set_title("segmentation scores")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_grid_figure(grid: OccupancyGrid, path: str | Path) -> Path:
    """Render the occupancy grid in metric coordinates (origin lower-left)."""
    plt = _plt()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    spec = grid.spec
    extent = (
        spec.origin[0],
        spec.origin[0] + spec.width * spec.resolution,
        spec.origin[1],
        spec.origin[1] + spec.height * spec.resolution,
    )
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.imshow(
        grid.cells,
        origin="lower",
        extent=extent,
        cmap="gray_r",
        interpolation="nearest",
    )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    occupied = int(grid.cells.sum())
    ax.set_title(f"occupancy grid: {occupied} occupied cells @ {spec.resolution} m")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
