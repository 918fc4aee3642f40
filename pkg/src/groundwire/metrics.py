"""Segmentation scoring: confusion counts, IoU, precision/recall/F1.

Scores treat masks as two-class (background/foreground) pixel labelings.
Batch evaluation micro-averages: integer counts are accumulated over all
images first, then ratios are taken; per-image scores are kept alongside so
either view can be audited.

Zero-denominator conventions (stated so every input scores): IoU of a class
absent from both masks is 1.0; precision/recall with an empty denominator
are 0.0 and flagged as undefined in the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "confusion",
    "iou",
    "miou",
    "precision",
    "recall",
    "f1",
    "score_masks",
    "batch_eval",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel counts for one class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Counts for the complementary class (foreground <-> background)."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Pixelwise foreground-class counts; background follows by complement."""
    pred = np.asarray(pred).astype(bool, copy=False)
    gt = np.asarray(gt).astype(bool, copy=False)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred & gt)),
        fp=int(np.count_nonzero(pred & ~gt)),
        fn=int(np.count_nonzero(~pred & gt)),
        tn=int(np.count_nonzero(~pred & ~gt)),
    )


def iou(c: ConfusionCounts) -> float:
    """tp / (tp + fp + fn); a class absent from both masks scores 1.0."""
    denom = c.tp + c.fp + c.fn
    return c.tp / denom if denom else 1.0


def miou(counts_per_class) -> float:
    """Unweighted mean IoU across classes."""
    counts = list(counts_per_class)
    if not counts:
        raise ValueError("miou needs at least one class")
    return sum(iou(c) for c in counts) / len(counts)


def precision(c: ConfusionCounts) -> float:
    denom = c.tp + c.fp
    return c.tp / denom if denom else 0.0


def recall(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return c.tp / denom if denom else 0.0


def f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if (p + r) else 0.0


def _scores_from(counts: ConfusionCounts) -> dict:
    p = precision(counts)
    r = recall(counts)
    return {
        "precision": p,
        "recall": r,
        "f1": f1(p, r),
        "iou_foreground": iou(counts),
        "iou_background": iou(counts.swapped()),
        "miou": miou([counts.swapped(), counts]),
    }


@dataclass
class MetricsReport:
    """Micro-averaged scores plus the per-image breakdown behind them."""

    image_count: int
    foreground: ConfusionCounts
    precision: float
    recall: float
    f1: float
    iou_foreground: float
    iou_background: float
    miou: float
    undefined: dict = field(default_factory=dict)
    per_image: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_count": self.image_count,
            "foreground": {
                "tp": self.foreground.tp,
                "fp": self.foreground.fp,
                "fn": self.foreground.fn,
                "tn": self.foreground.tn,
            },
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "iou_foreground": self.iou_foreground,
            "iou_background": self.iou_background,
            "miou": self.miou,
            "undefined": self.undefined,
            "per_image": self.per_image,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self, label: str = "overall") -> str:
        """Aligned text table: Precision, Recall, Mean IoU, F1 Score."""
        header = f"{'':<16}{'Precision':>11}{'Recall':>11}{'Mean IoU':>11}{'F1 Score':>11}"
        row = (
            f"{label:<16}{self.precision:>11.4f}{self.recall:>11.4f}"
            f"{self.miou:>11.4f}{self.f1:>11.4f}"
        )
        extra = f"(foreground IoU {self.iou_foreground:.4f}, background IoU {self.iou_background:.4f}, {self.image_count} images)"
        return "\n".join([header, row, extra]) + "\n"

    def to_csv(self) -> str:
        """Per-image rows plus the micro-averaged overall row."""
        cols = "name,tp,fp,fn,tn,precision,recall,f1,iou_foreground,iou_background,miou"
        lines = [cols]
        for entry in self.per_image:
            lines.append(
                "{name},{tp},{fp},{fn},{tn},{precision:.9f},{recall:.9f},{f1:.9f},"
                "{iou_foreground:.9f},{iou_background:.9f},{miou:.9f}".format(**entry)
            )
        lines.append(
            f"overall,{self.foreground.tp},{self.foreground.fp},{self.foreground.fn},"
            f"{self.foreground.tn},{self.precision:.9f},{self.recall:.9f},{self.f1:.9f},"
            f"{self.iou_foreground:.9f},{self.iou_background:.9f},{self.miou:.9f}"
        )
        return "\n".join(lines) + "\n"


def _build_report(pairs: list[tuple[str, ConfusionCounts]]) -> MetricsReport:
    total = ConfusionCounts(0, 0, 0, 0)
    per_image = []
    for name, counts in pairs:
        total = total + counts
        entry = {"name": name, "tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn}
        entry.update(_scores_from(counts))
        per_image.append(entry)
    scores = _scores_from(total)
    undefined = {
        "precision": (total.tp + total.fp) == 0,
        "recall": (total.tp + total.fn) == 0,
        "f1": (scores["precision"] + scores["recall"]) == 0,
    }
    return MetricsReport(
        image_count=len(pairs),
        foreground=total,
        undefined=undefined,
        per_image=per_image,
        **scores,
    )


def score_masks(
    preds, gts, names: list[str] | None = None
) -> MetricsReport:
    """Score parallel lists of in-memory prediction/ground-truth masks."""
    preds = list(preds)
    gts = list(gts)
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predictions vs {len(gts)} ground-truth masks")
    if names is None:
        names = [f"{i:06d}" for i in range(len(preds))]
    pairs = [
        (name, confusion(pred, gt)) for name, pred, gt in zip(names, preds, gts)
    ]
    return _build_report(pairs)


def batch_eval(
    pred_dir: str | Path,
    gt_dir: str | Path,
    allow_missing: bool = False,
) -> MetricsReport:
    """Evaluate two directories of PGM masks paired by filename.

    Filenames present in one directory but not the other raise unless
    ``allow_missing`` is set, in which case only the intersection scores.
    """
    from groundwire.formats import read_pgm_mask

    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    pred_names = {p.name for p in pred_dir.glob("*.pgm")}
    gt_names = {p.name for p in gt_dir.glob("*.pgm")}
    unmatched = sorted(pred_names.symmetric_difference(gt_names))
    if unmatched and not allow_missing:
        raise ValueError(f"unmatched mask filenames: {', '.join(unmatched)}")
    common = sorted(pred_names & gt_names)
    if not common:
        raise ValueError(f"no mask pairs found between {pred_dir} and {gt_dir}")
    pairs = []
    for name in common:
        pred = read_pgm_mask(pred_dir / name)
        gt = read_pgm_mask(gt_dir / name)
        pairs.append((name, confusion(pred, gt)))
    return _build_report(pairs)
