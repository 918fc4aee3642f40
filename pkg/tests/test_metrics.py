import numpy as np
import pytest

from groundwire.formats import write_pgm_mask
from groundwire.metrics import (
    ConfusionCounts,
    batch_eval,
    confusion,
    f1,
    iou,
    miou,
    precision,
    recall,
    score_masks,
)
from oracles import confusion_naive


class TestConfusion:
    def test_perfect_foreground(self):
        m = np.ones((4, 4), dtype=bool)
        c = confusion(m, m)
        assert (c.tp, c.fp, c.fn, c.tn) == (16, 0, 0, 0)

    def test_all_missed(self):
        pred = np.zeros((4, 4), dtype=bool)
        gt = np.ones((4, 4), dtype=bool)
        c = confusion(pred, gt)
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 0, 16, 0)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_naive_loop(self, seed):
        rng = np.random.default_rng(seed)
        pred = rng.random((32, 32)) < 0.5
        gt = rng.random((32, 32)) < 0.5
        c = confusion(pred, gt)
        assert (c.tp, c.fp, c.fn, c.tn) == confusion_naive(pred, gt)
        assert c.total == 32 * 32

    def test_swap_symmetry(self):
        rng = np.random.default_rng(10)
        pred = rng.random((16, 16)) < 0.4
        gt = rng.random((16, 16)) < 0.6
        a = confusion(pred, gt)
        b = confusion(gt, pred)
        assert (a.tp, a.tn) == (b.tp, b.tn)
        assert (a.fp, a.fn) == (b.fn, b.fp)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            confusion(np.zeros((2, 2), bool), np.zeros((2, 3), bool))


class TestScalarMetrics:
    def test_iou_hand_cases(self):
        assert iou(ConfusionCounts(10, 0, 0, 6)) == 1.0
        assert iou(ConfusionCounts(0, 5, 5, 6)) == 0.0
        assert iou(ConfusionCounts(6, 2, 4, 4)) == 0.5

    def test_iou_absent_class_convention(self):
        assert iou(ConfusionCounts(0, 0, 0, 16)) == 1.0

    def test_miou_mean(self):
        fg = ConfusionCounts(6, 2, 4, 4)  # IoU 0.5
        assert miou([fg, fg]) == 0.5
        # foreground 0.5, background 0.9 -> mean 0.7
        bg_like = ConfusionCounts(9, 1, 0, 6)
        assert iou(bg_like) == 0.9
        assert miou([ConfusionCounts(6, 2, 4, 4), bg_like]) == pytest.approx(0.7)

    def test_miou_class_relabel_invariance(self):
        rng = np.random.default_rng(2)
        pred = rng.random((20, 20)) < 0.5
        gt = rng.random((20, 20)) < 0.5
        c = confusion(pred, gt)
        swapped = confusion(~pred, ~gt)
        assert miou([c.swapped(), c]) == miou([swapped.swapped(), swapped])

    def test_precision_recall_hand_cases(self):
        assert precision(ConfusionCounts(8, 2, 0, 0)) == 0.8
        assert recall(ConfusionCounts(8, 0, 8, 0)) == 0.5

    def test_zero_denominators(self):
        empty = ConfusionCounts(0, 0, 0, 10)
        assert precision(empty) == 0.0
        assert recall(empty) == 0.0
        assert f1(0.0, 0.0) == 0.0

    def test_f1_fixed_point(self):
        for x in (0.25, 0.5, 0.99):
            assert f1(x, x) == pytest.approx(x)

    @pytest.mark.parametrize("seed", range(10))
    def test_metric_ordering(self, seed):
        rng = np.random.default_rng(100 + seed)
        pred = rng.random((24, 24)) < rng.uniform(0.2, 0.8)
        gt = rng.random((24, 24)) < rng.uniform(0.2, 0.8)
        c = confusion(pred, gt)
        if c.tp + c.fp == 0 or c.tp + c.fn == 0:
            return
        p, r = precision(c), recall(c)
        score = f1(p, r)
        assert iou(c) <= min(p, r) + 1e-12
        assert min(p, r) <= score + 1e-12
        assert score <= max(p, r) + 1e-12
        for v in (iou(c), p, r, score):
            assert 0.0 <= v <= 1.0


class TestScoreMasks:
    def test_single_pair_equals_overall(self):
        rng = np.random.default_rng(3)
        pred = rng.random((16, 16)) < 0.5
        gt = rng.random((16, 16)) < 0.5
        report = score_masks([pred], [gt])
        assert report.image_count == 1
        entry = report.per_image[0]
        assert entry["precision"] == report.precision
        assert entry["miou"] == report.miou

    def test_duplicated_pair_identical_metrics(self):
        rng = np.random.default_rng(4)
        pred = rng.random((16, 16)) < 0.5
        gt = rng.random((16, 16)) < 0.5
        single = score_masks([pred], [gt])
        double = score_masks([pred, pred], [gt, gt])
        assert double.miou == single.miou
        assert double.precision == single.precision
        assert double.f1 == single.f1

    def test_micro_average_is_count_sum(self):
        rng = np.random.default_rng(5)
        preds = [rng.random((8, 8)) < 0.5 for _ in range(5)]
        gts = [rng.random((8, 8)) < 0.5 for _ in range(5)]
        report = score_masks(preds, gts)
        totals = np.array([[e["tp"], e["fp"], e["fn"], e["tn"]] for e in report.per_image]).sum(axis=0)
        assert (report.foreground.tp, report.foreground.fp, report.foreground.fn,
                report.foreground.tn) == tuple(int(v) for v in totals)

    def test_f1_is_harmonic_mean_of_stored_values(self):
        rng = np.random.default_rng(6)
        report = score_masks(
            [rng.random((12, 12)) < 0.5 for _ in range(3)],
            [rng.random((12, 12)) < 0.5 for _ in range(3)],
        )
        assert report.f1 == pytest.approx(f1(report.precision, report.recall), abs=1e-15)

    def test_undefined_flags(self):
        empty = np.zeros((4, 4), dtype=bool)
        report = score_masks([empty], [empty])
        assert report.undefined == {"precision": True, "recall": True, "f1": True}
        assert report.miou == 1.0  # background perfect, foreground absent from both

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            score_masks([np.zeros((2, 2), bool)], [])

    def test_report_serialization(self):
        rng = np.random.default_rng(7)
        report = score_masks([rng.random((8, 8)) < 0.5], [rng.random((8, 8)) < 0.5])
        d = report.to_dict()
        assert set(d) >= {"precision", "recall", "f1", "miou", "per_image", "foreground"}
        table = report.format_table("demo")
        assert "Precision" in table and "Mean IoU" in table and "demo" in table
        csv = report.to_csv()
        assert csv.splitlines()[0].startswith("name,tp,fp,fn,tn")
        assert csv.strip().splitlines()[-1].startswith("overall,")


class TestBatchEval:
    def _write_pair(self, tmp_path, name, pred, gt):
        write_pgm_mask(tmp_path / "pred" / name, pred)
        write_pgm_mask(tmp_path / "gt" / name, gt)

    def test_directory_pairing(self, tmp_path):
        (tmp_path / "pred").mkdir()
        (tmp_path / "gt").mkdir()
        rng = np.random.default_rng(8)
        preds, gts = [], []
        for i in range(3):
            pred = rng.random((10, 10)) < 0.5
            gt = rng.random((10, 10)) < 0.5
            self._write_pair(tmp_path, f"{i:03d}.pgm", pred, gt)
            preds.append(pred)
            gts.append(gt)
        report = batch_eval(tmp_path / "pred", tmp_path / "gt")
        in_memory = score_masks(preds, gts, [f"{i:03d}.pgm" for i in range(3)])
        assert report.to_dict() == in_memory.to_dict()

    def test_unmatched_names_fail_unless_allowed(self, tmp_path):
        (tmp_path / "pred").mkdir()
        (tmp_path / "gt").mkdir()
        m = np.ones((4, 4), dtype=bool)
        self._write_pair(tmp_path, "a.pgm", m, m)
        write_pgm_mask(tmp_path / "pred" / "extra.pgm", m)
        with pytest.raises(ValueError, match="extra.pgm"):
            batch_eval(tmp_path / "pred", tmp_path / "gt")
        report = batch_eval(tmp_path / "pred", tmp_path / "gt", allow_missing=True)
        assert report.image_count == 1
        assert report.miou == 1.0
