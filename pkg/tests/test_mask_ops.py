import numpy as np
import pytest

from groundwire.mask_ops import (
    RegionStats,
    StructuringElement,
    dilate,
    erode,
    filter_by_area,
    label_regions,
)
from oracles import dilate_bruteforce, erode_bruteforce, regions_bruteforce


def square_mask(size=5, lo=1, hi=4):
    m = np.zeros((size, size), dtype=bool)
    m[lo:hi, lo:hi] = True
    return m


class TestErode:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        m = rng.random((7, 9)) < 0.5
        assert np.array_equal(erode(m, StructuringElement(1, 1)), m)

    def test_all_background(self):
        m = np.zeros((6, 6), dtype=bool)
        assert not erode(m, StructuringElement(3, 3)).any()

    def test_square_shrinks_to_center(self):
        m = square_mask()
        got = erode(m, StructuringElement(3, 3))
        expected = np.zeros((5, 5), dtype=bool)
        expected[2, 2] = True
        assert np.array_equal(got, expected)
        assert np.array_equal(got, erode_bruteforce(m, 3, 3))

    def test_zero_sized_mask_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            erode(np.zeros((0, 4), dtype=bool), StructuringElement(1, 1))

    def test_se_larger_than_mask_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            erode(np.ones((3, 3), dtype=bool), StructuringElement(5, 5))


class TestDilate:
    def test_identity_kernel(self):
        rng = np.random.default_rng(1)
        m = rng.random((6, 5)) < 0.5
        assert np.array_equal(dilate(m, StructuringElement(1, 1)), m)

    def test_center_pixel_grows_to_square(self):
        m = np.zeros((5, 5), dtype=bool)
        m[2, 2] = True
        got = dilate(m, StructuringElement(3, 3))
        assert np.array_equal(got, square_mask())
        assert np.array_equal(got, dilate_bruteforce(m, 3, 3))

    def test_all_foreground_fixed_point(self):
        m = np.ones((4, 6), dtype=bool)
        assert dilate(m, StructuringElement(3, 3)).all()


@pytest.mark.parametrize("seed", range(12))
def test_morphology_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(3, 14, size=2)
    rows, cols = rng.integers(1, 5, size=2)
    rows, cols = min(rows, h), min(cols, w)
    m = rng.random((h, w)) < rng.uniform(0.2, 0.8)
    se = StructuringElement(int(rows), int(cols))
    assert np.array_equal(erode(m, se), erode_bruteforce(m, rows, cols))
    assert np.array_equal(dilate(m, se), dilate_bruteforce(m, rows, cols))


def test_duality_and_subset_properties():
    # dilate(~M) == ~erode(M) on pixels whose footprint stays in bounds;
    # at the border the background-padding rule makes the sides differ.
    rng = np.random.default_rng(7)
    for _ in range(100):
        h, w = rng.integers(4, 24, size=2)
        rows = int(rng.integers(1, min(6, h + 1)))
        cols = int(rng.integers(1, min(6, w + 1)))
        m = rng.random((h, w)) < rng.uniform(0.2, 0.8)
        se = StructuringElement(rows, cols)
        eroded = erode(m, se)
        dilated = dilate(m, se)
        assert np.array_equal(eroded & m, eroded)  # anti-extensive
        assert np.array_equal(dilated | m, dilated)  # extensive
        dual = dilate(~m, se)
        top, left = (rows - 1) // 2, (cols - 1) // 2
        bottom, right = rows - 1 - top, cols - 1 - left
        interior = (slice(top, h - bottom), slice(left, w - right))
        assert np.array_equal(dual[interior], (~eroded)[interior])


class TestLabelRegions:
    def test_empty_mask(self):
        labels, regions = label_regions(np.zeros((4, 4), dtype=bool))
        assert not labels.any()
        assert regions == []

    def test_two_disjoint_squares(self):
        m = np.zeros((8, 8), dtype=bool)
        m[1:3, 1:3] = True
        m[5:7, 4:6] = True
        labels, regions = label_regions(m)
        assert [r.area for r in regions] == [4, 4]
        assert regions[0].centroid == (1.5, 1.5)
        assert regions[1].centroid == (4.5, 5.5)
        assert labels.max() == 2

    def test_full_frame(self):
        m = np.ones((6, 9), dtype=bool)
        labels, regions = label_regions(m)
        assert len(regions) == 1
        assert regions[0].area == 54
        assert regions[0].centroid == ((9 - 1) / 2, (6 - 1) / 2)

    def test_connectivity_split(self):
        m = np.zeros((4, 4), dtype=bool)
        m[0, 0] = m[1, 1] = True
        _, regions8 = label_regions(m, connectivity=8)
        _, regions4 = label_regions(m, connectivity=4)
        assert len(regions8) == 1
        assert len(regions4) == 2

    def test_invalid_connectivity(self):
        with pytest.raises(ValueError, match="connectivity"):
            label_regions(np.ones((2, 2), dtype=bool), connectivity=6)

    @pytest.mark.parametrize("connectivity", [4, 8])
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_floodfill_oracle(self, connectivity, seed):
        rng = np.random.default_rng(100 + seed)
        m = rng.random((rng.integers(3, 16), rng.integers(3, 16))) < 0.45
        labels, regions = label_regions(m, connectivity)
        expected = regions_bruteforce(m, connectivity)
        assert len(regions) == len(expected)
        for stat, (pixels, area, centroid) in zip(regions, expected):
            assert stat.area == area
            assert stat.centroid == pytest.approx(centroid, abs=1e-12)
            got_pixels = {(int(y), int(x)) for y, x in zip(*np.nonzero(labels == stat.label))}
            assert got_pixels == pixels

    def test_labels_raster_first_order_and_partition(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            m = rng.random((12, 12)) < 0.4
            labels, regions = label_regions(m)
            # dense 1..R, first pixels in raster order
            firsts = [np.flatnonzero(labels.ravel() == r.label)[0] for r in regions]
            assert firsts == sorted(firsts)
            assert [r.label for r in regions] == list(range(1, len(regions) + 1))
            assert sum(r.area for r in regions) == int(m.sum())

    def test_deterministic_across_runs(self):
        rng = np.random.default_rng(5)
        m = rng.random((20, 20)) < 0.5
        first = label_regions(m)
        second = label_regions(m)
        assert np.array_equal(first[0], second[0])
        assert first[1] == second[1]


class TestFilterByArea:
    def test_strict_threshold(self):
        regions = [RegionStats(1, 50, (0.0, 0.0))]
        assert filter_by_area(regions, 50) == []

    def test_keeps_above(self):
        regions = [RegionStats(1, 51, (0.0, 0.0)), RegionStats(2, 10, (1.0, 1.0))]
        assert filter_by_area(regions, 50) == [regions[0]]

    def test_zero_threshold_keeps_all(self):
        regions = [RegionStats(i, i, (0.0, 0.0)) for i in range(1, 5)]
        assert filter_by_area(regions, 0) == regions

    def test_idempotent_and_monotone(self):
        rng = np.random.default_rng(3)
        regions = [RegionStats(i + 1, int(a), (0.0, 0.0)) for i, a in enumerate(rng.integers(1, 200, 30))]
        for min_area in (0, 10, 50, 100):
            once = filter_by_area(regions, min_area)
            assert filter_by_area(once, min_area) == once
        sizes = [len(filter_by_area(regions, t)) for t in range(0, 201, 20)]
        assert sizes == sorted(sizes, reverse=True)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            filter_by_area([], -1)
