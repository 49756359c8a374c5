import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fireimpact.errors import AlignmentError, FrameError
from fireimpact.grid import (
    AnalysisGrid,
    CategoryRaster,
    Mask,
    mask_combine,
    resample_nearest,
    tabulate_area,
)


def grid(n_rows, n_cols, cell=20.0, ox=0.0, oy=0.0, frame="local"):
    return AnalysisGrid(ox, oy, cell, n_rows, n_cols, frame)


class TestResampleNearest:
    def test_uniform_source(self):
        src = CategoryRaster(grid(4, 4, cell=30.0), np.full((4, 4), 24))
        target = grid(5, 5, cell=20.0, ox=10.0, oy=10.0)
        out = resample_nearest(src, target)
        assert np.all(out.cells == 24)

    def test_identity_when_grids_match(self):
        g = grid(3, 5)
        src = CategoryRaster(g, np.arange(15).reshape(3, 5))
        out = resample_nearest(src, g)
        assert np.array_equal(out.cells, src.cells)

    def test_30m_to_20m_matches_center_lookup(self):
        # 2x2 of 30 m cells over [0,60]x[0,60]; row 0 is north.
        src = CategoryRaster(grid(2, 2, cell=30.0), np.array([[11, 21], [22, 24]]))
        target = grid(3, 3, cell=20.0)
        out = resample_nearest(src, target)
        # Independent check: locate each 20 m center in the 30 m grid.
        for r in range(3):
            for c in range(3):
                x = target.center_x(c)
                y = target.center_y(r)
                sc = int(x // 30)
                sr = 1 - int(y // 30)
                assert out.cells[r, c] == src.cells[sr, sc]

    def test_outside_extent_is_nodata(self):
        src = CategoryRaster(grid(2, 2, cell=30.0), np.full((2, 2), 42), nodata=-1)
        target = grid(3, 3, cell=20.0, ox=10.0, oy=10.0)
        out = resample_nearest(src, target)
        assert out.cells[0, 2] == -1  # center (60, 60) on the open boundary
        assert out.cells[2, 0] == 42  # center (20, 20) well inside

    def test_frame_mismatch(self):
        src = CategoryRaster(grid(2, 2, frame="a"), np.zeros((2, 2)))
        with pytest.raises(FrameError):
            resample_nearest(src, grid(2, 2, frame="b"))


class TestTabulateArea:
    def test_single_class_full_zone(self):
        g = grid(10, 10)
        classes = CategoryRaster(g, np.full((10, 10), 21))
        [counts] = tabulate_area(classes, [Mask.full(g)])
        assert counts == {21: 100}

    def test_empty_zone(self):
        g = grid(4, 4)
        classes = CategoryRaster(g, np.full((4, 4), 21))
        [counts] = tabulate_area(classes, [Mask.empty(g)])
        assert counts == {}

    def test_random_zones_match_per_cell_tally(self):
        rng = np.random.default_rng(7)
        g = grid(16, 16)
        cells = rng.choice([11, 21, 42], size=(16, 16))
        classes = CategoryRaster(g, cells)
        zones = [Mask(g, rng.random((16, 16)) < 0.4) for _ in range(4)]
        results = tabulate_area(classes, zones)
        for zone, got in zip(zones, results):
            want: dict[int, int] = {}
            for r in range(16):
                for c in range(16):
                    if zone.bits[r, c]:
                        code = int(cells[r, c])
                        want[code] = want.get(code, 0) + 1
            assert got == want

    def test_full_zone_counts_sum_to_cell_count(self):
        rng = np.random.default_rng(3)
        g = grid(9, 13)
        classes = CategoryRaster(g, rng.choice([11, 21, 24, -1], size=(9, 13)))
        [counts] = tabulate_area(classes, [Mask.full(g)])
        assert sum(counts.values()) == 9 * 13

    def test_misaligned_zone_raises(self):
        classes = CategoryRaster(grid(4, 4), np.zeros((4, 4)))
        with pytest.raises(AlignmentError):
            tabulate_area(classes, [Mask.empty(grid(5, 4))])


class TestMaskCombine:
    def test_intersect_with_full_is_identity(self):
        g = grid(6, 6)
        a = Mask(g, np.random.default_rng(0).random((6, 6)) < 0.5)
        out = mask_combine(a, Mask.full(g), "intersect")
        assert np.array_equal(out.bits, a.bits)

    def test_self_difference_is_empty(self):
        g = grid(6, 6)
        a = Mask(g, np.random.default_rng(1).random((6, 6)) < 0.5)
        assert mask_combine(a, a, "difference").popcount() == 0

    def test_ops_match_cellwise_boolean(self):
        rng = np.random.default_rng(2)
        g = grid(8, 8)
        a = Mask(g, rng.random((8, 8)) < 0.5)
        b = Mask(g, rng.random((8, 8)) < 0.5)
        for op, fn in [
            ("union", lambda p, q: p or q),
            ("intersect", lambda p, q: p and q),
            ("difference", lambda p, q: p and not q),
        ]:
            got = mask_combine(a, b, op)
            for r in range(8):
                for c in range(8):
                    assert got.bits[r, c] == fn(bool(a.bits[r, c]), bool(b.bits[r, c]))

    @given(st.integers(0, 2**63 - 1))
    @settings(max_examples=50, deadline=None)
    def test_inclusion_exclusion_popcounts(self, seed):
        rng = np.random.default_rng(seed)
        g = grid(7, 5)
        a = Mask(g, rng.random((7, 5)) < 0.5)
        b = Mask(g, rng.random((7, 5)) < 0.5)
        union = mask_combine(a, b, "union").popcount()
        inter = mask_combine(a, b, "intersect").popcount()
        assert union + inter == a.popcount() + b.popcount()

    def test_misaligned_raises(self):
        with pytest.raises(AlignmentError):
            mask_combine(Mask.empty(grid(3, 3)), Mask.empty(grid(3, 4)), "union")
