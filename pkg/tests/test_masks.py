import numpy as np
import pytest

from pseudobox.masks import InstanceMask, decode_rle, encode_rle, shrink_mask


def rect_mask(h, w, u0, u1, v0, v1, instance_id=0, class_name="Car"):
    grid = np.zeros((h, w), dtype=bool)
    grid[v0 : v1 + 1, u0 : u1 + 1] = True
    return InstanceMask(instance_id, class_name, grid)


class TestRle:
    def test_known_grid(self):
        grid = np.array([[0, 1], [1, 0]], dtype=bool)
        # column-major flat: [0, 1, 1, 0] -> runs 1,2,1 starting with zeros
        assert encode_rle(grid) == [1, 2, 1]
        np.testing.assert_array_equal(decode_rle([1, 2, 1], (2, 2)), grid)

    def test_leading_one_run_has_zero_prefix(self):
        grid = np.ones((2, 2), dtype=bool)
        assert encode_rle(grid) == [0, 4]

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            h, w = rng.integers(1, 40, size=2)
            grid = rng.random((h, w)) < 0.3
            np.testing.assert_array_equal(decode_rle(encode_rle(grid), (h, w)), grid)

    def test_count_sum_mismatch_rejected(self):
        with pytest.raises(ValueError):
            decode_rle([1, 2], (2, 2))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            decode_rle([-1, 5], (2, 2))


class TestInstanceMask:
    def test_bounds_derived(self):
        m = rect_mask(300, 300, 100, 200, 50, 150)
        assert m.bounds == (100, 200, 50, 150)

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            InstanceMask(0, "Car", np.zeros((4, 4), dtype=bool))


class TestShrinkMask:
    def test_direct_evaluation(self):
        # bounds u 100-200, v 50-150, factor 0.3 -> u in [135, 165], v in [85, 115]
        m = rect_mask(300, 300, 100, 200, 50, 150)
        s = shrink_mask(m, 0.3)
        assert s.retained == pytest.approx((135.0, 165.0, 85.0, 115.0))
        vs, us = np.nonzero(s.grid)
        assert us.min() == 135 and us.max() == 165
        assert vs.min() == 85 and vs.max() == 115

    def test_identity_at_factor_one(self):
        m = rect_mask(60, 80, 10, 50, 5, 40)
        s = shrink_mask(m, 1.0)
        np.testing.assert_array_equal(s.grid, m.grid)
        assert s.retained == pytest.approx((10.0, 50.0, 5.0, 40.0))

    def test_single_pixel_mask_retained_for_any_factor(self):
        grid = np.zeros((10, 10), dtype=bool)
        grid[4, 7] = True
        m = InstanceMask(1, "Pedestrian", grid)
        for factor in (0.1, 0.3, 1.0):
            s = shrink_mask(m, factor)
            assert s.grid.sum() == 1 and s.grid[4, 7]

    def test_two_pixel_wide_mask_can_empty(self):
        # retained interval (u_min+0.35, u_min+0.65) holds no integer pixel
        m = rect_mask(10, 10, 3, 4, 3, 4)
        s = shrink_mask(m, 0.3)
        assert s.is_empty

    def test_subset_and_monotonic_in_factor(self):
        rng = np.random.default_rng(5)
        grid = rng.random((50, 70)) < 0.4
        grid[25, 35] = True
        m = InstanceMask(0, "Car", grid)
        prev_area = -1.0
        for factor in (0.2, 0.5, 0.8, 1.0):
            s = shrink_mask(m, factor)
            assert not (s.grid & ~m.grid).any()  # pixels subset of source
            u_lo, u_hi, v_lo, v_hi = s.retained
            area = max(u_hi - u_lo, 0.0) * max(v_hi - v_lo, 0.0)
            assert area >= prev_area
            prev_area = area

    def test_factor_validation(self):
        m = rect_mask(10, 10, 2, 8, 2, 8)
        for bad in (0.0, -0.5, 1.2):
            with pytest.raises(ValueError):
                shrink_mask(m, bad)
