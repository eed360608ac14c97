import math
import os
import subprocess
import sys

import numpy as np
import pytest

from mocapo import moo
from mocapo.moo import _numba_kernels, _numpy_kernels
from oracles import brute_force_front, monte_carlo_hv, rect_union_hv


class TestBackendSelection:
    def test_default_backend_is_numba(self):
        if os.environ.get("MOCAPO_DISABLE_NUMBA"):
            pytest.skip("numba disabled for this session")
        assert moo.backend_name() == "numba"

    def test_env_flag_forces_numpy_fallback(self):
        env = dict(os.environ, MOCAPO_DISABLE_NUMBA="1")
        out = subprocess.run(
            [sys.executable, "-c", "from mocapo import moo; print(moo.backend_name())"],
            capture_output=True, text=True, env=env, check=True,
        )
        assert out.stdout.strip() == "numpy"


class TestDominates:
    def test_one_strict_one_equal(self):
        assert moo.dominates((0.2, 0.3), (0.2, 0.5))

    def test_incomparable_both_directions(self):
        assert not moo.dominates((0.2, 0.3), (0.3, 0.2))
        assert not moo.dominates((0.3, 0.2), (0.2, 0.3))

    def test_irreflexive(self):
        assert not moo.dominates((0.2, 0.3), (0.2, 0.3))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            moo.dominates((1.0,), (1.0, 2.0))

    def test_sentinel_comparison(self):
        assert moo.dominates((0.5, 4.0), (math.inf, math.inf))

    def test_relation_properties_on_random_vectors(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            # Discretized coordinates force frequent component ties.
            a, b, c = (tuple(rng.integers(0, 4, size=3) / 3.0) for _ in range(3))
            assert not moo.dominates(a, a)
            if moo.dominates(a, b):
                assert not moo.dominates(b, a)
            if moo.dominates(a, b) and moo.dominates(b, c):
                assert moo.dominates(a, c)


class TestNonDominatedSort:
    def test_four_point_fixture(self):
        part = moo.non_dominated_sort([(1, 1), (2, 2), (1, 2), (2, 1)])
        assert part.fronts == ((0,), (2, 3), (1,))

    def test_identical_points_share_one_front(self):
        part = moo.non_dominated_sort([(1, 1)] * 4)
        assert part.fronts == ((0, 1, 2, 3),)

    def test_single_point(self):
        assert moo.non_dominated_sort([(3, 4)]).fronts == ((0,),)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            moo.non_dominated_sort([])

    def test_fronts_partition_input(self):
        rng = np.random.default_rng(3)
        pts = rng.random((40, 2))
        part = moo.non_dominated_sort(pts)
        flat = sorted(i for front in part.fronts for i in front)
        assert flat == list(range(40))

    def test_front_one_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 51))
            pts = np.round(rng.random((n, 2)), 2)  # ties likely
            assert moo.non_dominated_indices(pts) == brute_force_front(pts)


class TestCrowdingDistance:
    def test_three_point_fixture(self):
        cd = moo.crowding_distance([(0, 1), (0.4, 0.5), (1, 0)])
        assert cd[0] == math.inf and cd[2] == math.inf
        assert cd[1] == pytest.approx(2.0, abs=1e-15)

    def test_singleton_front(self):
        assert moo.crowding_distance([(0.3, 0.7)]) == [math.inf]

    def test_pair_both_infinite(self):
        assert moo.crowding_distance([(0, 1), (1, 0)]) == [math.inf, math.inf]

    def test_identical_triple_middle_gets_zero(self):
        cd = moo.crowding_distance([(0, 1), (0, 1), (0, 1)])
        assert cd[0] == math.inf and cd[2] == math.inf
        assert cd[1] == 0.0

    def test_translation_and_scaling_invariance(self):
        rng = np.random.default_rng(5)
        front = rng.random((8, 2))
        base = moo.crowding_distance(front)
        moved = front * np.array([3.5, 0.25]) + np.array([-2.0, 40.0])
        assert moo.crowding_distance(moved) == pytest.approx(base, rel=1e-12)


class TestHypervolume2D:
    def test_full_unit_square(self):
        assert moo.hypervolume_2d([(0, 0)], (1, 1)) == 1.0

    def test_two_rectangle_overlap(self):
        assert moo.hypervolume_2d([(0.25, 0.75), (0.75, 0.25)], (1, 1)) == pytest.approx(
            0.3125, abs=1e-15
        )

    def test_point_at_reference_is_zero(self):
        assert moo.hypervolume_2d([(1.0, 1.0)], (1, 1)) == 0.0

    def test_points_outside_reference_box_are_excluded(self):
        inside_only = moo.hypervolume_2d([(0.5, 0.5)], (1, 1))
        with_outside = moo.hypervolume_2d([(0.5, 0.5), (0.2, 1.4), (1.7, 0.1)], (1, 1))
        assert with_outside == inside_only

    def test_empty_front_is_zero(self):
        assert moo.hypervolume_2d([], (1, 1)) == 0.0

    def test_matches_rectangle_union_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(1, 30))
            pts = rng.random((n, 2))
            assert moo.hypervolume_2d(pts, (1.1, 1.1)) == pytest.approx(
                rect_union_hv(pts, (1.1, 1.1)), abs=1e-12
            )

    def test_monotone_under_point_addition(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            pts = rng.random((10, 2)).tolist()
            hv = moo.hypervolume_2d(pts, (1.1, 1.1))
            fresh = [float(v) for v in rng.random(2)]
            hv_more = moo.hypervolume_2d(pts + [fresh], (1.1, 1.1))
            assert hv_more >= hv - 1e-15
            # A dominated addition changes nothing.
            base = pts[0]
            dominated = [base[0] + 0.01, base[1] + 0.01]
            assert moo.hypervolume_2d(pts + [dominated], (2.0, 2.0)) == pytest.approx(
                moo.hypervolume_2d(pts, (2.0, 2.0)), abs=1e-15
            )

    def test_against_monte_carlo(self):
        rng = np.random.default_rng(19)
        pts = rng.random((12, 2))
        hv = moo.hypervolume_2d(pts, (1.1, 1.1))
        estimate, se = monte_carlo_hv(pts, (1.1, 1.1), 200_000, seed=23)
        assert abs(hv - estimate) <= 3 * se


class TestKernelParity:
    """The numba and numpy paths must be interchangeable."""

    def test_nds_ranks_identical(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            pts = np.round(rng.random((int(rng.integers(1, 40)), 2)), 2)
            np.testing.assert_array_equal(
                _numba_kernels.nds_ranks(pts), _numpy_kernels.nds_ranks(pts)
            )

    def test_crowding_identical(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            pts = np.round(rng.random((int(rng.integers(1, 20)), 2)), 2)
            a = _numba_kernels.crowding_distances(pts)
            b = _numpy_kernels.crowding_distances(pts)
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_hypervolume_close(self):
        rng = np.random.default_rng(37)
        for _ in range(25):
            pts = rng.random((int(rng.integers(1, 40)), 2))
            a = _numba_kernels.hypervolume_2d(pts, 1.1, 1.1)
            b = _numpy_kernels.hypervolume_2d(pts, 1.1, 1.1)
            assert a == pytest.approx(b, abs=1e-12)


class TestWeakerDominance:
    def test_restriction_dominates(self):
        assert moo.weakly_dominates_on_subset(
            blocks_more={1, 2},
            blocks_less={1},
            restricted_more=(-0.6, 90.0),
            restricted_less=(-0.5, 100.0),
        )

    def test_restriction_incomparable(self):
        assert not moo.weakly_dominates_on_subset(
            {1, 2}, {1}, (-0.6, 110.0), (-0.5, 100.0)
        )

    def test_equal_restrictions_do_not_dominate(self):
        assert not moo.weakly_dominates_on_subset(
            {1, 2}, {1}, (-0.5, 100.0), (-0.5, 100.0)
        )

    def test_subset_precondition_enforced(self):
        with pytest.raises(ValueError):
            moo.weakly_dominates_on_subset({1}, {1}, (0, 0), (1, 1))
        with pytest.raises(ValueError):
            moo.weakly_dominates_on_subset({1}, {1, 2}, (0, 0), (1, 1))
