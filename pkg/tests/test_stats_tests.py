import numpy as np
import pytest
import scipy.stats

from hdpca.errors import InputError
from hdpca.stats_tests import levene_test, matrix_element_groups

import oracle


class TestLeveneOracle:
    def test_frozen_hand_values(self):
        res = levene_test([oracle.LEVENE_GROUP_A, oracle.LEVENE_GROUP_B])
        assert res.statistic == pytest.approx(oracle.LEVENE_STATISTIC, abs=1e-10)
        assert res.p_value == pytest.approx(oracle.LEVENE_P_VALUE, abs=1e-8)
        assert (res.df_between, res.df_within) == (1, 6)
        assert res.group_sizes == (4, 4)
        assert not res.p_underflowed

    def test_identical_groups(self):
        g = (1.0, 2.0, 3.0, 4.0)
        res = levene_test([g, g])
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_constant_groups_read_as_no_evidence(self):
        res = levene_test([(5.0, 5.0, 5.0), (2.0, 2.0, 2.0)])
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_zero_within_spread_is_infinite_statistic(self):
        # two-point groups always have equal |deviations| within a group
        res = levene_test([(0.0, 2.0), (0.0, 200.0)])
        assert res.statistic == np.inf
        assert res.p_value == 0.0

    def test_agrees_with_scipy(self, rng):
        for _ in range(10):
            a = rng.standard_normal(rng.integers(3, 12)) * rng.uniform(0.5, 4.0)
            b = rng.standard_normal(rng.integers(3, 12)) * rng.uniform(0.5, 4.0)
            c = rng.standard_normal(rng.integers(3, 12))
            ours = levene_test([a, b, c])
            ref = scipy.stats.levene(a, b, c, center="mean")
            assert ours.statistic == pytest.approx(ref.statistic, rel=1e-10)
            assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-8)

    def test_underflow_flag(self):
        # two 2-point groups contribute no within-spread, the third does;
        # a 1e76-scale gap pushes p into (0, 1e-300): reported 0, flagged
        res = levene_test([(0.0, 2e76), (0.0, 2.0), (0.0, 1.0, 2.0)])
        assert res.statistic > 0 and np.isfinite(res.statistic)
        assert res.p_value == 0.0
        assert res.p_underflowed

    def test_validation(self):
        with pytest.raises(InputError):
            levene_test([(1.0, 2.0)])
        with pytest.raises(InputError):
            levene_test([(1.0,), (2.0, 3.0)])
        with pytest.raises(InputError):
            levene_test([(1.0, np.nan), (2.0, 3.0)])


class TestMatrixElementGroups:
    def test_hand_partition(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        b = np.array([[10.0, 20.0], [20.0, 30.0]])
        (da, db), (oa, ob) = matrix_element_groups(a, b)
        np.testing.assert_array_equal(da, [1.0, 3.0])
        np.testing.assert_array_equal(db, [10.0, 30.0])
        np.testing.assert_array_equal(oa, [2.0])
        np.testing.assert_array_equal(ob, [20.0])

    def test_each_offdiagonal_counted_once(self, rng):
        a = rng.standard_normal((5, 5))
        a = a + a.T
        (da, _), (oa, _) = matrix_element_groups(a, a)
        assert da.size == 5
        assert oa.size == 10

    def test_shape_checks(self):
        with pytest.raises(InputError):
            matrix_element_groups(np.eye(2), np.eye(3))
        with pytest.raises(InputError):
            matrix_element_groups(np.eye(1), np.eye(1))

    def test_feeds_levene(self, rng):
        a = rng.standard_normal((4, 4))
        a = a @ a.T
        (da, db), _ = matrix_element_groups(a, 2.0 * a)
        res = levene_test([da, db])
        assert np.isfinite(res.statistic)
