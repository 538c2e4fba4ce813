import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdpca.errors import InputError
from hdpca.pairdiff import (
    ScalerSpec,
    accumulate_E,
    apply_scaler,
    fit_scaler,
    index_pair_plan,
    pairwise_differences,
)

import oracle

ALL_SPECS = [
    ScalerSpec("NONE"),
    ScalerSpec("STANDARDIZE"),
    ScalerSpec("STANDARDIZE", "GLOBAL_SCALAR"),
    ScalerSpec("STANDARDIZE", "PER_PAIR"),
    ScalerSpec("LOCAL"),
    ScalerSpec("LOCAL", "GLOBAL_SCALAR"),
    ScalerSpec("MAXABS"),
    ScalerSpec("MAXABS", "PER_DIMENSION"),
    ScalerSpec("MAXABS", "PER_PAIR"),
    ScalerSpec("RANGE"),
    ScalerSpec("RANGE", "GLOBAL_SCALAR"),
    ScalerSpec("RANGE", "PER_PAIR"),
]


class TestDifferenceSet:
    def test_counts_and_layout(self):
        x = np.arange(12.0).reshape(4, 3)
        ds = pairwise_differences(x)
        assert ds.diffs.shape == (12, 3)
        np.testing.assert_array_equal(
            ds.diffs[ds.row_index(2, 0)], x[2] - x[0]
        )

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 8), st.integers(1, 5), st.integers(0, 9999))
    def test_antisymmetry(self, n, p, seed):
        x = np.random.default_rng(seed).standard_normal((n, p))
        ds = pairwise_differences(x)
        for i in range(n):
            for j in range(n):
                if i != j:
                    np.testing.assert_array_equal(
                        ds.diffs[ds.row_index(i, j)],
                        -ds.diffs[ds.row_index(j, i)],
                    )

    def test_rejects_single_observation(self):
        with pytest.raises(InputError):
            pairwise_differences(np.ones((1, 3)))

    def test_row_index_validation(self):
        ds = pairwise_differences(np.ones((3, 1)))
        with pytest.raises(InputError):
            ds.row_index(1, 1)
        with pytest.raises(InputError):
            ds.row_index(0, 3)

    def test_group_rows(self):
        x = np.array([[0.0], [1.0], [5.0]])
        ds = pairwise_differences(x)
        np.testing.assert_array_equal(ds.group(1), [[1.0], [-4.0]])


class TestIndexPlan:
    @pytest.mark.parametrize("n", [2, 3, 4, 7, 20])
    def test_total_matches_two_term_formula(self, n):
        plan = index_pair_plan(n)
        assert plan.total_pairs == n * (n - 1) + n * math.comb(n - 1, 2)
        assert plan.pairs_per_group == len(plan.pairs)

    def test_plan_layout_small(self):
        plan = index_pair_plan(4)
        # diagonal pairs first, then the strict upper pairs
        assert plan.pairs == ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))

    def test_plan_rejects_tiny_n(self):
        with pytest.raises(InputError):
            index_pair_plan(1)


class TestScalerSpec:
    def test_default_scopes(self):
        assert ScalerSpec("STANDARDIZE").scope == "PER_DIMENSION"
        assert ScalerSpec("LOCAL").scope == "PER_DIMENSION"
        assert ScalerSpec("RANGE").scope == "PER_DIMENSION"
        assert ScalerSpec("MAXABS").scope == "GLOBAL_SCALAR"

    def test_rejects_unknown_kind_and_scope(self):
        with pytest.raises(InputError):
            ScalerSpec("MEDIAN")
        with pytest.raises(InputError):
            ScalerSpec("RANGE", "PER_ROW")

    def test_rejects_impossible_combinations(self):
        with pytest.raises(InputError):
            ScalerSpec("LOCAL", "PER_PAIR")
        with pytest.raises(InputError):
            ScalerSpec("NONE", "PER_PAIR")

    def test_rejects_bad_floor(self):
        with pytest.raises(InputError):
            ScalerSpec("RANGE", epsilon_floor=0.0)


class TestFitApply:
    def test_standardize_makes_unit_columns(self, rng):
        x = rng.standard_normal((6, 3)) * [1.0, 10.0, 0.1]
        ds = pairwise_differences(x)
        st_ = fit_scaler(ds, ScalerSpec("STANDARDIZE"))
        scaled = np.vstack([
            apply_scaler(ds.diffs[k], None, st_) for k in range(ds.diffs.shape[0])
        ])
        np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.std(axis=0), 1.0, rtol=1e-12)

    def test_maxabs_global_bounds_all_entries(self, rng):
        x = rng.standard_normal((5, 4)) * 7.0
        ds = pairwise_differences(x)
        st_ = fit_scaler(ds, ScalerSpec("MAXABS"))
        scaled = np.vstack([
            apply_scaler(ds.diffs[k], None, st_) for k in range(ds.diffs.shape[0])
        ])
        assert np.abs(scaled).max() == pytest.approx(1.0)

    def test_range_per_dimension(self, rng):
        x = rng.standard_normal((5, 2))
        ds = pairwise_differences(x)
        st_ = fit_scaler(ds, ScalerSpec("RANGE"))
        expected = 2.0 * (x.max(axis=0) - x.min(axis=0))
        np.testing.assert_allclose(st_.scale, expected, rtol=1e-15)

    def test_constant_column_floors_to_one(self):
        x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        ds = pairwise_differences(x)
        for kind in ("STANDARDIZE", "MAXABS", "RANGE"):
            st_ = fit_scaler(ds, ScalerSpec(kind, "PER_DIMENSION"))
            assert st_.scale[1] == 1.0
            row = apply_scaler(np.array([2.0, 0.0]), None, st_)
            assert row[1] == 0.0  # untouched by the unit denominator

    def test_local_uses_leave_one_out_variances(self, rng):
        x = rng.standard_normal((6, 3))
        ds = pairwise_differences(x)
        st_ = fit_scaler(ds, ScalerSpec("LOCAL"))
        for i in range(6):
            loo = np.delete(x, i, axis=0)
            np.testing.assert_allclose(st_.local_var[i], loo.var(axis=0), rtol=1e-10)

    def test_local_duplicate_observations_floor(self):
        # duplicated rows make every leave-one-out variance zero at n=2
        x = np.array([[2.0, -1.0], [2.0, -1.0]])
        ds = pairwise_differences(x)
        st_ = fit_scaler(ds, ScalerSpec("LOCAL"))
        row = apply_scaler(np.array([3.0, 4.0]), (0, 1), st_)
        np.testing.assert_array_equal(row, [3.0, 4.0])

    def test_per_pair_standardize_row(self):
        spec = ScalerSpec("STANDARDIZE", "PER_PAIR")
        st_ = fit_scaler(pairwise_differences(np.ones((2, 4))), spec)
        row = np.array([1.0, 2.0, 3.0, 4.0])
        out = apply_scaler(row, None, st_)
        assert out.mean() == pytest.approx(0.0, abs=1e-15)
        assert out.std() == pytest.approx(1.0)

    def test_none_is_identity(self, rng):
        spec = ScalerSpec("NONE")
        st_ = fit_scaler(pairwise_differences(rng.standard_normal((3, 2))), spec)
        row = np.array([5.0, -2.0])
        np.testing.assert_array_equal(apply_scaler(row, None, st_), row)


class TestAccumulateE:
    def test_hand_example_two_observations(self, backend):
        # x = (1), (3): two groups of one row (+-2); plan = [(0,0)] per group
        # M = 4 + 4 = 8, E = 8; pair count 2
        acc = accumulate_E(np.array([[1.0], [3.0]]))
        assert acc.matrix[0, 0] == pytest.approx(8.0)
        assert acc.num_pairs == 2

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.kind}-{s.scope}")
    def test_matches_explicit_construction(self, spec, backend):
        rng = np.random.default_rng(1000 + ALL_SPECS.index(spec))
        for _ in range(3):
            n = int(rng.integers(2, 8))
            p = int(rng.integers(1, 6))
            x = rng.standard_normal((n, p)) * rng.uniform(0.1, 4.0)
            ref = oracle.explicit_E(x, spec)
            got = accumulate_E(x, spec).matrix
            assert oracle.rel_frobenius_gap(got, ref) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 7), st.integers(1, 5), st.integers(0, 99999))
    def test_property_unscaled_equals_oracle(self, n, p, seed):
        x = np.random.default_rng(seed).standard_normal((n, p))
        ref = oracle.explicit_E(x)
        got = accumulate_E(x).matrix
        assert oracle.rel_frobenius_gap(got, ref) < 1e-12

    def test_result_is_symmetric_and_counts(self, rng, backend):
        x = rng.standard_normal((6, 4))
        acc = accumulate_E(x, ScalerSpec("STANDARDIZE"))
        assert np.array_equal(acc.matrix, acc.matrix.T)
        assert acc.n == 6
        assert acc.num_pairs == index_pair_plan(6).total_pairs

    def test_rejects_single_observation(self):
        with pytest.raises(InputError):
            accumulate_E(np.ones((1, 4)))

    def test_duplicate_rows_are_finite_everywhere(self, backend):
        # all scalers must survive a dataset of identical observations
        x = np.ones((4, 3))
        for spec in ALL_SPECS:
            acc = accumulate_E(x, spec)
            assert np.all(np.isfinite(acc.matrix))
            np.testing.assert_array_equal(acc.matrix, np.zeros((3, 3)))
