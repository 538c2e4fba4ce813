import numpy as np
import pytest
from sklearn.covariance import ledoit_wolf as sklearn_lw

from hdpca.core import sym_eigen
from hdpca.errors import InputError
from hdpca.estimators import (
    EstimatorSpec,
    estimate,
    estimate_ledoit_wolf,
    estimate_mle,
    estimate_pdc_family,
)
from hdpca.metrics import explained_variance_proportions
from hdpca.pairdiff import index_pair_plan


class TestSpec:
    def test_unknown_method(self):
        with pytest.raises(InputError):
            EstimatorSpec(method="GLASSO")

    def test_unknown_normalization(self):
        with pytest.raises(InputError):
            EstimatorSpec(method="PDC", pdc_normalization="EQ2")

    def test_scope_override_only_for_pdc_family(self):
        with pytest.raises(InputError):
            EstimatorSpec(method="MLE", scaler_scope="PER_DIMENSION")
        spec = EstimatorSpec(method="MAXPDC", scaler_scope="PER_DIMENSION")
        assert spec.scaler_spec().scope == "PER_DIMENSION"

    def test_default_scaler_mapping(self):
        assert EstimatorSpec(method="PDC").scaler_spec().kind == "NONE"
        assert EstimatorSpec(method="SPDC").scaler_spec().kind == "STANDARDIZE"
        assert EstimatorSpec(method="LSPDC").scaler_spec().kind == "LOCAL"
        maxpdc = EstimatorSpec(method="MAXPDC").scaler_spec()
        assert (maxpdc.kind, maxpdc.scope) == ("MAXABS", "GLOBAL_SCALAR")
        rpdc = EstimatorSpec(method="RPDC").scaler_spec()
        assert (rpdc.kind, rpdc.scope) == ("RANGE", "PER_DIMENSION")


class TestMle:
    def test_hand_example(self):
        # two points (0,0) and (2,4): centered (+-1, +-2), S = [[1,2],[2,4]]
        x = np.array([[0.0, 0.0], [2.0, 4.0]])
        s = estimate_mle(x).matrix
        np.testing.assert_allclose(s, [[1.0, 2.0], [2.0, 4.0]])

    def test_denominator_is_n(self, rng):
        x = rng.standard_normal((7, 3))
        s = estimate_mle(x).matrix
        np.testing.assert_allclose(s, np.cov(x, rowvar=False, bias=True), rtol=1e-12)

    def test_needs_two_observations(self):
        with pytest.raises(InputError):
            estimate_mle(np.ones((1, 3)))

    def test_tag_and_n(self, rng):
        est = estimate_mle(rng.standard_normal((5, 2)))
        assert est.estimator == "MLE"
        assert est.n_used == 5


class TestLedoitWolf:
    @pytest.mark.parametrize("n,p,seed", [(5, 20, 0), (30, 10, 1), (12, 12, 2), (4, 50, 3)])
    def test_matches_reference_implementation(self, n, p, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, p)) * rng.uniform(0.5, 3.0, p) + 1.5
        ours = estimate_ledoit_wolf(x).matrix
        theirs, _ = sklearn_lw(x, assume_centered=False)
        assert np.abs(ours - theirs).max() <= 1e-10 * max(1.0, np.abs(theirs).max())

    def test_degenerate_dispersion_shrinks_nothing(self):
        # spherical sample covariance: d2 = 0 and the target equals S
        x = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        est = estimate_ledoit_wolf(x)
        np.testing.assert_allclose(est.matrix, 0.5 * np.eye(2), atol=1e-15)

    def test_full_rank_in_n_below_p(self, rng):
        x = rng.standard_normal((5, 20))
        w = np.linalg.eigvalsh(estimate_ledoit_wolf(x).matrix)
        assert w.min() > 0


class TestPdcFamily:
    def test_eq1_matches_scaled_mle(self, rng, backend):
        for n, p in [(3, 2), (6, 10), (10, 4)]:
            x = rng.standard_normal((n, p))
            pdc = estimate_pdc_family(
                x, EstimatorSpec(method="PDC", pdc_normalization="EQ1")
            ).matrix
            target = (n + 2) / (n - 1) * estimate_mle(x).matrix
            assert np.abs(pdc - target).max() <= 1e-10 * max(1.0, np.abs(target).max())

    def test_listing_normalization_constant(self, rng, backend):
        n, p = 6, 3
        x = rng.standard_normal((n, p))
        eq1 = estimate_pdc_family(
            x, EstimatorSpec(method="PDC", pdc_normalization="EQ1")
        ).matrix
        listing = estimate_pdc_family(
            x, EstimatorSpec(method="PDC", pdc_normalization="LISTING")
        ).matrix
        # both are fixed multiples of the same accumulation
        num_pairs = index_pair_plan(n).total_pairs
        ratio = (2.0 / (n**2 * (n - 1))) / (1.0 / (n * num_pairs))
        np.testing.assert_allclose(eq1, ratio * listing, rtol=1e-12)

    def test_normalization_cannot_change_proportions(self, rng, backend):
        x = rng.standard_normal((5, 8))
        props = {}
        for norm in ("EQ1", "LISTING"):
            est = estimate_pdc_family(
                x, EstimatorSpec(method="SPDC", pdc_normalization=norm)
            )
            props[norm] = explained_variance_proportions(sym_eigen(est.matrix))
        # n=5 < p=8, so the trailing proportions are rank-deficiency noise;
        # atol keeps the comparison meaningful only where values are real
        np.testing.assert_allclose(
            props["EQ1"], props["LISTING"], rtol=1e-10, atol=1e-12
        )

    def test_pdc_and_mle_share_eigenstructure(self, rng, backend):
        x = rng.standard_normal((6, 12))
        pdc_eig = sym_eigen(estimate_pdc_family(x, "PDC").matrix)
        mle_eig = sym_eigen(estimate_mle(x).matrix)
        p_props = explained_variance_proportions(pdc_eig)
        m_props = explained_variance_proportions(mle_eig)
        np.testing.assert_allclose(p_props, m_props, atol=1e-10)
        # leading eigenvectors aligned (up to the fixed sign convention)
        assert abs(pdc_eig.pc(1) @ mle_eig.pc(1)) > 1 - 1e-10

    def test_maxpdc_global_scaling_preserves_eigenstructure(self, rng, backend):
        # a single scalar divisor rescales E uniformly, so MAXPDC keeps
        # exactly the MLE proportions; per-dimension scaling must not
        x = rng.standard_normal((7, 5)) * [1.0, 4.0, 0.2, 2.0, 1.0]
        mle = explained_variance_proportions(sym_eigen(estimate_mle(x).matrix))
        maxpdc = explained_variance_proportions(
            sym_eigen(estimate_pdc_family(x, "MAXPDC").matrix)
        )
        np.testing.assert_allclose(maxpdc, mle, atol=1e-10)
        rpdc = explained_variance_proportions(
            sym_eigen(estimate_pdc_family(x, "RPDC").matrix)
        )
        assert np.abs(rpdc - mle).max() > 1e-6

    def test_rejects_non_family_method(self):
        with pytest.raises(InputError):
            estimate_pdc_family(np.ones((3, 2)), "MLE")

    def test_scaler_scope_flows_through(self, rng, backend):
        x = rng.standard_normal((5, 3))
        est = estimate_pdc_family(
            x, EstimatorSpec(method="SPDC", scaler_scope="GLOBAL_SCALAR")
        )
        assert est.scaler_scope == "GLOBAL_SCALAR"


class TestDispatch:
    def test_string_spec(self, rng):
        x = rng.standard_normal((4, 3))
        assert estimate(x, "MLE").estimator == "MLE"
        assert estimate(x, "LW").estimator == "LW"
        assert estimate(x, "LSPDC").estimator == "LSPDC"

    def test_all_methods_produce_valid_estimates(self, rng, backend):
        from hdpca.core import METHOD_ORDER

        x = rng.standard_normal((6, 9))
        for method in METHOD_ORDER:
            est = estimate(x, method)
            assert est.matrix.shape == (9, 9)
            assert np.all(np.isfinite(est.matrix))
