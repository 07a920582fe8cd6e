"""Estimator plug-ins against least-squares oracles.

The covariance blocks are checked against numpy.cov and an explicit lstsq
residual fit before any envelope machinery is trusted on top of them.
"""

import numpy as np
import pytest

from envest import estimators, linalg, simulate
from envest.errors import (
    InvalidDimension,
    InvalidInput,
    InvalidUhat,
    SingularCovariance,
)


def make_data(seed, d=6, u=2, n=400):
    inst = simulate.generate_instance(d, u, seed)
    return inst, simulate.sample_data(inst, n, seed + 1)


class TestRegressionData:
    def test_reshapes_vectors(self):
        data = estimators.RegressionData(x=np.arange(5.0), y=np.arange(5.0))
        assert data.x.shape == (5, 1)
        assert data.y.shape == (5, 1)
        assert data.n == 5

    def test_row_mismatch(self):
        with pytest.raises(InvalidInput):
            estimators.RegressionData(x=np.zeros((4, 2)), y=np.zeros((5, 1)))

    def test_too_few_rows(self):
        with pytest.raises(InvalidInput):
            estimators.RegressionData(x=None, y=np.zeros((1, 3)))

    def test_non_finite(self):
        y = np.zeros((4, 2))
        y[0, 0] = np.nan
        with pytest.raises(InvalidInput):
            estimators.RegressionData(x=None, y=y)


class TestCovarianceKit:
    def test_matches_numpy_cov(self):
        rng = np.random.default_rng(41)
        x = rng.standard_normal((50, 3))
        y = rng.standard_normal((50, 4))
        kit = estimators.covariance_kit(estimators.RegressionData(x, y))
        n = 50
        np.testing.assert_allclose(
            kit.s_x, np.cov(x.T, ddof=0), atol=1e-12
        )
        np.testing.assert_allclose(
            kit.s_y, np.cov(y.T, ddof=0), atol=1e-12
        )
        joint = np.cov(np.hstack([x, y]).T, ddof=0)
        np.testing.assert_allclose(kit.s_xy, joint[:3, 3:], atol=1e-12)
        assert kit.n == n

    def test_conditional_is_lstsq_residual_covariance(self):
        # S_{Y|X} must equal the covariance of residuals from regressing
        # centered Y on centered X
        rng = np.random.default_rng(42)
        x = rng.standard_normal((80, 2))
        y = x @ rng.standard_normal((2, 3)) + rng.standard_normal((80, 3))
        kit = estimators.covariance_kit(estimators.RegressionData(x, y))
        xc = x - x.mean(axis=0)
        yc = y - y.mean(axis=0)
        coef = np.linalg.lstsq(xc, yc, rcond=None)[0]
        resid = yc - xc @ coef
        np.testing.assert_allclose(
            kit.s_y_given_x, resid.T @ resid / 80, atol=1e-10
        )

    def test_singular_predictors(self):
        x = np.ones((10, 2))  # zero variance, singular S_X
        y = np.random.default_rng(43).standard_normal((10, 2))
        with pytest.raises(SingularCovariance):
            estimators.covariance_kit(estimators.RegressionData(x, y))

    def test_needs_x(self):
        data = estimators.RegressionData(x=None, y=np.eye(3))
        with pytest.raises(InvalidInput):
            estimators.covariance_kit(data)


class TestResponseEnvelope:
    def test_projection_property(self):
        _, data = make_data(50)
        fit = estimators.response_envelope(data, 2)
        g = fit.gamma
        np.testing.assert_allclose(g.T @ g, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(g @ g.T @ fit.beta_env, fit.beta_env, atol=1e-10)

    def test_full_dimension_equals_ols(self):
        _, data = make_data(51)
        fit = estimators.response_envelope(data, 6)
        np.testing.assert_allclose(fit.beta_env, fit.beta_ols, atol=1e-12)
        kit = estimators.covariance_kit(data)
        np.testing.assert_allclose(fit.sigma_env, kit.s_y_given_x, atol=1e-12)

    def test_ols_against_lstsq(self):
        _, data = make_data(52)
        fit = estimators.response_envelope(data, 2)
        xc = data.x - data.x.mean(axis=0)
        yc = data.y - data.y.mean(axis=0)
        coef = np.linalg.lstsq(xc, yc, rcond=None)[0].T
        np.testing.assert_allclose(fit.beta_ols, coef, atol=1e-8)

    def test_alpha_centers_predictions(self):
        _, data = make_data(53)
        fit = estimators.response_envelope(data, 2)
        pred = fit.alpha_hat + data.x @ fit.beta_env.T
        np.testing.assert_allclose(pred.mean(axis=0), data.y.mean(axis=0), atol=1e-10)

    def test_recovers_true_span_at_scale(self):
        inst = simulate.generate_instance(6, 2, 54)
        data = simulate.sample_data(inst, 20000, 55)
        fit = estimators.response_envelope(data, 2)
        assert linalg.subspace_distance(fit.gamma, inst.gamma) < 0.1

    def test_u_bounds(self):
        _, data = make_data(56)
        with pytest.raises(InvalidDimension):
            estimators.response_envelope(data, 0)
        with pytest.raises(InvalidDimension):
            estimators.response_envelope(data, 7)


class TestPartialEnvelope:
    @staticmethod
    def multi_x_data(seed, n=300):
        rng = np.random.default_rng(seed)
        inst = simulate.generate_instance(5, 2, seed)
        x = rng.standard_normal((n, 3))
        eps = rng.multivariate_normal(np.zeros(5), inst.m, size=n)
        beta = np.column_stack([inst.beta, rng.standard_normal((5, 2))])
        y = x @ beta.T + eps
        return estimators.RegressionData(x, y)

    def test_block_shapes(self):
        data = self.multi_x_data(60)
        fit = estimators.partial_envelope(data, 1, 2)
        assert fit.beta_env.shape == (5, 1)
        assert fit.beta_ols.shape == (5, 3)
        assert fit.p1 == 1

    def test_all_predictors_equals_response(self):
        data = self.multi_x_data(61)
        full = estimators.partial_envelope(data, 3, 2)
        resp = estimators.response_envelope(data, 2)
        np.testing.assert_allclose(full.gamma, resp.gamma, atol=1e-9)
        np.testing.assert_allclose(full.beta_env, resp.beta_env, atol=1e-9)

    def test_full_dimension_equals_ols_block(self):
        data = self.multi_x_data(62)
        fit = estimators.partial_envelope(data, 2, 5)
        np.testing.assert_allclose(fit.beta_env, fit.beta_ols[:, :2], atol=1e-12)

    def test_p1_bounds(self):
        data = self.multi_x_data(63)
        with pytest.raises(InvalidDimension):
            estimators.partial_envelope(data, 0, 2)
        with pytest.raises(InvalidDimension):
            estimators.partial_envelope(data, 4, 2)


class TestPredictorEnvelope:
    @staticmethod
    def swapped_data(seed, n=500):
        # regress the scalar on the envelope-structured vector, so the
        # predictor-side reduction has known true dimension
        inst = simulate.generate_instance(6, 2, seed)
        samp = simulate.sample_data(inst, n, seed + 1)
        return inst, estimators.RegressionData(x=samp.y, y=samp.x)

    def test_full_dimension_equals_ols(self):
        _, data = self.swapped_data(70)
        fit = estimators.predictor_envelope(data, 6)
        np.testing.assert_allclose(fit.beta_env, fit.beta_ols, atol=1e-10)

    def test_beta_is_ols_through_metric_projection(self):
        _, data = self.swapped_data(71)
        fit = estimators.predictor_envelope(data, 2)
        kit = estimators.covariance_kit(data)
        proj = linalg.project(fit.gamma, metric=kit.s_x)
        np.testing.assert_allclose(fit.beta_env, fit.beta_ols @ proj.T, atol=1e-10)

    def test_recovers_true_span_at_scale(self):
        inst = simulate.generate_instance(6, 2, 72)
        samp = simulate.sample_data(inst, 20000, 73)
        data = estimators.RegressionData(x=samp.y, y=samp.x)
        fit = estimators.predictor_envelope(data, 2)
        assert linalg.subspace_distance(fit.gamma, inst.gamma) < 0.1


class TestMeanEnvelopes:
    def test_mean_projects_ybar(self):
        rng = np.random.default_rng(80)
        y = rng.standard_normal((200, 5)) + np.array([3.0, 0, 0, 0, 0])
        fit = estimators.mean_envelope(y, 2)
        g = fit.gamma
        np.testing.assert_allclose(
            fit.beta_env[:, 0], g @ g.T @ y.mean(axis=0), atol=1e-12
        )
        np.testing.assert_allclose(fit.beta_ols[:, 0], y.mean(axis=0), atol=1e-12)

    def test_mean_full_dimension_is_sample_mean(self):
        rng = np.random.default_rng(81)
        y = rng.standard_normal((100, 4)) + 1.0
        fit = estimators.mean_envelope(y, 4)
        np.testing.assert_allclose(fit.beta_env[:, 0], y.mean(axis=0), atol=1e-12)

    def test_constrained_gamma_orthogonal_to_ones(self):
        rng = np.random.default_rng(82)
        y = rng.standard_normal((150, 5)) + np.array([2.0, -1.0, 0, 0, -1.0])
        fit = estimators.constrained_mean_envelope(y, 2)
        ones = np.ones(5) / np.sqrt(5)
        assert np.abs(fit.gamma.T @ ones).max() < 1e-10

    def test_constrained_reduced_space_oracle(self):
        # fitting by hand in the complement-of-ones coordinates must give
        # the same span and projected mean
        rng = np.random.default_rng(83)
        y = rng.standard_normal((300, 4)) + np.array([1.0, 2.0, -3.0, 0.0])
        fit = estimators.constrained_mean_envelope(y, 2)
        ones = np.ones((4, 1)) / 2.0
        b0 = linalg.orthonormal_complement(ones)
        reduced = estimators.mean_envelope(y @ b0, 2)
        np.testing.assert_allclose(
            linalg.subspace_distance(fit.gamma, b0 @ reduced.gamma), 0.0, atol=1e-9
        )
        np.testing.assert_allclose(
            fit.beta_env[:, 0], b0 @ reduced.beta_env[:, 0], atol=1e-9
        )

    def test_constrained_full_dimension_is_centered_mean(self):
        rng = np.random.default_rng(84)
        y = rng.standard_normal((100, 4)) + 2.0
        fit = estimators.constrained_mean_envelope(y, 3)
        q1 = np.eye(4) - np.ones((4, 4)) / 4
        np.testing.assert_allclose(fit.beta_env[:, 0], q1 @ y.mean(axis=0), atol=1e-10)

    def test_constrained_u_cap(self):
        y = np.random.default_rng(85).standard_normal((50, 4))
        with pytest.raises(InvalidDimension):
            estimators.constrained_mean_envelope(y, 4)


class TestFitBasisGuards:
    def test_ridge_retry_on_singular_m(self):
        # rank-deficient M: the ridge bump must kick in and be reported
        rng = np.random.default_rng(90)
        q = linalg.orthonormalize(rng.standard_normal((5, 4)))
        m = q @ np.diag([4.0, 3.0, 2.0, 1.0]) @ q.T  # rank 4 in 5 dims
        b = rng.standard_normal(5)
        fit, _ = estimators._fit_basis(m, m + np.outer(b, b), 2, "onedim", None)
        assert "Ridged" in fit.diagnostics

    def test_invalid_uhat(self):
        m = np.diag([2.0, 1.0])
        m_plus_u = np.diag([1.0, 1.0])  # U-hat = diag(-1, 0)
        with pytest.raises(InvalidUhat):
            estimators._fit_basis(m, m_plus_u, 1, "onedim", None)

    def test_unknown_algorithm(self):
        _, data = make_data(91)
        with pytest.raises(InvalidInput):
            estimators.response_envelope(data, 2, algo="sgd")


class TestDimensionSelection:
    def test_bic_scores_shape_and_determinism(self):
        _, data = make_data(95)
        sel1 = estimators.select_dimension_bic(data, "response", 4)
        sel2 = estimators.select_dimension_bic(data, "response", 4)
        assert len(sel1.scores) == 4
        assert sel1.u == sel2.u
        np.testing.assert_allclose(sel1.scores, sel2.scores, atol=0)

    def test_bic_umax_bounds(self):
        _, data = make_data(96)
        with pytest.raises(InvalidDimension):
            estimators.select_dimension_bic(data, "response", 7)

    def test_bic_picks_true_dimension(self):
        # known generator: (d, u) = (10, 3), fresh data each replication
        inst = simulate.generate_instance(10, 3, 42)
        hits = 0
        reps = 50
        for i in range(reps):
            data = simulate.sample_data(inst, 800, 9000 + i)
            sel = estimators.select_dimension_bic(data, "response", 6)
            hits += sel.u == 3
        assert hits >= 0.8 * reps

    def test_cv_requires_predictive_kind(self):
        y = np.random.default_rng(97).standard_normal((30, 3))
        data = estimators.RegressionData(x=None, y=y)
        with pytest.raises(InvalidInput):
            estimators.select_dimension_cv(data, "mean", 2)

    def test_cv_fold_bounds(self):
        _, data = make_data(98)
        with pytest.raises(InvalidInput):
            estimators.select_dimension_cv(data, "response", 3, folds=1)

    def test_cv_deterministic_given_seed(self):
        _, data = make_data(99, n=120)
        a = estimators.select_dimension_cv(data, "response", 3, folds=4, seed=5)
        b = estimators.select_dimension_cv(data, "response", 3, folds=4, seed=5)
        assert a.u == b.u
        np.testing.assert_allclose(a.scores, b.scores, atol=0)

    def test_cv_finds_predictor_dimension_nearby(self):
        # known generator on the predictor side: (d, u) = (8, 3); the CV
        # curve flattens past the true dimension, so within-one is the
        # meaningful property
        inst = simulate.generate_instance(8, 3, 42)
        hits = 0
        reps = 30
        for i in range(reps):
            samp = simulate.sample_data(inst, 400, 9100 + i)
            data = estimators.RegressionData(x=samp.y, y=samp.x)
            sel = estimators.select_dimension_cv(
                data, "predictor", 5, folds=5, seed=9100 + i
            )
            hits += abs(sel.u - 3) <= 1
        assert hits >= 0.7 * reps
