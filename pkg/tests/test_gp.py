import math

import numpy as np
import pytest

from seekgp import (
    ContractError,
    Dataset,
    Gaussian,
    GpModel,
    Matern,
    SeekKernel,
    Standardizer,
    fit_standardizer,
    predict_interval,
)


class TestDataset:
    def test_rejects_non_finite(self):
        with pytest.raises(ContractError):
            Dataset(np.array([[0.0], [np.nan]]), np.array([1.0, 2.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ContractError):
            Dataset(np.zeros((3, 1)), np.zeros(2))


class TestStandardizer:
    def test_two_point_target(self):
        data = Dataset(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]))
        std = fit_standardizer(data)
        assert std.y_mean == 2.0
        assert std.y_std == 1.0  # population convention
        transformed = std.transform(data)
        assert np.array_equal(transformed.y, np.array([-1.0, 1.0]))

    def test_transformed_train_is_centered_unit(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.uniform(0, 10, (40, 3)), rng.standard_normal(40) * 4 + 2)
        std = fit_standardizer(data)
        ts = std.transform(data)
        assert np.allclose(ts.X.mean(axis=0), 0.0, atol=1e-10)
        assert np.allclose(ts.X.std(axis=0), 1.0, atol=1e-10)
        assert abs(ts.y.mean()) < 1e-10 and abs(ts.y.std() - 1.0) < 1e-10

    def test_apply_inverse_roundtrip(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.uniform(-5, 5, (30, 2)), rng.standard_normal(30))
        std = fit_standardizer(data)
        ts = std.transform(data)
        assert np.allclose(std.inverse_x(ts.X), data.X, atol=1e-12)
        assert np.allclose(std.inverse_y(ts.y), data.y, atol=1e-12)

    def test_constant_column_guarded(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        data = Dataset(X, np.arange(10.0))
        with pytest.warns(RuntimeWarning):
            std = fit_standardizer(data)
        ts = std.transform(data)
        assert np.array_equal(ts.X[:, 0], np.zeros(10))
        assert std.degenerate_columns == (0,)


class TestNll:
    def test_single_zero_target(self):
        data = Dataset(np.array([[0.0]]), np.array([0.0]))
        model = GpModel(Gaussian(np.zeros(1)), log_noise=-np.inf, jitter=0.0)
        assert model.nll(data) == 0.0

    def test_single_point_hand_value(self):
        # C_lambda = [2] with unit prior variance and unit noise
        data = Dataset(np.array([[0.0]]), np.array([1.0]))
        model = GpModel(Gaussian(np.zeros(1)), log_noise=0.0, jitter=0.0)
        assert model.nll(data) == pytest.approx(0.5 * math.log(2.0) + 0.25, abs=1e-12)

    def test_duplicate_points_finite(self):
        data = Dataset(np.array([[0.2], [0.2]]), np.array([0.5, 0.6]))
        model = GpModel(Gaussian(np.zeros(1)), log_noise=np.log(1e-2))
        assert np.isfinite(model.nll(data))

    def test_row_order_invariance(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0, 1, (25, 2))
        y = rng.standard_normal(25)
        model = GpModel(Matern(np.zeros(2), 2.5), log_noise=np.log(0.05))
        base = model.nll(Dataset(X, y))
        for _ in range(5):
            perm = rng.permutation(25)
            assert model.nll(Dataset(X[perm], y[perm])) == pytest.approx(base, abs=1e-8)

    def test_jitter_escalation_reports_failure(self):
        # a wildly indefinite "kernel" cannot be rescued by the jitter cap
        class Broken(Gaussian):
            def gram(self, X, X2=None, sqdiffs=None):
                n = np.atleast_2d(X).shape[0]
                return np.full((n, n), -1.0) + 0.5 * np.eye(n)

        from seekgp import NumericsError
        data = Dataset(np.linspace(0, 1, 5)[:, None], np.zeros(5))
        model = GpModel(Broken(np.zeros(1)), log_noise=-np.inf)
        with pytest.raises(NumericsError):
            model.nll(data)


class TestPosterior:
    def test_training_point_interpolation_noiseless(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, (12, 1))
        y = np.sin(6 * X[:, 0])
        data = Dataset(X, y)
        model = GpModel(Matern(np.array([1.0]), 1.5), log_noise=-np.inf, jitter=1e-8)
        pred = model.posterior(data, X)
        assert np.max(np.abs(pred.mean - y)) < 1e-6
        assert np.max(pred.variance) < 1e-6

    def test_far_query_reverts_to_prior(self):
        data = Dataset(np.array([[0.0], [0.1]]), np.array([1.0, 0.8]))
        model = GpModel(Gaussian(np.zeros(1)), log_noise=np.log(1e-4))
        pred = model.posterior(data, np.array([[40.0]]))
        assert abs(pred.mean[0]) < 1e-6
        assert pred.variance[0] == pytest.approx(1.0, abs=1e-6)

    def test_single_point_closed_form(self):
        lam2 = 0.3
        y0 = 1.7
        data = Dataset(np.array([[0.0]]), np.array([y0]))
        model = GpModel(Gaussian(np.zeros(1)), log_noise=np.log(lam2), jitter=0.0)
        xs = np.array([[0.4]])
        k = Gaussian(np.zeros(1))(np.array([0.0]), np.array([0.4]))
        pred = model.posterior(data, xs)
        assert pred.mean[0] == pytest.approx(k / (1 + lam2) * y0, rel=1e-12)

    def test_posterior_variance_bounded_by_prior(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, (20, 2))
        y = rng.standard_normal(20)
        model = GpModel(Gaussian(np.zeros(2)), log_noise=np.log(0.01))
        Xs = rng.uniform(-1, 2, (50, 2))
        pred = model.posterior(Dataset(X, y), Xs)
        prior = model.kernel.prior_diag(Xs)
        assert np.all(pred.variance <= prior + 1e-10)

    def test_noise_never_shrinks_heldout_variance(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(0, 1, (15, 1))
        y = rng.standard_normal(15)
        Xs = rng.uniform(0, 1, (20, 1))
        data = Dataset(X, y)
        kernel = Gaussian(np.zeros(1))
        var_small = GpModel(kernel, log_noise=np.log(1e-6), jitter=0.0).posterior(data, Xs).variance
        var_large = GpModel(kernel, log_noise=np.log(1e-1), jitter=0.0).posterior(data, Xs).variance
        assert np.all(var_large >= var_small - 1e-12)

    def test_seek_posterior_runs(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(0, 1, (15, 1))
        y = np.sin(5 * X[:, 0])
        k = SeekKernel.default(1)
        k.set_param_vector(k.random_params(rng))
        pred = GpModel(k, log_noise=np.log(1e-2)).posterior(Dataset(X, y), X)
        assert np.all(np.isfinite(pred.mean))
        assert np.all(pred.variance >= 0.0)


class TestPredictInterval:
    def test_zero_variance_degenerates(self):
        lo, up = predict_interval(np.array([1.5]), np.array([0.0]))
        assert lo[0] == up[0] == 1.5

    def test_standard_normal_quantile(self):
        lo, up = predict_interval(np.array([0.0]), np.array([1.0]))
        assert (lo[0], up[0]) == (-1.96, 1.96)

    def test_width_monotone_in_variance(self):
        var = np.linspace(0, 4, 30)
        lo, up = predict_interval(np.zeros(30), var)
        widths = up - lo
        assert np.all(np.diff(widths) >= 0.0)

    def test_variance_mode_uses_variance_directly(self):
        lo, up = predict_interval(np.array([0.0]), np.array([4.0]), mode="variance")
        assert (lo[0], up[0]) == (-1.96 * 4.0, 1.96 * 4.0)
        lo, up = predict_interval(np.array([0.0]), np.array([4.0]), mode="sqrt")
        assert (lo[0], up[0]) == (-1.96 * 2.0, 1.96 * 2.0)

    def test_negative_variance_rejected(self):
        with pytest.raises(ContractError):
            predict_interval(np.zeros(1), np.array([-0.1]))
