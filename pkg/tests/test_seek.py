import numpy as np
import pytest

from seekgp import (
    ContractError,
    DeepKernel,
    Gaussian,
    GibbsKernel,
    Matern,
    Mlp,
    MlpSpec,
    Periodic,
    SeekKernel,
    validate_kernel,
)


def constant_net(input_dim, outputs):
    """A network that ignores its input and emits the given constants."""
    spec = MlpSpec(input_dim, (1,), len(outputs), hidden_activation="identity")
    net = Mlp(spec)
    # all weights zero; final-layer bias carries the constants
    net.params[-len(outputs):] = outputs
    return net


def random_seek(rng, P=None, M=None, activation=None):
    P = int(rng.integers(1, 4)) if P is None else P
    M = int(rng.integers(0, 4)) if M is None else M
    activation = (activation or
                  ["exp", "sinh", "cosh", "identity"][rng.integers(4)])
    makes = [lambda: Gaussian(np.zeros(P)),
             lambda: Matern(np.zeros(P), [0.5, 1.5, 2.5][rng.integers(3)]),
             lambda: Periodic(np.zeros(P))]
    bases = tuple(makes[rng.integers(len(makes))]() for _ in range(M))
    k = SeekKernel.default(P, bases=bases, activation=activation)
    k.set_param_vector(k.random_params(rng))
    return k


class TestPreactivation:
    def test_unit_weight_zero_bias_reduces_to_base(self):
        base = Gaussian(np.zeros(2))
        k = SeekKernel((base,), (constant_net(2, [1.0]),), constant_net(2, [0.0]),
                       activation="identity")
        rng = np.random.default_rng(0)
        ref = Gaussian(np.zeros(2))
        for _ in range(20):
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            assert k.preactivation(x, y) == pytest.approx(ref(x, y), rel=1e-15)

    def test_bias_only_constant_one(self):
        k = SeekKernel((), (), constant_net(3, [1.0]), activation="identity")
        rng = np.random.default_rng(1)
        for _ in range(10):
            x, y = rng.standard_normal(3), rng.standard_normal(3)
            assert k.preactivation(x, y) == pytest.approx(1.0, abs=1e-15)

    def test_symmetric_by_construction(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            k = random_seek(rng)
            P = k.weight_nets[0].spec.input_dim if k.weight_nets else k.bias_net.spec.input_dim
            x, y = rng.standard_normal(P), rng.standard_normal(P)
            zxy, zyx = k.preactivation(x, y), k.preactivation(y, x)
            assert abs(zxy - zyx) <= 1e-12 * max(1.0, abs(zxy))

    def test_empty_kernel_rejected(self):
        with pytest.raises(ContractError):
            SeekKernel((), (), None, activation="exp")


class TestSeekEval:
    def test_exp_of_zero_networks(self):
        k = SeekKernel((), (), constant_net(2, [0.0]), activation="exp")
        x = np.array([0.3, 0.4])
        assert k(x, x) == 1.0

    def test_sinh_of_zero(self):
        k = SeekKernel((), (), constant_net(2, [0.0]), activation="sinh")
        x = np.array([0.3, 0.4])
        assert k(x, x) == 0.0

    def test_identity_reduction_chain(self):
        base = Matern(np.zeros(1), 2.5)
        k = SeekKernel((base,), (constant_net(1, [1.0]),), constant_net(1, [0.0]),
                       activation="identity")
        ref = Matern(np.zeros(1), 2.5)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x, y = rng.standard_normal(1), rng.standard_normal(1)
            assert k(x, y) == pytest.approx(ref(x, y), rel=1e-15)

    def test_gram_matches_pointwise(self):
        rng = np.random.default_rng(4)
        k = random_seek(rng, P=2, M=2, activation="exp")
        X = rng.standard_normal((6, 2))
        K = k.gram(X)
        for i in range(6):
            for j in range(6):
                assert K[i, j] == pytest.approx(k(X[i], X[j]), rel=1e-12)

    def test_prior_diag_matches_gram_diagonal(self):
        rng = np.random.default_rng(5)
        for act in ("exp", "sinh", "cosh", "identity"):
            k = random_seek(rng, P=2, M=2, activation=act)
            X = rng.standard_normal((8, 2))
            assert np.allclose(k.prior_diag(X), np.diag(k.gram(X)), rtol=1e-12)

    def test_shared_weight_net_mode(self):
        rng = np.random.default_rng(6)
        bases = (Gaussian(np.zeros(2)), Matern(np.zeros(2), 1.5))
        k = SeekKernel.default(2, bases=bases, shared_weight_net=True)
        k.set_param_vector(k.random_params(rng))
        X = rng.standard_normal((10, 2))
        report = validate_kernel(k, [X])
        assert report.symmetric and report.psd

    def test_duplicate_base_objects_rejected(self):
        g = Gaussian(np.zeros(1))
        with pytest.raises(ContractError):
            SeekKernel.default(1, bases=(g, g))

    def test_validity_across_activations(self):
        rng = np.random.default_rng(7)
        for act in ("exp", "sinh", "cosh", "identity"):
            for _ in range(10):
                k = random_seek(rng, activation=act)
                P = (k.weight_nets[0].spec.input_dim if k.weight_nets
                     else k.bias_net.spec.input_dim)
                X = rng.uniform(-2, 2, (int(rng.integers(2, 20)), P))
                report = validate_kernel(k, [X])
                assert report.symmetric and report.psd, (act, report.min_eigenvalues)


class TestGibbs:
    def test_constant_lengthscale_reduces_to_gaussian(self):
        # zero network parameters give l(x) = softplus(0) + floor everywhere
        k = GibbsKernel.default(2)
        ell = float(np.log(2.0) + GibbsKernel.LENGTHSCALE_FLOOR)
        omega = np.full(2, np.log10(1.0 / (2.0 * ell**2)))
        ref = Gaussian(omega)
        rng = np.random.default_rng(8)
        for _ in range(30):
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            assert k(x, y) == pytest.approx(ref(x, y), rel=1e-10)

    def test_diagonal_is_one(self):
        rng = np.random.default_rng(9)
        k = GibbsKernel.default(3)
        k.set_param_vector(k.random_params(rng))
        for _ in range(10):
            x = rng.standard_normal(3)
            assert k(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(10)
        k = GibbsKernel.default(2)
        k.set_param_vector(k.random_params(rng))
        for _ in range(50):
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            cxy, cyx = k(x, y), k(y, x)
            assert abs(cxy - cyx) <= 1e-12 * max(1.0, abs(cxy))

    def test_psd_on_random_nets(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            k = GibbsKernel.default(2)
            k.set_param_vector(k.random_params(rng))
            X = rng.uniform(-2, 2, (16, 2))
            report = validate_kernel(k, [X])
            assert report.symmetric and report.psd

    def test_net_shape_contract(self):
        with pytest.raises(ContractError):
            GibbsKernel(Mlp(MlpSpec(2, (4,), 3)))


class TestDeepKernel:
    def test_identity_feature_map_matches_base(self):
        spec = MlpSpec(2, (2,), 2, hidden_activation="identity")
        net = Mlp(spec)
        eye = np.eye(2).ravel()
        net.params[:4] = eye           # first layer weights = identity
        net.params[6:10] = eye         # output layer weights = identity
        k = DeepKernel(net, Gaussian(np.zeros(2)))
        ref = Gaussian(np.zeros(2))
        rng = np.random.default_rng(12)
        for _ in range(20):
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            assert k(x, y) == pytest.approx(ref(x, y), rel=1e-14)

    def test_diagonal_is_one(self):
        rng = np.random.default_rng(13)
        k = DeepKernel.default(3)
        k.set_param_vector(k.random_params(rng))
        x = rng.standard_normal(3)
        assert k(x, x) == 1.0

    def test_random_feature_net_stays_valid(self):
        rng = np.random.default_rng(14)
        k = DeepKernel.default(2)
        k.set_param_vector(k.random_params(rng))
        X = rng.uniform(-2, 2, (20, 2))
        report = validate_kernel(k, [X])
        assert report.symmetric and report.psd
