import numpy as np
import pytest

from seekgp import ContractError, Mlp, MlpSpec, ParamLayout, forward, init_params, param_count


class TestInit:
    def test_deterministic_given_seed(self):
        spec = MlpSpec(2, (4, 4), 1)
        assert np.array_equal(init_params(spec, 123), init_params(spec, 123))

    def test_seed_changes_vector(self):
        spec = MlpSpec(2, (4, 4), 1)
        assert np.any(init_params(spec, 0) != init_params(spec, 1))

    def test_param_count_by_layer_arithmetic(self):
        # (2*4+4) + (4*4+4) + (4*1+1)
        spec = MlpSpec(2, (4, 4), 1)
        assert param_count(spec) == 37
        assert init_params(spec, 0).size == 37

    def test_param_count_random_specs(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            dims = [int(rng.integers(1, 7)) for _ in range(int(rng.integers(2, 5)))]
            spec = MlpSpec(dims[0], tuple(dims[1:-1]) or (3,), dims[-1])
            expected = 0
            sizes = (spec.input_dim, *spec.hidden, spec.output_dim)
            for a, b in zip(sizes[:-1], sizes[1:]):
                expected += a * b + b
            assert spec.n_params == expected

    def test_biases_start_at_zero(self):
        spec = MlpSpec(3, (5,), 2)
        theta = init_params(spec, 7)
        # layer 1 biases live right after the 3x5 weight block
        assert np.array_equal(theta[15:20], np.zeros(5))

    def test_bounds_follow_fan_scaling(self):
        spec = MlpSpec(10, (10,), 10)
        theta = init_params(spec, 3)
        a = np.sqrt(6.0 / 20.0)
        assert np.max(np.abs(theta)) <= a


class TestForward:
    def test_identity_network_is_affine(self):
        # with identity activations the whole net composes to one affine map;
        # superposition of centered outputs must hold to near machine precision
        rng = np.random.default_rng(1)
        spec = MlpSpec(3, (4, 4), 2, hidden_activation="identity")
        net = Mlp(spec, init_params(spec, 5))
        f0 = net.forward(np.zeros((1, 3)))[0]
        for _ in range(20):
            x, y = rng.standard_normal(3), rng.standard_normal(3)
            lhs = net.forward((x + y)[None, :])[0] - f0
            rhs = (net.forward(x[None, :])[0] - f0) + (net.forward(y[None, :])[0] - f0)
            assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)

    def test_zero_params_constant_output(self):
        spec = MlpSpec(2, (3,), 2, hidden_activation="softplus")
        net = Mlp(spec)  # all parameters zero
        rng = np.random.default_rng(2)
        outs = np.array([net.forward(rng.standard_normal((1, 2)))[0] for _ in range(5)])
        assert np.allclose(outs, outs[0], atol=1e-15)

    def test_softplus_hidden_strictly_positive(self):
        spec = MlpSpec(2, (4,), 1, hidden_activation="softplus")
        net = Mlp(spec, init_params(spec, 11))
        X = np.random.default_rng(3).standard_normal((10, 2))
        _, cache = net.forward_cached(X)
        hidden = cache[0][2]
        assert np.all(hidden > 0.0)

    def test_dimension_mismatch_raises(self):
        spec = MlpSpec(3, (2,), 1)
        with pytest.raises(ContractError):
            Mlp(spec).forward(np.zeros((4, 2)))
        with pytest.raises(ContractError):
            forward(spec, np.zeros(spec.n_params), np.zeros((2, 3)))

    def test_single_vector_forward(self):
        spec = MlpSpec(2, (3,), 2)
        theta = init_params(spec, 9)
        out = forward(spec, theta, np.array([0.4, -1.0]))
        assert out.shape == (2,)
        batch = Mlp(spec, theta).forward(np.array([[0.4, -1.0]]))
        assert np.array_equal(out, batch[0])

    def test_forward_matches_manual_composition(self):
        spec = MlpSpec(2, (3,), 1, hidden_activation="tanh")
        theta = init_params(spec, 4)
        net = Mlp(spec, theta)
        W1 = theta[:6].reshape(2, 3)
        b1 = theta[6:9]
        W2 = theta[9:12].reshape(3, 1)
        b2 = theta[12:]
        x = np.array([0.3, -0.7])
        expected = np.tanh(x @ W1 + b1) @ W2 + b2
        assert np.allclose(net.forward(x[None, :])[0], expected, rtol=1e-15)


class TestParamLayout:
    def test_empty_layout(self):
        layout = ParamLayout([])
        assert layout.size == 0
        assert layout.flatten({}).size == 0
        assert layout.unflatten(np.zeros(0)) == {}

    def test_single_scalar_group(self):
        layout = ParamLayout([("a", ())])
        assert layout.size == 1
        v = layout.flatten({"a": 2.5})
        assert v.shape == (1,) and v[0] == 2.5

    def test_segment_offsets(self):
        layout = ParamLayout([("a", (3,)), ("b", (5,))])
        assert layout.size == 8
        assert layout.offset("a") == 0
        assert layout.offset("b") == 3

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(5)
        layout = ParamLayout([("w", (2, 3)), ("b", (3,)), ("s", ())])
        arrays = {"w": rng.standard_normal((2, 3)),
                  "b": rng.standard_normal(3),
                  "s": 1.25}
        vec = layout.flatten(arrays)
        back = layout.unflatten(vec)
        assert np.array_equal(back["w"], arrays["w"])
        assert np.array_equal(back["b"], arrays["b"])
        assert back["s"] == arrays["s"]
        assert np.array_equal(layout.flatten(back), vec)

    def test_mismatch_raises(self):
        layout = ParamLayout([("a", (2,))])
        with pytest.raises(ContractError):
            layout.unflatten(np.zeros(3))
        with pytest.raises(ContractError):
            layout.flatten({"a": np.zeros(3)})
        with pytest.raises(ContractError):
            ParamLayout([("a", (1,)), ("a", (2,))])
