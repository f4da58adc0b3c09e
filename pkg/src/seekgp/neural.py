"""Small feed-forward networks with a flat-parameter-vector view.

These approximators supply the input-dependent weight, bias, lengthscale,
and feature functions used by the learnable kernels.  Everything is plain
numpy; forward passes are batched over rows and every network carries an
explicit backward pass so the marginal-likelihood gradient can be chained
through it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import ContractError

HIDDEN_ACTIVATIONS = ("softplus", "tanh", "identity")


def softplus(t):
    """Numerically stable log(1 + exp(t))."""
    return np.logaddexp(0.0, t)


def _activation(name):
    if name == "softplus":
        return softplus
    if name == "tanh":
        return np.tanh
    if name == "identity":
        return lambda t: t
    raise ContractError(f"unknown activation {name!r}; expected one of {HIDDEN_ACTIVATIONS}")


def _activation_grad(name, pre, post):
    # derivative evaluated from the cached pre/post activations
    if name == "softplus":
        return expit(pre)
    if name == "tanh":
        return 1.0 - post * post
    if name == "identity":
        return np.ones_like(pre)
    raise ContractError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a fully connected network.

    Hidden layers use ``hidden_activation``; the output layer is always
    affine (identity activation).
    """

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    hidden_activation: str = "softplus"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ContractError("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden):
            raise ContractError("hidden layer widths must be positive")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ContractError(
                f"hidden_activation {self.hidden_activation!r} not in {HIDDEN_ACTIVATIONS}"
            )

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) for each affine layer, input to output."""
        dims = (self.input_dim, *self.hidden, self.output_dim)
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_shapes())


def param_count(spec: MlpSpec) -> int:
    return spec.n_params


def init_params(spec: MlpSpec, seed) -> np.ndarray:
    """Deterministic random initialization.

    Weights are uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out));
    biases start at zero.  ``seed`` may be an int or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in spec.layer_shapes():
        a = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-a, a, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks) if chunks else np.zeros(0)


class Mlp:
    """A spec plus a flat parameter vector, with batched forward/backward."""

    def __init__(self, spec: MlpSpec, params: np.ndarray | None = None):
        self.spec = spec
        if params is None:
            params = np.zeros(spec.n_params)
        params = np.asarray(params, dtype=float)
        if params.shape != (spec.n_params,):
            raise ContractError(
                f"parameter vector has length {params.size}, spec needs {spec.n_params}"
            )
        self.params = params

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def _layers(self):
        """Views (W, b) per layer into the flat parameter vector."""
        out = []
        off = 0
        for fan_in, fan_out in self.spec.layer_shapes():
            w = self.params[off : off + fan_in * fan_out].reshape(fan_in, fan_out)
            off += fan_in * fan_out
            b = self.params[off : off + fan_out]
            off += fan_out
            out.append((w, b))
        return out

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Batched forward pass; X is (n, input_dim), result (n, output_dim)."""
        out, _ = self.forward_cached(X, keep=False)
        return out

    def forward_cached(self, X: np.ndarray, keep: bool = True):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.spec.input_dim:
            raise ContractError(
                f"input has {X.shape[1]} features, network expects {self.spec.input_dim}"
            )
        layers = self._layers()
        act = _activation(self.spec.hidden_activation)
        a = X
        cache = [] if keep else None
        for i, (w, b) in enumerate(layers):
            z = a @ w + b
            post = act(z) if i < len(layers) - 1 else z
            if keep:
                cache.append((a, z, post))
            a = post
        return a, cache

    def backward(self, cache, out_bar: np.ndarray, need_input_grad: bool = False):
        """Accumulate d(sum(out_bar * out))/d(params) from a cached forward.

        Returns (flat parameter gradient, input gradient or None).
        """
        layers = self._layers()
        n_layers = len(layers)
        grads = [None] * n_layers
        a_bar = np.asarray(out_bar, dtype=float)
        for i in range(n_layers - 1, -1, -1):
            a_in, z, post = cache[i]
            if i < n_layers - 1:
                z_bar = a_bar * _activation_grad(self.spec.hidden_activation, z, post)
            else:
                z_bar = a_bar
            w, _ = layers[i]
            grads[i] = (a_in.T @ z_bar, z_bar.sum(axis=0))
            if i > 0 or need_input_grad:
                a_bar = z_bar @ w.T
        flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
        return flat, (a_bar if need_input_grad else None)


def forward(spec: MlpSpec, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Single-vector forward pass; returns a vector of length output_dim."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError("forward expects a single input vector")
    return Mlp(spec, params).forward(x[None, :])[0]


class ParamLayout:
    """Maps named parameter groups to segments of one flat vector."""

    def __init__(self, groups):
        self.groups = [(str(name), tuple(int(s) for s in shape)) for name, shape in groups]
        names = [name for name, _ in self.groups]
        if len(set(names)) != len(names):
            raise ContractError("duplicate group names in layout")
        self._offsets = {}
        off = 0
        for name, shape in self.groups:
            self._offsets[name] = off
            off += int(np.prod(shape, dtype=int)) if shape else 1
        self.size = off

    def offset(self, name: str) -> int:
        return self._offsets[name]

    def flatten(self, arrays) -> np.ndarray:
        """Concatenate named arrays in layout order into one vector."""
        vec = np.empty(self.size)
        for name, shape in self.groups:
            a = np.asarray(arrays[name], dtype=float)
            expected = shape if shape else ()
            if a.shape != expected:
                raise ContractError(
                    f"group {name!r} has shape {a.shape}, layout expects {expected}"
                )
            n = a.size if shape else 1
            off = self._offsets[name]
            vec[off : off + n] = np.ravel(a)
        return vec

    def unflatten(self, vector: np.ndarray) -> dict[str, np.ndarray]:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.size,):
            raise ContractError(
                f"vector has length {vector.size}, layout expects {self.size}"
            )
        out = {}
        for name, shape in self.groups:
            off = self._offsets[name]
            if shape:
                n = int(np.prod(shape, dtype=int))
                out[name] = vector[off : off + n].reshape(shape).copy()
            else:
                out[name] = np.float64(vector[off])
        return out
