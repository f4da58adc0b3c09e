"""Learnable nonstationary kernels.

``SeekKernel`` composes M base kernels through input-dependent weight
functions and a bias inner product, then applies an activation:

    c(x, x') = phi( sum_m w_m(x)^T w_m(x') c_m(x, x') + b(x)^T b(x') )

Each w_m and b is a small feed-forward network, so the kernel adapts its
local structure across the input space while staying symmetric and PSD by
construction (the pre-activation is a valid kernel, and exp/sinh/cosh have
non-negative Taylor coefficients).

``GibbsKernel`` (input-dependent lengthscales) and ``DeepKernel`` (learned
feature warping of a base kernel) are the nonstationary baselines used in
the comparative experiments.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .exceptions import ContractError, NumericsError
from .kernels import Gaussian, IsotropicKernel, Kernel, mirror_upper, pairwise_sqdiffs, _as_matrix
from .neural import Mlp, MlpSpec, ParamLayout, init_params, softplus

ACTIVATIONS = ("exp", "sinh", "cosh", "identity")

# exp(30) ~ 1e13 is comfortably representable; |z| beyond this indicates a
# diverging fit rather than a value worth propagating.
Z_CLIP = 30.0


def _phi(name):
    if name == "exp":
        return np.exp
    if name == "sinh":
        return np.sinh
    if name == "cosh":
        return np.cosh
    if name == "identity":
        return lambda z: z
    raise ContractError(f"activation {name!r} not in {ACTIVATIONS}")


def _phi_grad(name, zc):
    if name == "exp":
        return np.exp(zc)
    if name == "sinh":
        return np.cosh(zc)
    if name == "cosh":
        return np.sinh(zc)
    return np.ones_like(zc)


def _check_finite_z(Z):
    if not np.all(np.isfinite(Z)):
        bad = np.argwhere(~np.isfinite(Z))
        i, j = bad[0][:2]
        raise NumericsError(f"non-finite pre-activation at pair ({i}, {j})")


class SeekKernel(Kernel):
    """Activation-wrapped, input-weighted composition of base kernels."""

    def __init__(self, bases, weight_nets, bias_net, activation: str = "exp",
                 shared_weight_net: bool = False):
        bases = tuple(bases)
        if len({id(b) for b in bases}) != len(bases):
            raise ContractError(
                "base kernels must be distinct objects (shared instances would "
                "alias hyperparameters in the flat vector)"
            )
        if activation not in ACTIVATIONS:
            raise ContractError(f"activation {activation!r} not in {ACTIVATIONS}")
        if shared_weight_net:
            if not isinstance(weight_nets, Mlp):
                raise ContractError("shared_weight_net expects a single Mlp")
            if bases and weight_nets.spec.output_dim != len(bases):
                raise ContractError(
                    "shared weight net must emit one output per base kernel"
                )
            weight_nets = (weight_nets,)
        else:
            weight_nets = tuple(weight_nets)
            if len(weight_nets) != len(bases):
                raise ContractError(
                    f"{len(bases)} base kernels but {len(weight_nets)} weight nets"
                )
        if not bases and bias_net is None:
            raise ContractError("a kernel with no base terms needs a bias function")
        dims = {net.spec.input_dim for net in weight_nets}
        if bias_net is not None:
            dims.add(bias_net.spec.input_dim)
        if len(dims) > 1:
            raise ContractError(f"networks disagree on input dimension: {sorted(dims)}")
        self.bases = bases
        self.weight_nets = weight_nets
        self.bias_net = bias_net
        self.activation = activation
        self.shared_weight_net = shared_weight_net

    @classmethod
    def default(cls, input_dim: int, bases=None, activation: str = "exp",
                weight_hidden=None, bias_hidden=None, weight_output_dim: int = 1,
                bias_output_dim: int = 2, net_activation: str = "softplus",
                shared_weight_net: bool = False):
        """Comparative-study configuration: hidden layers of width 2P,
        scalar weight outputs, two bias outputs, softplus hidden units."""
        if bases is None:
            bases = (Gaussian(np.zeros(input_dim)),)
        bases = tuple(bases)
        wh = tuple(weight_hidden) if weight_hidden is not None else (2 * input_dim,) * 2
        bh = tuple(bias_hidden) if bias_hidden is not None else (2 * input_dim,) * 2
        if shared_weight_net:
            wnets = Mlp(MlpSpec(input_dim, wh, max(len(bases), 1), net_activation))
        else:
            wnets = tuple(
                Mlp(MlpSpec(input_dim, wh, weight_output_dim, net_activation))
                for _ in bases
            )
        bnet = Mlp(MlpSpec(input_dim, bh, bias_output_dim, net_activation))
        return cls(bases, wnets, bnet, activation, shared_weight_net)

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def _nets(self):
        nets = list(self.weight_nets)
        if self.bias_net is not None:
            nets.append(self.bias_net)
        return nets

    def param_layout(self) -> ParamLayout:
        groups = []
        for m, base in enumerate(self.bases):
            groups += [(f"base{m}.{n}", s) for n, s in base.param_layout().groups]
        for m, net in enumerate(self.weight_nets):
            name = "wnet" if self.shared_weight_net else f"wnet{m}"
            groups.append((name, (net.n_params,)))
        if self.bias_net is not None:
            groups.append(("bnet", (self.bias_net.n_params,)))
        return ParamLayout(groups)

    def param_vector(self) -> np.ndarray:
        parts = [base.param_vector() for base in self.bases]
        parts += [net.params for net in self._nets()]
        return np.concatenate(parts) if parts else np.zeros(0)

    def set_param_vector(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ContractError(f"expected {self.n_params} parameters, got {theta.size}")
        off = 0
        for base in self.bases:
            n = base.n_params
            base.set_param_vector(theta[off : off + n])
            off += n
        for net in self._nets():
            net.params = theta[off : off + net.n_params].copy()
            off += net.n_params

    # Damping applied to each net's output layer at initialization.  The
    # standard fan-based init can emit weight/bias values of magnitude
    # several, putting the initial pre-activation deep into the clipped
    # region where the exp/sinh/cosh gradients vanish and every restart
    # dies on the same plateau.  Shrinking only the output layer keeps the
    # hidden features diverse while starting z at O(1).
    OUTPUT_INIT_SCALE = 0.3

    def random_params(self, rng) -> np.ndarray:
        parts = [base.random_params(rng) for base in self.bases]
        for net in self._nets():
            theta = init_params(net.spec, rng)
            fan_in, fan_out = net.spec.layer_shapes()[-1]
            theta[-(fan_in * fan_out + fan_out):] *= self.OUTPUT_INIT_SCALE
            parts.append(theta)
        return np.concatenate(parts) if parts else np.zeros(0)

    def _weights(self, X):
        """Per-base weight matrices W_m of shape (n, W_m)."""
        if self.shared_weight_net:
            out = self.weight_nets[0].forward(X)
            return [out[:, m : m + 1] for m in range(self.n_bases)]
        return [net.forward(X) for net in self.weight_nets]

    def preactivation_gram(self, X, X2=None) -> np.ndarray:
        symmetric = X2 is None
        X = _as_matrix(X)
        X2m = X if symmetric else _as_matrix(X2)
        W1, W2 = self._weights(X), (None if symmetric else self._weights(X2m))
        Z = np.zeros((X.shape[0], X2m.shape[0]))
        sq = pairwise_sqdiffs(X, None if symmetric else X2m)
        for m, base in enumerate(self.bases):
            if isinstance(base, IsotropicKernel):
                Km = base.gram(X, None if symmetric else X2m, sqdiffs=sq)
            else:
                Km = base.gram(X, None if symmetric else X2m)
            Wm = W1[m]
            Wm2 = Wm if symmetric else W2[m]
            Z += (Wm @ Wm2.T) * Km
        if self.bias_net is not None:
            B = self.bias_net.forward(X)
            B2 = B if symmetric else self.bias_net.forward(X2m)
            Z += B @ B2.T
        return mirror_upper(Z) if symmetric else Z

    def preactivation(self, x, x_prime) -> float:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        xp = np.asarray(x_prime, dtype=float).reshape(1, -1)
        return float(self.preactivation_gram(x, xp)[0, 0])

    def _apply_phi(self, Z):
        _check_finite_z(Z)
        if self.activation == "identity":
            return Z
        return _phi(self.activation)(np.clip(Z, -Z_CLIP, Z_CLIP))

    def gram(self, X, X2=None) -> np.ndarray:
        return self._apply_phi(self.preactivation_gram(X, X2))

    def prior_diag(self, X) -> np.ndarray:
        X = _as_matrix(X)
        z = np.zeros(X.shape[0])
        W = self._weights(X)
        for m, base in enumerate(self.bases):
            z += np.sum(W[m] * W[m], axis=1) * base.prior_diag(X)
        if self.bias_net is not None:
            B = self.bias_net.forward(X)
            z += np.sum(B * B, axis=1)
        return self._apply_phi(z)

    def gram_with_vjp(self, X, need_x_grad: bool = False):
        if need_x_grad:
            raise ContractError("input gradients through this kernel are not supported")
        X = _as_matrix(X)
        sq = pairwise_sqdiffs(X)
        base_results = []
        for base in self.bases:
            if isinstance(base, IsotropicKernel):
                base_results.append(base.gram_with_vjp(X, sqdiffs=sq))
            else:
                base_results.append(base.gram_with_vjp(X))

        if self.shared_weight_net:
            Wall, wcache = self.weight_nets[0].forward_cached(X)
            W = [Wall[:, m : m + 1] for m in range(self.n_bases)]
        else:
            wfwd = [net.forward_cached(X) for net in self.weight_nets]
            W = [out for out, _ in wfwd]
        Z = np.zeros((X.shape[0], X.shape[0]))
        G = []
        for m, (Km, _) in enumerate(base_results):
            Gm = W[m] @ W[m].T
            G.append(Gm)
            Z += Gm * Km
        if self.bias_net is not None:
            B, bcache = self.bias_net.forward_cached(X)
            Z += B @ B.T
        Z = mirror_upper(Z)
        _check_finite_z(Z)
        if self.activation == "identity":
            C, dphi = Z, np.ones_like(Z)
        else:
            inside = np.abs(Z) < Z_CLIP
            Zc = np.clip(Z, -Z_CLIP, Z_CLIP)
            C = _phi(self.activation)(Zc)
            dphi = _phi_grad(self.activation, Zc) * inside

        def vjp(Cbar):
            Cbar = 0.5 * (Cbar + Cbar.T)
            Zbar = Cbar * dphi
            base_grads = []
            wnet_grads = []
            shared_bar = None
            for m, (Km, base_vjp) in enumerate(base_results):
                g, _ = base_vjp(Zbar * G[m])
                base_grads.append(g)
                Wbar = 2.0 * (Zbar * Km) @ W[m]
                if self.shared_weight_net:
                    if shared_bar is None:
                        shared_bar = np.zeros_like(Wall)
                    shared_bar[:, m : m + 1] += Wbar
                else:
                    gw, _ = self.weight_nets[m].backward(wfwd[m][1], Wbar)
                    wnet_grads.append(gw)
            if self.shared_weight_net:
                if shared_bar is None:
                    shared_bar = np.zeros_like(Wall)
                gw, _ = self.weight_nets[0].backward(wcache, shared_bar)
                wnet_grads.append(gw)
            parts = base_grads + wnet_grads
            if self.bias_net is not None:
                gb, _ = self.bias_net.backward(bcache, 2.0 * Zbar @ B)
                parts.append(gb)
            return (np.concatenate(parts) if parts else np.zeros(0)), None

        return self._apply_phi(Z), vjp


class GibbsKernel(Kernel):
    """Nonstationary squared-exponential with learned per-dimension lengthscales.

    c(x, x') = prod_p sqrt(2 l_p(x) l_p(x') / (l_p(x)^2 + l_p(x')^2))
               * exp(-sum_p (x_p - x'_p)^2 / (l_p(x)^2 + l_p(x')^2))

    The lengthscale function is softplus(net(x)) + floor, so it stays
    strictly positive; with a constant net the kernel reduces to a Gaussian.
    """

    LENGTHSCALE_FLOOR = 1e-3

    def __init__(self, lengthscale_net: Mlp):
        if lengthscale_net.spec.output_dim != lengthscale_net.spec.input_dim:
            raise ContractError("lengthscale net must map R^P -> R^P")
        self.net = lengthscale_net

    @classmethod
    def default(cls, input_dim: int, hidden=None, net_activation: str = "softplus"):
        h = tuple(hidden) if hidden is not None else (4 * input_dim,) * 2
        return cls(Mlp(MlpSpec(input_dim, h, input_dim, net_activation)))

    def param_layout(self):
        return ParamLayout([("lengthscale_net", (self.net.n_params,))])

    def param_vector(self):
        return self.net.params.copy()

    def set_param_vector(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.net.n_params:
            raise ContractError(f"expected {self.net.n_params} parameters, got {theta.size}")
        self.net.params = theta.copy()

    def random_params(self, rng):
        return init_params(self.net.spec, rng)

    def lengthscales(self, X) -> np.ndarray:
        raw = self.net.forward(X)
        ls = softplus(raw) + self.LENGTHSCALE_FLOOR
        if np.any(ls <= 0.0) or not np.all(np.isfinite(ls)):
            raise ContractError("lengthscale function must be strictly positive")
        return ls

    @staticmethod
    def _combine(X, L1, X2, L2):
        diff2 = (X[:, None, :] - X2[None, :, :]) ** 2
        A = L1[:, None, :] ** 2 + L2[None, :, :] ** 2
        pref = np.sqrt(2.0 * L1[:, None, :] * L2[None, :, :] / A)
        C = np.prod(pref, axis=2) * np.exp(-np.sum(diff2 / A, axis=2))
        return C, diff2, A

    def gram(self, X, X2=None) -> np.ndarray:
        symmetric = X2 is None
        X = _as_matrix(X)
        X2m = X if symmetric else _as_matrix(X2)
        L1 = self.lengthscales(X)
        L2 = L1 if symmetric else self.lengthscales(X2m)
        C, _, _ = self._combine(X, L1, X2m, L2)
        return mirror_upper(C) if symmetric else C

    def prior_diag(self, X) -> np.ndarray:
        return np.ones(_as_matrix(X).shape[0])

    def gram_with_vjp(self, X, need_x_grad: bool = False):
        if need_x_grad:
            raise ContractError("input gradients through this kernel are not supported")
        X = _as_matrix(X)
        raw, cache = self.net.forward_cached(X)
        L = softplus(raw) + self.LENGTHSCALE_FLOOR
        C, diff2, A = self._combine(X, L, X, L)
        C = mirror_upper(C)

        def vjp(Cbar):
            Cbar = 0.5 * (Cbar + Cbar.T)
            M = Cbar * C  # adjoint of log C
            # d log C_ij / d L_ap summed over j (both argument slots):
            #   1/(2 L) - L/A + 2 L diff2 / A^2, doubled by symmetry
            row = M.sum(axis=1)
            Lbar = (row[:, None] / L
                    - 2.0 * L * np.einsum("ij,ijp->ip", M, 1.0 / A)
                    + 4.0 * L * np.einsum("ij,ijp->ip", M, diff2 / A**2))
            raw_bar = Lbar * expit(raw)
            g, _ = self.net.backward(cache, raw_bar)
            return g, None

        return C, vjp


class DeepKernel(Kernel):
    """Base kernel applied to a learned feature map (input warping)."""

    def __init__(self, feature_net: Mlp, base: Kernel):
        if getattr(base, "input_dim", feature_net.spec.output_dim) != feature_net.spec.output_dim:
            raise ContractError("base kernel dimension must match feature-net output")
        self.net = feature_net
        self.base = base

    @classmethod
    def default(cls, input_dim: int, hidden=None, feature_dim: int | None = None,
                base: Kernel | None = None, net_activation: str = "softplus"):
        fd = feature_dim if feature_dim is not None else input_dim
        h = tuple(hidden) if hidden is not None else (4 * input_dim,) * 2
        net = Mlp(MlpSpec(input_dim, h, fd, net_activation))
        return cls(net, base if base is not None else Gaussian(np.zeros(fd)))

    def param_layout(self):
        groups = [("feature_net", (self.net.n_params,))]
        groups += [(f"base.{n}", s) for n, s in self.base.param_layout().groups]
        return ParamLayout(groups)

    def param_vector(self):
        return np.concatenate([self.net.params, self.base.param_vector()])

    def set_param_vector(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ContractError(f"expected {self.n_params} parameters, got {theta.size}")
        n = self.net.n_params
        self.net.params = theta[:n].copy()
        self.base.set_param_vector(theta[n:])

    def random_params(self, rng):
        return np.concatenate([init_params(self.net.spec, rng),
                               self.base.random_params(rng)])

    def features(self, X) -> np.ndarray:
        return self.net.forward(X)

    def gram(self, X, X2=None) -> np.ndarray:
        Z = self.features(X)
        Z2 = None if X2 is None else self.features(X2)
        return self.base.gram(Z, Z2)

    def prior_diag(self, X) -> np.ndarray:
        return self.base.prior_diag(self.features(X))

    def gram_with_vjp(self, X, need_x_grad: bool = False):
        if need_x_grad:
            raise ContractError("input gradients through this kernel are not supported")
        Z, cache = self.net.forward_cached(X)
        K, base_vjp = self.base.gram_with_vjp(Z, need_x_grad=True)

        def vjp(Kbar):
            base_grad, Zbar = base_vjp(Kbar)
            net_grad, _ = self.net.backward(cache, Zbar)
            return np.concatenate([net_grad, base_grad]), None

        return K, vjp
