"""Base stationary kernels, closure operators, Gram construction, validity checks.

All kernels are callables c(x, x') backed by vectorized Gram evaluation.
Lengthscales follow the 10**omega convention: the scaled distance between
points is d = sqrt(sum_p 10**omega_p * (x_p - x'_p)**2), so larger omega
means faster decay along that dimension.

Every kernel object exposes a flat hyperparameter vector plus a
``gram_with_vjp`` reverse pass that turns an upstream Gram adjoint into a
parameter gradient (and optionally an input-point gradient, needed when a
kernel is applied to learned features).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import ContractError, NumericsError
from .neural import ParamLayout

LOG10 = float(np.log(10.0))

MATERN_NUS = (0.5, 1.5, 2.5)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ContractError(f"point set must be 2-D (n, P), got shape {X.shape}")
    return X


def pairwise_sqdiffs(X, X2=None) -> np.ndarray:
    """Per-dimension squared differences, shape (n, m, P)."""
    X = _as_matrix(X)
    X2 = X if X2 is None else _as_matrix(X2)
    if X.shape[1] != X2.shape[1]:
        raise ContractError(f"dimension mismatch: {X.shape[1]} vs {X2.shape[1]}")
    diff = X[:, None, :] - X2[None, :, :]
    return diff * diff


def scaled_distance(x, x_prime, omega) -> float:
    """sqrt(sum_p 10**omega_p * (x_p - x'_p)**2); zero iff x == x_prime."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(x_prime, dtype=float).ravel()
    w = np.asarray(omega, dtype=float).ravel()
    if not (x.size == xp.size == w.size):
        raise ContractError(
            f"scaled_distance length mismatch: x={x.size}, x'={xp.size}, omega={w.size}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xp)) and np.all(np.isfinite(w))):
        raise ContractError("scaled_distance requires finite inputs")
    d = x - xp
    return float(np.sqrt(np.sum(10.0**w * d * d)))


_TRIL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def mirror_upper(K: np.ndarray) -> np.ndarray:
    """Force exact symmetry by mirroring the upper triangle onto the lower."""
    n = K.shape[0]
    idx = _TRIL_CACHE.get(n)
    if idx is None:
        idx = np.tril_indices(n, -1)
        _TRIL_CACHE[n] = idx
    K = np.ascontiguousarray(K)
    K[idx] = K.T[idx]
    return K


def _check_finite_gram(K: np.ndarray):
    if not np.all(np.isfinite(K)):
        bad = np.argwhere(~np.isfinite(K))
        i, j = bad[0][:2]
        raise NumericsError(
            f"kernel produced a non-finite value at entry ({i}, {j}) "
            f"({bad.shape[0]} offending entries)"
        )


class Kernel:
    """Common interface: flat hyperparameters + Gram forward/reverse passes."""

    def param_layout(self) -> ParamLayout:
        raise NotImplementedError

    def param_vector(self) -> np.ndarray:
        raise NotImplementedError

    def set_param_vector(self, theta: np.ndarray) -> None:
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        return self.param_vector().size

    def random_params(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def gram(self, X, X2=None) -> np.ndarray:
        raise NotImplementedError

    def gram_with_vjp(self, X, need_x_grad: bool = False):
        """Return (C, vjp) where vjp(Cbar) -> (param_grad, x_grad or None)."""
        raise NotImplementedError

    def prior_diag(self, X) -> np.ndarray:
        """c(x, x) for each row of X."""
        X = _as_matrix(X)
        return np.array([self(X[i], X[i]) for i in range(X.shape[0])])

    def __call__(self, x, x_prime) -> float:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        xp = np.asarray(x_prime, dtype=float).reshape(1, -1)
        return float(self.gram(x, xp)[0, 0])


class IsotropicKernel(Kernel):
    """Stationary kernel that is a function of the scaled squared distance."""

    def __init__(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if not np.all(np.isfinite(omega)):
            raise ContractError("omega must be finite")
        self.omega = omega

    @property
    def input_dim(self) -> int:
        return self.omega.size

    # subclasses: kernel value and dK/du from u = scaled squared distance
    def _value(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dvalue_du(self, u: np.ndarray, K: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _extra_layout(self):
        return []

    def _extra_vector(self) -> np.ndarray:
        return np.zeros(0)

    def _set_extra(self, values: np.ndarray) -> None:
        if values.size:
            raise ContractError("kernel takes no extra parameters")

    def _extra_grad(self, Kbar, u, K) -> np.ndarray:
        return np.zeros(0)

    def _random_extra(self, rng) -> np.ndarray:
        return np.zeros(0)

    def param_layout(self) -> ParamLayout:
        return ParamLayout([("omega", (self.omega.size,))] + self._extra_layout())

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self._extra_vector()])

    def set_param_vector(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ContractError(
                f"expected {self.n_params} parameters, got {theta.size}"
            )
        p = self.omega.size
        self.omega = theta[:p].copy()
        self._set_extra(theta[p:])

    def random_params(self, rng) -> np.ndarray:
        return np.concatenate(
            [rng.uniform(-1.0, 1.0, size=self.omega.size), self._random_extra(rng)]
        )

    def _sqdist(self, sqdiffs: np.ndarray) -> np.ndarray:
        return sqdiffs @ (10.0**self.omega)

    def _check_dims(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.omega.size:
            raise ContractError(
                f"points have dimension {X.shape[1]}, kernel expects {self.omega.size}"
            )
        return X

    def gram(self, X, X2=None, sqdiffs=None) -> np.ndarray:
        symmetric = X2 is None
        X = self._check_dims(X)
        if sqdiffs is None:
            sqdiffs = pairwise_sqdiffs(X, None if symmetric else self._check_dims(X2))
        K = self._value(self._sqdist(sqdiffs))
        _check_finite_gram(K)
        return mirror_upper(K) if symmetric else K

    def gram_with_vjp(self, X, need_x_grad: bool = False, sqdiffs=None):
        X = self._check_dims(X)
        if sqdiffs is None:
            sqdiffs = pairwise_sqdiffs(X)
        scale = 10.0**self.omega
        u = sqdiffs @ scale
        K = self._value(u)
        _check_finite_gram(K)
        K = mirror_upper(K)

        def vjp(Kbar):
            Kbar = 0.5 * (Kbar + Kbar.T)
            ubar = Kbar * self._dvalue_du(u, K)
            omega_bar = LOG10 * scale * np.tensordot(ubar, sqdiffs, axes=([0, 1], [0, 1]))
            grad = np.concatenate([omega_bar, self._extra_grad(Kbar, u, K)])
            x_grad = None
            if need_x_grad:
                # u_ij = sum_p 10**w_p (x_ip - x_jp)^2 with symmetric ubar
                row = ubar.sum(axis=1)
                x_grad = 4.0 * scale * (X * row[:, None] - ubar @ X)
            return grad, x_grad

        return K, vjp


class Gaussian(IsotropicKernel):
    """exp(-d**2)."""

    def _value(self, u):
        return np.exp(-u)

    def _dvalue_du(self, u, K):
        return -K


class Matern(IsotropicKernel):
    """Half-integer Matérn kernels (nu in {1/2, 3/2, 5/2})."""

    def __init__(self, omega, nu: float = 2.5):
        super().__init__(omega)
        if nu not in MATERN_NUS:
            raise ContractError(f"nu must be one of {MATERN_NUS}, got {nu}")
        self.nu = float(nu)

    def _value(self, u):
        d = np.sqrt(u)
        if self.nu == 0.5:
            return np.exp(-d)
        if self.nu == 1.5:
            s = np.sqrt(3.0) * d
            return (1.0 + s) * np.exp(-s)
        s = np.sqrt(5.0) * d
        return (1.0 + s + (5.0 / 3.0) * u) * np.exp(-s)

    def _dvalue_du(self, u, K):
        d = np.sqrt(u)
        if self.nu == 0.5:
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(u > 0.0, -np.exp(-d) / (2.0 * d), 0.0)
            return g
        if self.nu == 1.5:
            return -1.5 * np.exp(-np.sqrt(3.0) * d)
        return -(5.0 / 6.0) * (1.0 + np.sqrt(5.0) * d) * np.exp(-np.sqrt(5.0) * d)


class PowerExponential(IsotropicKernel):
    """exp(-d**gamma) with gamma in (0, 2] via a sigmoid reparameterization."""

    def __init__(self, omega, gamma: float = 1.0):
        super().__init__(omega)
        if not (0.0 < gamma <= 2.0):
            raise ContractError(f"gamma must be in (0, 2], got {gamma}")
        # gamma = 2 * sigmoid(raw)
        self.gamma_raw = float(np.log(gamma / (2.0 - gamma))) if gamma < 2.0 else 36.0

    @property
    def gamma(self) -> float:
        return float(2.0 * expit(self.gamma_raw))

    def _extra_layout(self):
        return [("gamma_raw", ())]

    def _extra_vector(self):
        return np.array([self.gamma_raw])

    def _set_extra(self, values):
        if values.size != 1:
            raise ContractError("power-exponential kernel takes one extra parameter")
        self.gamma_raw = float(values[0])

    def _random_extra(self, rng):
        return rng.uniform(-2.0, 2.0, size=1)

    def _value(self, u):
        return np.exp(-(u ** (0.5 * self.gamma)))

    def _dvalue_du(self, u, K):
        g = self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u > 0.0, -(0.5 * g) * u ** (0.5 * g - 1.0) * K, 0.0)
        return out

    def _extra_grad(self, Kbar, u, K):
        g = self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            dK_dgamma = np.where(u > 0.0, -0.5 * u ** (0.5 * g) * np.log(u) * K, 0.0)
        dgamma_draw = 0.5 * g * (2.0 - g)
        return np.array([np.sum(Kbar * dK_dgamma) * dgamma_draw])


class Periodic(Kernel):
    """Periodic kernel exp(-2 * sum_p sin(pi * 10**(omega_p/2) * dx_p / p)**2).

    Equals exp(-2 sin(pi d / p)**2) in one dimension and stays PSD in any
    dimension by composing per-dimension periodic factors.  The period p is
    learned on a log scale.
    """

    def __init__(self, omega, period: float = 1.0):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if not np.all(np.isfinite(omega)):
            raise ContractError("omega must be finite")
        if period <= 0.0:
            raise ContractError(f"period must be positive, got {period}")
        self.omega = omega
        self.log_period = float(np.log(period))

    @property
    def period(self) -> float:
        return float(np.exp(self.log_period))

    @property
    def input_dim(self) -> int:
        return self.omega.size

    def param_layout(self) -> ParamLayout:
        return ParamLayout([("omega", (self.omega.size,)), ("log_period", ())])

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, [self.log_period]])

    def set_param_vector(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.omega.size + 1:
            raise ContractError(
                f"expected {self.omega.size + 1} parameters, got {theta.size}"
            )
        self.omega = theta[:-1].copy()
        self.log_period = float(theta[-1])

    def random_params(self, rng) -> np.ndarray:
        return np.concatenate(
            [rng.uniform(-1.0, 1.0, size=self.omega.size),
             rng.uniform(np.log(0.3), np.log(3.0), size=1)]
        )

    def _check_dims(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.omega.size:
            raise ContractError(
                f"points have dimension {X.shape[1]}, kernel expects {self.omega.size}"
            )
        return X

    def _theta(self, X, X2):
        # theta_p = pi * 10**(omega_p / 2) * (x_p - x'_p) / period, shape (n, m, P)
        diff = X[:, None, :] - X2[None, :, :]
        return (np.pi / self.period) * (10.0 ** (0.5 * self.omega)) * diff

    def gram(self, X, X2=None, sqdiffs=None) -> np.ndarray:
        symmetric = X2 is None
        X = self._check_dims(X)
        X2m = X if symmetric else self._check_dims(X2)
        th = self._theta(X, X2m)
        K = np.exp(-2.0 * np.sum(np.sin(th) ** 2, axis=2))
        _check_finite_gram(K)
        return mirror_upper(K) if symmetric else K

    def gram_with_vjp(self, X, need_x_grad: bool = False, sqdiffs=None):
        X = self._check_dims(X)
        th = self._theta(X, X)
        K = mirror_upper(np.exp(-2.0 * np.sum(np.sin(th) ** 2, axis=2)))
        _check_finite_gram(K)

        def vjp(Kbar):
            Kbar = 0.5 * (Kbar + Kbar.T)
            KK = Kbar * K
            sin2t = np.sin(2.0 * th)
            # dK/dtheta_p = -2 sin(2 theta_p) K; theta scales with
            # 10**(omega/2) (so d theta/d omega = theta ln10 / 2) and 1/p.
            t_sin = th * sin2t
            omega_bar = -LOG10 * np.tensordot(KK, t_sin, axes=([0, 1], [0, 1]))
            logp_bar = 2.0 * np.sum(KK[:, :, None] * t_sin)
            grad = np.concatenate([omega_bar, [logp_bar]])
            x_grad = None
            if need_x_grad:
                Tbar = -2.0 * KK[:, :, None] * sin2t  # adjoint of theta
                coef = (np.pi / self.period) * (10.0 ** (0.5 * self.omega))
                x_grad = coef * (Tbar.sum(axis=1) - Tbar.sum(axis=0))
            return grad, x_grad

        return K, vjp


@dataclass
class ScaleKernel(Kernel):
    """alpha * child with fixed alpha >= 0."""

    alpha: float
    child: Kernel

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ContractError(f"scale coefficient must be >= 0, got {self.alpha}")

    def param_layout(self):
        return self.child.param_layout()

    def param_vector(self):
        return self.child.param_vector()

    def set_param_vector(self, theta):
        self.child.set_param_vector(theta)

    def random_params(self, rng):
        return self.child.random_params(rng)

    def gram(self, X, X2=None):
        return self.alpha * self.child.gram(X, X2)

    def gram_with_vjp(self, X, need_x_grad=False):
        K1, vjp1 = self.child.gram_with_vjp(X, need_x_grad)

        def vjp(Kbar):
            g, xg = vjp1(self.alpha * Kbar)
            return g, xg

        return self.alpha * K1, vjp

    def prior_diag(self, X):
        return self.alpha * self.child.prior_diag(X)


@dataclass
class SumKernel(Kernel):
    """alpha1 * child1 + alpha2 * child2 with fixed non-negative coefficients."""

    child1: Kernel
    child2: Kernel
    alpha1: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ContractError("sum coefficients must be >= 0")
        if self.child1 is self.child2:
            raise ContractError("children must be distinct objects")

    def param_layout(self):
        groups = [(f"k1.{n}", s) for n, s in self.child1.param_layout().groups]
        groups += [(f"k2.{n}", s) for n, s in self.child2.param_layout().groups]
        return ParamLayout(groups)

    def param_vector(self):
        return np.concatenate([self.child1.param_vector(), self.child2.param_vector()])

    def set_param_vector(self, theta):
        n1 = self.child1.n_params
        self.child1.set_param_vector(theta[:n1])
        self.child2.set_param_vector(theta[n1:])

    def random_params(self, rng):
        return np.concatenate(
            [self.child1.random_params(rng), self.child2.random_params(rng)]
        )

    def gram(self, X, X2=None):
        return self.alpha1 * self.child1.gram(X, X2) + self.alpha2 * self.child2.gram(X, X2)

    def gram_with_vjp(self, X, need_x_grad=False):
        K1, vjp1 = self.child1.gram_with_vjp(X, need_x_grad)
        K2, vjp2 = self.child2.gram_with_vjp(X, need_x_grad)

        def vjp(Kbar):
            g1, xg1 = vjp1(self.alpha1 * Kbar)
            g2, xg2 = vjp2(self.alpha2 * Kbar)
            xg = None
            if need_x_grad:
                xg = xg1 + xg2
            return np.concatenate([g1, g2]), xg

        return self.alpha1 * K1 + self.alpha2 * K2, vjp

    def prior_diag(self, X):
        return self.alpha1 * self.child1.prior_diag(X) + self.alpha2 * self.child2.prior_diag(X)


@dataclass
class ProductKernel(Kernel):
    """child1 * child2 (elementwise on Grams)."""

    child1: Kernel
    child2: Kernel

    def __post_init__(self):
        if self.child1 is self.child2:
            raise ContractError("children must be distinct objects")

    def param_layout(self):
        groups = [(f"k1.{n}", s) for n, s in self.child1.param_layout().groups]
        groups += [(f"k2.{n}", s) for n, s in self.child2.param_layout().groups]
        return ParamLayout(groups)

    def param_vector(self):
        return np.concatenate([self.child1.param_vector(), self.child2.param_vector()])

    def set_param_vector(self, theta):
        n1 = self.child1.n_params
        self.child1.set_param_vector(theta[:n1])
        self.child2.set_param_vector(theta[n1:])

    def random_params(self, rng):
        return np.concatenate(
            [self.child1.random_params(rng), self.child2.random_params(rng)]
        )

    def gram(self, X, X2=None):
        return self.child1.gram(X, X2) * self.child2.gram(X, X2)

    def gram_with_vjp(self, X, need_x_grad=False):
        K1, vjp1 = self.child1.gram_with_vjp(X, need_x_grad)
        K2, vjp2 = self.child2.gram_with_vjp(X, need_x_grad)

        def vjp(Kbar):
            g1, xg1 = vjp1(Kbar * K2)
            g2, xg2 = vjp2(Kbar * K1)
            xg = None
            if need_x_grad:
                xg = xg1 + xg2
            return np.concatenate([g1, g2]), xg

        return K1 * K2, vjp

    def prior_diag(self, X):
        return self.child1.prior_diag(X) * self.child2.prior_diag(X)


@dataclass
class WarpKernel(Kernel):
    """child evaluated on a fixed feature map psi: R^P -> R^Z."""

    psi: object  # callable mapping (n, P) -> (n, Z)
    child: Kernel

    def _map(self, X):
        Z = np.asarray(self.psi(_as_matrix(X)), dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        return Z

    def param_layout(self):
        return self.child.param_layout()

    def param_vector(self):
        return self.child.param_vector()

    def set_param_vector(self, theta):
        self.child.set_param_vector(theta)

    def random_params(self, rng):
        return self.child.random_params(rng)

    def gram(self, X, X2=None):
        Z = self._map(X)
        Z2 = None if X2 is None else self._map(X2)
        return self.child.gram(Z, Z2)

    def gram_with_vjp(self, X, need_x_grad=False):
        if need_x_grad:
            raise ContractError("fixed-map warp kernels do not expose input gradients")
        return self.child.gram_with_vjp(self._map(X))

    def prior_diag(self, X):
        return self.child.prior_diag(self._map(X))


@dataclass
class ValidityReport:
    """Outcome of the numerical symmetry / PSD checks over point sets."""

    symmetric: bool
    min_eigenvalues: list[float]
    psd: bool
    max_abs_value: float = field(default=0.0)

    @property
    def valid(self) -> bool:
        return self.symmetric and self.psd


def _cross_gram(kernel, X) -> np.ndarray:
    """All ordered pairs c(x_i, x_j), without any symmetry enforcement."""
    if isinstance(kernel, Kernel):
        return kernel.gram(X, X)
    n = X.shape[0]
    C = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            C[i, j] = kernel(X[i], X[j])
    return C


def validate_kernel(kernel, point_sets, tol: float = 1e-8,
                    sym_tol: float = 1e-12) -> ValidityReport:
    """Numerically check symmetry and positive semi-definiteness.

    ``kernel`` may be a Kernel object or any callable c(x, x') -> float.
    Symmetry holds when |c(x,x') - c(x',x)| <= sym_tol * max(1, |c(x,x')|)
    over all ordered pairs of each set; PSD holds when every Gram's minimum
    eigenvalue is >= -tol * n * max|C|.
    """
    if tol <= 0.0:
        raise ContractError("tol must be positive")
    point_sets = [_as_matrix(S) for S in point_sets]
    if any(S.shape[0] < 1 for S in point_sets):
        raise ContractError("each point set needs at least one point")

    symmetric = True
    min_eigs: list[float] = []
    psd = True
    max_abs = 0.0
    for S in point_sets:
        n = S.shape[0]
        C = _cross_gram(kernel, S)
        max_abs_set = float(np.max(np.abs(C))) if C.size else 0.0
        max_abs = max(max_abs, max_abs_set)

        if np.any(np.abs(C - C.T) > sym_tol * np.maximum(1.0, np.abs(C))):
            symmetric = False

        try:
            eigs = np.linalg.eigvalsh(0.5 * (C + C.T))
        except np.linalg.LinAlgError as exc:
            raise NumericsError(f"eigen-decomposition failed: {exc}") from exc
        min_eig = float(eigs[0])
        min_eigs.append(min_eig)
        if min_eig < -tol * n * max(max_abs_set, np.finfo(float).tiny):
            psd = False

    return ValidityReport(symmetric=symmetric, min_eigenvalues=min_eigs,
                          psd=psd, max_abs_value=max_abs)
