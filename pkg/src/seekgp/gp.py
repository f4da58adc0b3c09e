"""Zero-mean Gaussian-process regression.

Covers train/test standardization, the negative log marginal likelihood

    L = 1/2 log|C + lambda^2 I| + 1/2 y^T (C + lambda^2 I)^{-1} y,

the exact posterior mean/variance, and 95% prediction intervals.  The
noise variance is log-parameterized and a relative jitter with automatic
escalation keeps Cholesky factorizations alive on near-singular Grams.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.stats import norm

from .exceptions import ContractError, NumericsError
from .kernels import Kernel, _as_matrix

INTERVAL_MODES = ("sqrt", "variance")


@dataclass
class Dataset:
    """Inputs X (N, P) and targets y (N,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = _as_matrix(self.X)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.size:
            raise ContractError(
                f"{self.X.shape[0]} input rows but {self.y.size} targets"
            )
        if self.X.shape[0] < 1:
            raise ContractError("dataset must contain at least one sample")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ContractError("dataset contains non-finite entries")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class Standardizer:
    """Column-wise location/scale transform fitted on a training set.

    Uses the population standard deviation (divide by N).  Zero-variance
    columns get a unit scale so they map to exactly zero.
    """

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    degenerate_columns: tuple[int, ...] = ()

    EPS = 1e-12

    @classmethod
    def fit(cls, data: Dataset) -> "Standardizer":
        x_mean = data.X.mean(axis=0)
        x_std = data.X.std(axis=0)
        degenerate = tuple(int(i) for i in np.nonzero(x_std <= cls.EPS)[0])
        y_std = float(data.y.std())
        if degenerate:
            warnings.warn(
                f"zero-variance input column(s) {degenerate}; using unit scale",
                RuntimeWarning,
            )
            x_std = x_std.copy()
            x_std[list(degenerate)] = 1.0
        if y_std <= cls.EPS:
            warnings.warn("zero-variance targets; using unit scale", RuntimeWarning)
            y_std = 1.0
        return cls(x_mean, x_std, float(data.y.mean()), y_std, degenerate)

    def transform_x(self, X) -> np.ndarray:
        return (_as_matrix(X) - self.x_mean) / self.x_std

    def transform(self, data: Dataset) -> Dataset:
        return Dataset(self.transform_x(data.X), (data.y - self.y_mean) / self.y_std)

    def inverse_x(self, Xs) -> np.ndarray:
        return _as_matrix(Xs) * self.x_std + self.x_mean

    def inverse_y(self, ys) -> np.ndarray:
        return np.asarray(ys, dtype=float) * self.y_std + self.y_mean

    def inverse_y_var(self, var_s) -> np.ndarray:
        return np.asarray(var_s, dtype=float) * self.y_std**2


def fit_standardizer(train: Dataset) -> Standardizer:
    return Standardizer.fit(train)


@dataclass
class PosteriorPrediction:
    """Latent-function posterior at query points, with 95% interval."""

    mean: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def predict_interval(mean, variance, alpha: float = 0.05, mode: str = "sqrt"):
    """Central (1 - alpha) interval endpoints.

    Default multiplies the standard deviation by the Gaussian quantile
    (1.96 for alpha = 0.05); mode="variance" multiplies the variance
    instead, reproducing a literal reading of the endpoint formula.
    """
    if mode not in INTERVAL_MODES:
        raise ContractError(f"interval mode {mode!r} not in {INTERVAL_MODES}")
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0.0):
        raise ContractError("variance must be non-negative")
    z = 1.96 if alpha == 0.05 else float(norm.ppf(1.0 - alpha / 2.0))
    spread = z * (np.sqrt(variance) if mode == "sqrt" else variance)
    return mean - spread, mean + spread


class GpModel:
    """A kernel, a log-parameterized noise variance, and a jitter policy."""

    def __init__(self, kernel: Kernel, log_noise: float = np.log(1e-2),
                 jitter: float = 1e-8, jitter_max: float = 1e-4,
                 train_noise: bool = True):
        if jitter < 0.0 or jitter_max < jitter:
            raise ContractError("need 0 <= jitter <= jitter_max")
        self.kernel = kernel
        self.log_noise = float(log_noise)
        self.jitter = float(jitter)
        self.jitter_max = float(jitter_max)
        self.train_noise = bool(train_noise)

    @property
    def noise_variance(self) -> float:
        # clamp keeps absurd line-search trial points finite and rejectable
        return float(np.exp(min(self.log_noise, 700.0)))

    # --- flat parameter view (kernel hyperparameters + log noise) ---

    def param_vector(self) -> np.ndarray:
        theta = self.kernel.param_vector()
        if self.train_noise:
            theta = np.concatenate([theta, [self.log_noise]])
        return theta

    def set_param_vector(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        nk = self.kernel.n_params
        expected = nk + (1 if self.train_noise else 0)
        if theta.size != expected:
            raise ContractError(f"expected {expected} parameters, got {theta.size}")
        self.kernel.set_param_vector(theta[:nk])
        if self.train_noise:
            self.log_noise = float(theta[-1])

    def random_params(self, rng) -> np.ndarray:
        theta = self.kernel.random_params(rng)
        if self.train_noise:
            theta = np.concatenate(
                [theta, rng.uniform(np.log(1e-4), np.log(1e-1), size=1)]
            )
        return theta

    # --- factorization with jitter escalation ---

    def _factorize(self, C: np.ndarray):
        """Cholesky of C + (noise + level * mean(diag C)) I, escalating level.

        Returns (cho, level) so the gradient can account for the jitter's
        dependence on the Gram diagonal.
        """
        n = C.shape[0]
        if not np.all(np.isfinite(C)):
            raise NumericsError("covariance matrix contains non-finite entries")
        base = float(np.mean(np.diag(C)))
        base = base if base > 0.0 and np.isfinite(base) else 1.0
        level = self.jitter
        noise = self.noise_variance
        while True:
            shift = noise + level * base
            if not np.isfinite(shift):
                raise NumericsError(f"non-finite diagonal shift (noise={noise!r})")
            try:
                cho = cho_factor(C + shift * np.eye(n), lower=True)
                return cho, level
            except (LinAlgError, ValueError):
                if level == 0.0:
                    level = 1e-8
                elif level * 10.0 <= self.jitter_max:
                    level *= 10.0
                else:
                    diag = np.diag(C)
                    raise NumericsError(
                        "covariance factorization failed after jitter escalation "
                        f"(n={n}, noise={noise:.3e}, max jitter={level * base:.3e}, "
                        f"diag range [{diag.min():.3e}, {diag.max():.3e}])"
                    ) from None

    def nll(self, data: Dataset) -> float:
        C = self.kernel.gram(data.X)
        cho, _ = self._factorize(C)
        alpha = cho_solve(cho, data.y)
        logdet = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
        return 0.5 * logdet + 0.5 * float(data.y @ alpha)

    def nll_and_grad(self, data: Dataset):
        """Loss plus its gradient over (kernel params, log noise)."""
        C, vjp = self.kernel.gram_with_vjp(data.X)
        cho, level = self._factorize(C)
        alpha = cho_solve(cho, data.y)
        logdet = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
        loss = 0.5 * logdet + 0.5 * float(data.y @ alpha)
        n = data.n
        Cinv = cho_solve(cho, np.eye(n))
        S = 0.5 * (Cinv - np.outer(alpha, alpha))
        # the relative jitter level * mean(diag C) also moves with the kernel
        Cbar = S + (level * np.trace(S) / n) * np.eye(n)
        kernel_grad, _ = vjp(Cbar)
        if not np.all(np.isfinite(kernel_grad)):
            bad = np.nonzero(~np.isfinite(kernel_grad))[0]
            layout = self.kernel.param_layout()
            names = [name for name, _ in layout.groups]
            culprit = "unknown"
            for name in names:
                off = layout.offset(name)
                if off <= bad[0]:
                    culprit = name
            raise NumericsError(f"non-finite gradient entry in group {culprit!r}")
        if self.train_noise:
            noise_grad = float(np.trace(S)) * self.noise_variance
            return loss, np.concatenate([kernel_grad, [noise_grad]])
        return loss, kernel_grad

    def posterior(self, train: Dataset, X_star, alpha: float = 0.05,
                  interval_mode: str = "sqrt") -> PosteriorPrediction:
        X_star = _as_matrix(X_star)
        if X_star.shape[1] != train.p:
            raise ContractError(
                f"query dimension {X_star.shape[1]} != training dimension {train.p}"
            )
        C = self.kernel.gram(train.X)
        cho, _ = self._factorize(C)
        K_star = self.kernel.gram(X_star, train.X)
        mean = K_star @ cho_solve(cho, train.y)
        prior = self.kernel.prior_diag(X_star)
        variance = prior - np.sum(K_star * cho_solve(cho, K_star.T).T, axis=1)
        variance = np.maximum(variance, 0.0)
        lower, upper = predict_interval(mean, variance, alpha, interval_mode)
        return PosteriorPrediction(mean, variance, lower, upper)
