"""Marginal-likelihood training: gradients, FD verification, L-BFGS, restarts.

The optimizer is a two-loop-recursion L-BFGS with an Armijo backtracking
line search whose initial trial step plays the role of the learning rate.
Early stopping mirrors the usual protocol: a maximum epoch budget plus a
patience window on best-loss improvement.  ``multi_restart_fit`` runs
independent fits from seeded random initializations and keeps the best.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, NumericsError
from .gp import Dataset, GpModel

STEP_MODES = ("linesearch", "fixed")


@dataclass
class TrainConfig:
    restarts: int = 80
    max_epochs: int = 2000
    patience: int = 20
    step_size: float = 0.01
    lbfgs_history: int = 10
    seed: int = 0
    step_mode: str = "linesearch"
    improvement_tol: float = 1e-9
    grad_tol: float = 1e-8
    max_backtracks: int = 30

    def __post_init__(self):
        if self.restarts < 1 or self.max_epochs < 1 or self.lbfgs_history < 1:
            raise ContractError("restarts, max_epochs, lbfgs_history must be positive")
        if not (0 < self.patience < self.max_epochs):
            raise ContractError("need 0 < patience < max_epochs")
        if self.step_size <= 0.0:
            raise ContractError("step_size must be positive")
        if self.step_mode not in STEP_MODES:
            raise ContractError(f"step_mode {self.step_mode!r} not in {STEP_MODES}")


@dataclass
class LbfgsTrace:
    losses: list[float]
    stop_reason: str
    epochs: int
    best_loss: float


@dataclass
class RestartRecord:
    restart: int
    seed: int
    final_loss: float
    epochs: int
    stop_reason: str


@dataclass
class FitResult:
    best_params: np.ndarray
    best_loss: float
    records: list[RestartRecord]
    best_index: int
    converged: bool


@dataclass
class FdReport:
    max_rel_error: float
    worst_index: int
    entries: list[tuple[int, float, float, float]] = field(default_factory=list)


def gradient(model: GpModel, data: Dataset) -> np.ndarray:
    """d(nll)/d(theta) over all learnable parameters of the model."""
    _, g = model.nll_and_grad(data)
    return g


def fd_check(loss_fn, grad: np.ndarray, params: np.ndarray, h: float = 1e-5,
             indices=None) -> FdReport:
    """Compare an analytic gradient against central finite differences.

    Per index i the step is h * max(1, |theta_i|) and the relative error
    uses a max(1, |analytic|) denominator.
    """
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.shape:
        raise ContractError("gradient and parameter vectors must match in length")
    if indices is None:
        indices = range(params.size)
    entries = []
    max_err, worst = 0.0, -1
    for i in indices:
        hi = h * max(1.0, abs(params[i]))
        up = params.copy()
        up[i] += hi
        down = params.copy()
        down[i] -= hi
        numeric = (loss_fn(up) - loss_fn(down)) / (2.0 * hi)
        rel = abs(grad[i] - numeric) / max(1.0, abs(grad[i]))
        entries.append((int(i), float(grad[i]), float(numeric), float(rel)))
        if rel > max_err:
            max_err, worst = rel, int(i)
    return FdReport(max_rel_error=max_err, worst_index=worst, entries=entries)


def _armijo_search(value_only, x, f, d, gd, t0: float, max_backtracks: int):
    """Initial trial t0; halve on Armijo failure, double while it keeps paying.

    Returns (accepted, step, new_value).  An accepted step always satisfies
    f(x + t d) <= f + 1e-4 t g.d, so it never increases the loss.
    """
    c1 = 1e-4
    t = t0
    f_try = value_only(x + t * d)
    if np.isfinite(f_try) and f_try <= f + c1 * t * gd:
        best_t, best_f = t, f_try
        for _ in range(max_backtracks):
            t2 = 2.0 * best_t
            f2 = value_only(x + t2 * d)
            if np.isfinite(f2) and f2 <= f + c1 * t2 * gd and f2 < best_f:
                best_t, best_f = t2, f2
            else:
                break
        return True, best_t, best_f
    for _ in range(max_backtracks):
        t *= 0.5
        f_try = value_only(x + t * d)
        if np.isfinite(f_try) and f_try <= f + c1 * t * gd:
            return True, t, f_try
    return False, t, f_try


def _two_loop(g, history):
    """L-BFGS two-loop recursion; history holds (s, y, rho) newest-last."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if history:
        s, y, _ = history[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(history, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize_lbfgs(value_and_grad, x0: np.ndarray, config: TrainConfig,
                   value_only=None):
    """Minimize a smooth function; returns (best point, LbfgsTrace).

    ``value_and_grad(x) -> (f, g)``; ``value_only`` defaults to discarding
    the gradient.  Accepted line-search steps never increase the loss.
    """
    if value_only is None:
        value_only = lambda x: value_and_grad(x)[0]
    x = np.asarray(x0, dtype=float).copy()
    f, g = value_and_grad(x)
    if not np.isfinite(f):
        raise NumericsError("objective is non-finite at the initial point")
    best_f, best_x = f, x.copy()
    last_improvement = 0
    history: list = []
    losses = [f]
    reset_used = False
    stop_reason = "max-epochs"
    epochs = 0
    t_trial = None  # adaptive trial step, seeded from config.step_size

    for epoch in range(1, config.max_epochs + 1):
        if np.max(np.abs(g)) < config.grad_tol:
            stop_reason = "gradient-tolerance"
            break
        epochs = epoch
        d = _two_loop(g, history)
        gd = g @ d
        if not np.isfinite(gd) or gd >= 0.0:
            history.clear()
            d = -g
            gd = g @ d
        # without curvature history the raw gradient sets the scale; keep the
        # first move bounded so a steep start cannot catapult the parameters
        no_history_scale = min(1.0, 1.0 / (np.sum(np.abs(g)) + 1e-300))

        if config.step_mode == "fixed":
            step = config.step_size * (no_history_scale if not history else 1.0)
            x_new = x + step * d
            f_new, g_new = value_and_grad(x_new)
            if not np.isfinite(f_new):
                stop_reason = "divergence"
                break
        else:
            if t_trial is None or not history:
                t_trial = config.step_size * no_history_scale
            accepted, t, _ = _armijo_search(value_only, x, f, d, gd,
                                            t_trial, config.max_backtracks)
            if not accepted and not reset_used and history:
                # stale curvature can poison the direction; retry from scratch
                reset_used = True
                history.clear()
                d = -g
                gd = g @ d
                t_trial = config.step_size * no_history_scale
                accepted, t, _ = _armijo_search(value_only, x, f, d, gd,
                                                t_trial, config.max_backtracks)
            if not accepted:
                stop_reason = "line-search-failure"
                break
            x_new = x + t * d
            f_new, g_new = value_and_grad(x_new)
            t_trial = t  # next epoch opens where this one closed

        s = x_new - x
        yv = g_new - g
        sy = s @ yv
        if np.isfinite(sy) and sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            history.append((s, yv, 1.0 / sy))
            if len(history) > config.lbfgs_history:
                history.pop(0)
        x, f, g = x_new, f_new, g_new
        losses.append(f)
        if best_f - f > config.improvement_tol:
            best_f, best_x = f, x.copy()
            last_improvement = epoch
        elif f < best_f:
            best_f, best_x = f, x.copy()
        if epoch - last_improvement >= config.patience:
            stop_reason = "patience"
            break

    return best_x, LbfgsTrace(losses=losses, stop_reason=stop_reason,
                              epochs=epochs, best_loss=best_f)


def lbfgs_fit(model: GpModel, data: Dataset, config: TrainConfig,
              initial: np.ndarray):
    """Single optimization run from an explicit initialization.

    Numerically broken trial points evaluate to +inf, so the line search
    backs away from them instead of aborting the fit.
    """

    def value_and_grad(theta):
        model.set_param_vector(theta)
        return model.nll_and_grad(data)

    def value_only(theta):
        model.set_param_vector(theta)
        try:
            return model.nll(data)
        except NumericsError:
            return float("inf")

    best_x, trace = minimize_lbfgs(value_and_grad, initial, config, value_only)
    model.set_param_vector(best_x)
    return best_x, trace


def multi_restart_fit(model: GpModel, data: Dataset, config: TrainConfig,
                      inits=None) -> FitResult:
    """Independent restarts from seeded initializations; keep the lowest loss.

    Restart i draws its initialization from seed (config.seed + i) unless
    explicit ``inits`` are supplied.  Ties break toward the lowest index.
    """
    records = []
    best = None  # (loss, index, params, graceful)
    errors = []
    for i in range(config.restarts):
        seed_i = config.seed + i
        if inits is not None:
            theta0 = np.asarray(inits[i], dtype=float)
        else:
            theta0 = model.random_params(np.random.default_rng(seed_i))
        try:
            params, trace = lbfgs_fit(model, data, config, theta0)
        except NumericsError as exc:
            records.append(RestartRecord(i, seed_i, float("nan"), 0, f"error: {exc}"))
            errors.append((i, str(exc)))
            continue
        records.append(RestartRecord(i, seed_i, trace.best_loss, trace.epochs,
                                     trace.stop_reason))
        graceful = trace.stop_reason in ("gradient-tolerance", "patience", "max-epochs")
        if best is None or trace.best_loss < best[0]:
            best = (trace.best_loss, i, params.copy(), graceful)
    if best is None:
        detail = "; ".join(f"restart {i}: {msg}" for i, msg in errors)
        raise NumericsError(f"every restart failed ({detail})")
    model.set_param_vector(best[2])
    return FitResult(best_params=best[2], best_loss=best[0], records=records,
                     best_index=best[1], converged=best[3])
