"""Prediction-quality metrics on noiseless test sets.

Both scores are normalized by the population standard deviation s of the
test truths: NRMSE is RMSE/s, and NNOIS is the mean negatively oriented
interval score divided by s (interval width plus 2/alpha-weighted
penalties for truths falling outside their interval).  Lower is better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError


def _truth_std(truth: np.ndarray) -> float:
    s = float(np.std(truth))
    if s <= 0.0:
        raise ContractError("test truths have zero variance; normalization undefined")
    return s


def nrmse(predictions, truth) -> float:
    """Root mean squared error divided by the truth standard deviation."""
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape:
        raise ContractError("predictions and truth must have equal length")
    s = _truth_std(truth)
    return float(np.sqrt(np.mean((predictions - truth) ** 2)) / s)


def nnois(lower, upper, truth, alpha: float = 0.05) -> float:
    """Normalized negatively oriented interval score."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if not (lower.shape == upper.shape == truth.shape):
        raise ContractError("lower, upper, truth must have equal length")
    if np.any(lower > upper):
        raise ContractError("lower endpoints must not exceed upper endpoints")
    s = _truth_std(truth)
    score = (upper - lower)
    score = score + (2.0 / alpha) * (lower - truth) * (truth < lower)
    score = score + (2.0 / alpha) * (truth - upper) * (truth > upper)
    return float(np.mean(score) / s)


def coverage(lower, upper, truth) -> float:
    """Fraction of truths inside their intervals (endpoints included)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return float(np.mean((truth >= lower) & (truth <= upper)))


@dataclass
class MetricsReport:
    nrmse: float
    nnois: float
    coverage: float
    n_test: int


def evaluate_predictions(mean, lower, upper, truth, alpha: float = 0.05) -> MetricsReport:
    truth = np.asarray(truth, dtype=float)
    return MetricsReport(
        nrmse=nrmse(mean, truth),
        nnois=nnois(lower, upper, truth, alpha),
        coverage=coverage(lower, upper, truth),
        n_test=truth.size,
    )
