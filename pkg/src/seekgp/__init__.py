"""Gaussian-process regression with learnable nonstationary kernels.

The centerpiece is ``SeekKernel``: an activation function applied to a
sum of input-weighted base kernels plus an input-dependent bias inner
product, with the weight/bias functions given by small neural networks.
The package also ships the stationary base kernels and closure operators,
Gibbs and deep-kernel baselines, exact GP inference, L-BFGS training with
multi-restart, Sobol-sampled benchmark problems, and interval-score
metrics, plus a config-driven experiment runner (``seekgp`` CLI).
"""

from .bench import (
    BenchmarkSpec,
    analytic_one,
    analytic_two,
    benchmark_function,
    hartmann6,
    load_csv_dataset,
    sobol_points,
    synthesize_dataset,
    test_inputs,
    write_csv_dataset,
)
from .exceptions import ConfigError, ContractError, DataError, NumericsError
from .gp import (
    Dataset,
    GpModel,
    PosteriorPrediction,
    Standardizer,
    fit_standardizer,
    predict_interval,
)
from .kernels import (
    Gaussian,
    Matern,
    Periodic,
    PowerExponential,
    ProductKernel,
    ScaleKernel,
    SumKernel,
    ValidityReport,
    WarpKernel,
    pairwise_sqdiffs,
    scaled_distance,
    validate_kernel,
)
from .metrics import MetricsReport, coverage, evaluate_predictions, nnois, nrmse
from .neural import Mlp, MlpSpec, ParamLayout, forward, init_params, param_count
from .optim import (
    FdReport,
    FitResult,
    TrainConfig,
    fd_check,
    gradient,
    lbfgs_fit,
    minimize_lbfgs,
    multi_restart_fit,
)
from .seek import DeepKernel, GibbsKernel, SeekKernel

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec", "analytic_one", "analytic_two", "benchmark_function",
    "hartmann6", "load_csv_dataset", "sobol_points", "synthesize_dataset",
    "test_inputs", "write_csv_dataset",
    "ConfigError", "ContractError", "DataError", "NumericsError",
    "Dataset", "GpModel", "PosteriorPrediction", "Standardizer",
    "fit_standardizer", "predict_interval",
    "Gaussian", "Matern", "Periodic", "PowerExponential", "ProductKernel",
    "ScaleKernel", "SumKernel", "ValidityReport", "WarpKernel",
    "pairwise_sqdiffs", "scaled_distance", "validate_kernel",
    "MetricsReport", "coverage", "evaluate_predictions", "nnois", "nrmse",
    "Mlp", "MlpSpec", "ParamLayout", "forward", "init_params", "param_count",
    "FdReport", "FitResult", "TrainConfig", "fd_check", "gradient",
    "lbfgs_fit", "minimize_lbfgs", "multi_restart_fit",
    "DeepKernel", "GibbsKernel", "SeekKernel",
    "__version__",
]
