"""Benchmark functions, Sobol designs, dataset synthesis, CSV ingestion.

The Sobol generator is the classic Gray-code construction over embedded
direction numbers (dimensions 1-6), skipping the all-zeros origin so the
first point is always 0.5 in every coordinate.  Training designs vary
across repetitions through a per-seed index offset while staying
low-discrepancy.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ContractError, DataError
from .gp import Dataset

_SOBOL_BITS = 32

# (s, a, m) primitive-polynomial data for dimensions 2..6; dimension 1 is
# the base-2 van der Corput sequence (all direction integers 1).
_SOBOL_TABLE = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
)

MAX_SOBOL_DIM = 1 + len(_SOBOL_TABLE)


def _direction_integers(dim_index: int) -> list[int]:
    """V[1..32] for one dimension (0-based dim_index)."""
    if dim_index == 0:
        return [1 << (_SOBOL_BITS - k) for k in range(1, _SOBOL_BITS + 1)]
    s, a, m = _SOBOL_TABLE[dim_index - 1]
    V = [0] * (_SOBOL_BITS + 1)
    for k in range(1, s + 1):
        V[k] = m[k - 1] << (_SOBOL_BITS - k)
    for k in range(s + 1, _SOBOL_BITS + 1):
        V[k] = V[k - s] ^ (V[k - s] >> s)
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                V[k] ^= V[k - i]
    return V[1:]


def sobol_points(dim: int, n: int, skip: int = 0) -> np.ndarray:
    """First n Sobol points (after the origin and ``skip`` extra points).

    Points lie in [0, 1)^dim; the sequence is deterministic for a fixed
    (dim, n, skip).
    """
    if not (1 <= dim <= MAX_SOBOL_DIM):
        raise ConfigError(
            f"Sobol generator supports dimensions 1..{MAX_SOBOL_DIM}, got {dim}"
        )
    if n < 0 or skip < 0:
        raise ContractError("n and skip must be non-negative")
    V = [_direction_integers(d) for d in range(dim)]
    state = [0] * dim
    out = np.empty((n, dim))
    scale = float(1 << _SOBOL_BITS)
    for i in range(skip + n):
        # lowest zero bit of i gives the direction index for point i+1
        j, c = i, 0
        while j & 1:
            j >>= 1
            c += 1
        for d in range(dim):
            state[d] ^= V[d][c]
        if i >= skip:
            row = i - skip
            for d in range(dim):
                out[row, d] = state[d] / scale
    return out


def analytic_one(x) -> np.ndarray:
    """Smooth 1D mix of low-frequency waves and a localized chirp on [0, 1]."""
    x = np.asarray(x, dtype=float)
    return ((np.sin(5.0 * x) + np.cos(10.0 * x)) / 3.94
            + 1.435 * (x - 0.4) ** 2 * np.cos(100.0 * x) + 0.659)


def _envelope(x):
    return np.select(
        [x < 0.5, x <= 1.5],
        [4.0 * x, 2.0 * np.ones_like(x)],
        default=4.0 * (2.0 - x),
    )


def analytic_two(x) -> np.ndarray:
    """Piecewise 1D benchmark on [0, 10] with five qualitatively distinct regimes."""
    x = np.asarray(x, dtype=float)
    t = np.mod(x - 6.0, 0.5)
    saw = np.where(t < 0.25, 16.0 * t, 8.0 - 16.0 * t)
    return np.select(
        [x < 2.0, x < 4.0, x < 6.0, x < 8.0],
        [
            _envelope(x) + 0.1 * np.sin(8.0 * np.pi * x),
            0.5 * np.exp(x - 2.0) * np.sin(2.0 * np.pi * x),
            np.sin(2.0 * np.pi * (2.0 + (x - 4.0) ** 2) * (x - 4.0) / 2.0),
            saw,
        ],
        default=np.sin(2.0 * np.pi * x) + 0.5 * np.sin(8.0 * np.pi * x),
    )


HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])

HARTMANN_A = np.array([
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
])

HARTMANN_P = 1e-4 * np.array([
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
])


def hartmann6(x) -> np.ndarray:
    """Six-dimensional multi-modal benchmark on [0, 1]^6 (values in (-8.4, 0))."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != 6:
        raise ContractError(f"hartmann6 expects 6-dimensional inputs, got {X.shape[1]}")
    inner = np.einsum("ij,nij->ni", HARTMANN_A, (X[:, None, :] - HARTMANN_P) ** 2)
    vals = -(np.exp(-inner) @ HARTMANN_ALPHA)
    return float(vals[0]) if single else vals


BENCHMARKS = {
    "analytic1": (analytic_one, [(0.0, 1.0)]),
    "analytic2": (analytic_two, [(0.0, 10.0)]),
    "hartmann6": (hartmann6, [(0.0, 1.0)] * 6),
}

# training-set sizes used in the reference experiments
PRESET_SIZES = {
    "analytic1": 55,
    "analytic1-illustrative": 50,
    "analytic2": 140,
    "hartmann6": 800,
    "hartmann6-desk": 200,
}

# index offset used for the fixed noiseless test designs in >1D, far past
# any training prefix (train offsets are bounded by 1024 + n_train)
TEST_SOBOL_SKIP = 8192


@dataclass
class BenchmarkSpec:
    """Recipe for one synthetic (or CSV-backed) training set."""

    name: str
    n_train: int = 0
    noise_variance: float = 0.0
    seed: int = 0
    sobol_seed_offset: bool = True
    csv_path: str | None = None
    target_column: str | None = None
    feature_columns: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.name not in BENCHMARKS and self.name != "csv":
            raise ConfigError(
                f"unknown benchmark {self.name!r}; expected one of "
                f"{sorted(BENCHMARKS) + ['csv']}"
            )
        if self.name == "csv":
            if not self.csv_path or not self.target_column:
                raise ConfigError("csv benchmark needs csv_path and target_column")
        else:
            if self.n_train < 1:
                raise ConfigError("n_train must be positive")
            if self.noise_variance < 0.0:
                raise ConfigError("noise_variance must be non-negative")


def benchmark_function(name: str):
    try:
        return BENCHMARKS[name][0]
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}") from None


def benchmark_domain(name: str):
    try:
        return BENCHMARKS[name][1]
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}") from None


def _scale_to_domain(U: np.ndarray, domain) -> np.ndarray:
    lo = np.array([d[0] for d in domain])
    hi = np.array([d[1] for d in domain])
    return lo + U * (hi - lo)


def synthesize_dataset(spec: BenchmarkSpec) -> Dataset:
    """Sobol design scaled to the benchmark domain plus i.i.d. Gaussian noise."""
    if spec.name == "csv":
        return load_csv_dataset(spec.csv_path, spec.target_column, spec.feature_columns)
    fn, domain = BENCHMARKS[spec.name]
    skip = (spec.seed % 1024) if spec.sobol_seed_offset else 0
    X = _scale_to_domain(sobol_points(len(domain), spec.n_train, skip=skip), domain)
    y = np.asarray(fn(X if len(domain) > 1 else X[:, 0]), dtype=float)
    if spec.noise_variance > 0.0:
        rng = np.random.default_rng(spec.seed)
        y = y + np.sqrt(spec.noise_variance) * rng.standard_normal(spec.n_train)
    return Dataset(X, y)


def test_inputs(name: str, size: int | None = None) -> np.ndarray:
    """Noiseless test design: a uniform grid in 1D, a Sobol tail otherwise."""
    fn, domain = BENCHMARKS[name]
    if len(domain) == 1:
        size = 1000 if size is None else size
        lo, hi = domain[0]
        return np.linspace(lo, hi, size)[:, None]
    size = 4096 if size is None else size
    return _scale_to_domain(sobol_points(len(domain), size, skip=TEST_SOBOL_SKIP), domain)


def load_csv_dataset(path, target_column: str, feature_columns=None) -> Dataset:
    """Read a numeric CSV with a header row into a Dataset.

    Row order is preserved; errors name the offending row/column.
    """
    if not os.path.exists(path):
        raise DataError(f"CSV file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (header row required)") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(
                f"{path}: target column {target_column!r} not found; "
                f"columns are {header}"
            )
        if feature_columns is None:
            feature_columns = [h for h in header if h != target_column]
        else:
            feature_columns = list(feature_columns)
            missing = [c for c in feature_columns if c not in header]
            if missing:
                raise DataError(f"{path}: feature column(s) {missing} not found")
        if not feature_columns:
            raise DataError(f"{path}: no feature columns left")
        col_idx = {h: i for i, h in enumerate(header)}
        rows_x, rows_y = [], []
        for r, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {r} has {len(row)} cells, header has {len(header)}"
                )

            def parse(col):
                cell = row[col_idx[col]].strip()
                try:
                    return float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell at row {r}, column {col!r}: {cell!r}"
                    ) from None

            rows_x.append([parse(c) for c in feature_columns])
            rows_y.append(parse(target_column))
    if not rows_x:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows_x), np.array(rows_y))


def write_csv_dataset(path, data: Dataset, feature_names=None,
                      target_name: str = "y") -> None:
    """Inverse of load_csv_dataset, mainly for round-trip tests and demos."""
    names = (list(feature_names) if feature_names is not None
             else [f"x{i}" for i in range(data.p)])
    if len(names) != data.p:
        raise ContractError(f"need {data.p} feature names, got {len(names)}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [target_name])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.X[i]] + [repr(float(data.y[i]))])
