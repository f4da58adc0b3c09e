"""Config-driven experiment runner.

A single YAML file describes a benchmark, a kernel family, a training
protocol, and a repetition count; the runner executes the repetitions
with derived seeds and writes CSV/JSON results suitable for external
plotting.  Verbs:

    seekgp run <config>        one kernel, one benchmark, R repetitions
    seekgp sweep <config>      repeat run across an axis of config values
    seekgp compare <config>    several kernel families, shared datasets
    seekgp validate <config>   parse + fail-fast checks only
    seekgp gradcheck <config>  finite-difference audit of the gradient

All repetition seeds are base_seed + repetition index, so adding
repetitions never changes earlier rows, and every family inside one
compare run sees identical datasets per repetition.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import (BENCHMARKS, BenchmarkSpec, benchmark_function, synthesize_dataset,
                    test_inputs)
from .exceptions import ConfigError, ContractError, DataError, NumericsError
from .gp import Dataset, GpModel, Standardizer, predict_interval
from .kernels import Gaussian, Matern, Periodic, PowerExponential
from .metrics import evaluate_predictions
from .optim import TrainConfig, fd_check, multi_restart_fit
from .seek import ACTIVATIONS, DeepKernel, GibbsKernel, SeekKernel

KERNEL_FAMILIES = ("gaussian", "matern", "periodic", "power_exponential",
                   "seek", "gibbs", "deep")

_ACTIVATION_ALIASES = {"iden": "identity", "exp": "exp", "sinh": "sinh",
                       "cosh": "cosh", "identity": "identity"}


# ----------------------------------------------------------------- config ---

def _as_int(cfg, key, default=None, minimum=None):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"missing required field {key!r}")
    try:
        v = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be an integer, got {v!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(f"field {key!r} must be >= {minimum}, got {v}")
    return v


def _as_float(cfg, key, default=None, minimum=None):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"missing required field {key!r}")
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a number, got {v!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(f"field {key!r} must be >= {minimum}, got {v}")
    return v


def parse_base_codes(code: str) -> list[str]:
    """Expand a structure code like G-6 / PE-2 / H-3 into base-kind names.

    G = gaussian, PE = power_exponential, M = matern; H cycles through
    gaussian, periodic, matern.
    """
    try:
        letter, count = code.rsplit("-", 1)
        count = int(count)
    except ValueError:
        raise ConfigError(
            f"bad kernel structure code {code!r}; expected LETTER-COUNT like G-6"
        ) from None
    if count < 1:
        raise ConfigError(f"structure code {code!r} must have a positive count")
    letter = letter.upper()
    singles = {"G": "gaussian", "PE": "power_exponential", "M": "matern",
               "P": "periodic"}
    if letter in singles:
        return [singles[letter]] * count
    if letter == "H":
        cycle = ["gaussian", "periodic", "matern"]
        return [cycle[i % 3] for i in range(count)]
    raise ConfigError(
        f"unknown structure letter {letter!r} in {code!r}; "
        f"expected one of {sorted(singles) + ['H']}"
    )


def _make_base(kind: str, input_dim: int, matern_nu: float = 2.5):
    omega = np.zeros(input_dim)
    if kind == "gaussian":
        return Gaussian(omega)
    if kind == "matern":
        return Matern(omega, matern_nu)
    if kind == "periodic":
        return Periodic(omega)
    if kind == "power_exponential":
        return PowerExponential(omega)
    raise ConfigError(
        f"unknown base kernel {kind!r}; expected one of "
        "['gaussian', 'matern', 'periodic', 'power_exponential']"
    )


@dataclass
class KernelConfig:
    family: str
    bases: list[str] = field(default_factory=list)
    activation: str = "exp"
    weight_hidden: tuple[int, ...] | None = None
    bias_hidden: tuple[int, ...] | None = None
    hidden: tuple[int, ...] | None = None  # gibbs / deep
    weight_output_dim: int = 1
    bias_output_dim: int = 2
    net_activation: str = "softplus"
    shared_weight_net: bool = False
    matern_nu: float = 2.5

    @classmethod
    def from_dict(cls, cfg: dict) -> "KernelConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("kernel section must be a mapping")
        family = cfg.get("family")
        if family not in KERNEL_FAMILIES:
            raise ConfigError(
                f"unknown kernel family {family!r}; valid families: "
                f"{list(KERNEL_FAMILIES)}"
            )
        bases = cfg.get("bases", ["gaussian"])
        if isinstance(bases, str):
            bases = parse_base_codes(bases)
        activation = _ACTIVATION_ALIASES.get(cfg.get("activation", "exp"))
        if activation is None:
            raise ConfigError(
                f"unknown activation {cfg.get('activation')!r}; valid: "
                f"{sorted(set(_ACTIVATION_ALIASES))}"
            )
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        net_act = cfg.get("net_activation", "softplus")
        if net_act not in ("softplus", "tanh", "identity"):
            raise ConfigError(f"unknown net_activation {net_act!r}")

        def widths(key):
            v = cfg.get(key)
            if v is None:
                return None
            if not isinstance(v, (list, tuple)) or not v:
                raise ConfigError(f"field {key!r} must be a non-empty list of widths")
            return tuple(int(w) for w in v)

        return cls(
            family=family,
            bases=[str(b) for b in bases],
            activation=activation,
            weight_hidden=widths("weight_hidden"),
            bias_hidden=widths("bias_hidden"),
            hidden=widths("hidden"),
            weight_output_dim=_as_int(cfg, "weight_output_dim", 1, minimum=1),
            bias_output_dim=_as_int(cfg, "bias_output_dim", 2, minimum=1),
            net_activation=net_act,
            shared_weight_net=bool(cfg.get("shared_weight_net", False)),
            matern_nu=_as_float(cfg, "matern_nu", 2.5),
        )

    def build(self, input_dim: int):
        if self.family in ("gaussian", "matern", "periodic", "power_exponential"):
            return _make_base(self.family, input_dim, self.matern_nu)
        if self.family == "gibbs":
            return GibbsKernel.default(input_dim, hidden=self.hidden,
                                       net_activation=self.net_activation)
        if self.family == "deep":
            return DeepKernel.default(input_dim, hidden=self.hidden,
                                      net_activation=self.net_activation)
        bases = tuple(_make_base(kind, input_dim, self.matern_nu)
                      for kind in self.bases)
        return SeekKernel.default(
            input_dim,
            bases=bases,
            activation=self.activation,
            weight_hidden=self.weight_hidden,
            bias_hidden=self.bias_hidden,
            weight_output_dim=self.weight_output_dim,
            bias_output_dim=self.bias_output_dim,
            net_activation=self.net_activation,
            shared_weight_net=self.shared_weight_net,
        )


@dataclass
class ExperimentConfig:
    benchmark: BenchmarkSpec
    kernel: KernelConfig
    train: TrainConfig
    repetitions: int
    output_dir: Path
    seed: int
    test_size: int | None
    test_csv: str | None
    interval_mode: str
    alpha: float

    @classmethod
    def from_dict(cls, cfg: dict, path: Path | None = None) -> "ExperimentConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a mapping")
        bench_cfg = cfg.get("benchmark")
        if not isinstance(bench_cfg, dict):
            raise ConfigError("missing 'benchmark' section")
        name = bench_cfg.get("name")
        seed = _as_int(cfg, "seed", 0)
        try:
            benchmark = BenchmarkSpec(
                name=str(name),
                n_train=_as_int(bench_cfg, "n_train", 0 if name == "csv" else None,
                                minimum=0),
                noise_variance=_as_float(bench_cfg, "noise_variance", 0.0, minimum=0.0),
                seed=seed,
                sobol_seed_offset=bool(bench_cfg.get("sobol_seed_offset", True)),
                csv_path=bench_cfg.get("csv_path"),
                target_column=bench_cfg.get("target_column"),
                feature_columns=tuple(bench_cfg["feature_columns"])
                if bench_cfg.get("feature_columns") else None,
            )
        except ContractError as exc:
            raise ConfigError(str(exc)) from None
        kernel = KernelConfig.from_dict(cfg.get("kernel") or {"family": "seek"})
        tr = cfg.get("train") or {}
        if not isinstance(tr, dict):
            raise ConfigError("'train' section must be a mapping")
        try:
            train = TrainConfig(
                restarts=_as_int(tr, "restarts", 80, minimum=1),
                max_epochs=_as_int(tr, "max_epochs", 2000, minimum=1),
                patience=_as_int(tr, "patience", 20, minimum=1),
                step_size=_as_float(tr, "step_size", 0.01),
                lbfgs_history=_as_int(tr, "lbfgs_history", 10, minimum=1),
                seed=seed,
                step_mode=str(tr.get("step_mode", "linesearch")),
            )
        except ContractError as exc:
            raise ConfigError(str(exc)) from None
        test_cfg = cfg.get("test") or {}
        if not isinstance(test_cfg, dict):
            raise ConfigError("'test' section must be a mapping")
        interval_mode = str(cfg.get("interval_mode", "sqrt"))
        if interval_mode not in ("sqrt", "variance"):
            raise ConfigError(f"interval_mode must be 'sqrt' or 'variance', "
                              f"got {interval_mode!r}")
        out = cfg.get("output_dir")
        if out is None:
            out = (path.parent / (path.stem + "_out")) if path else Path("seekgp_out")
        return cls(
            benchmark=benchmark,
            kernel=kernel,
            train=train,
            repetitions=_as_int(cfg, "repetitions", 16, minimum=1),
            output_dir=Path(out),
            seed=seed,
            test_size=(int(test_cfg["size"]) if test_cfg.get("size") else None),
            test_csv=test_cfg.get("csv_path"),
            interval_mode=interval_mode,
            alpha=_as_float(cfg, "alpha", 0.05),
        )


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: YAML parse error: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return cfg


# ------------------------------------------------------------- experiment ---

def _test_set(cfg: ExperimentConfig):
    """Noiseless test inputs and truths, fixed across repetitions."""
    if cfg.benchmark.name == "csv":
        if not cfg.test_csv:
            raise ConfigError("csv benchmark needs test.csv_path")
        from .bench import load_csv_dataset
        ds = load_csv_dataset(cfg.test_csv, cfg.benchmark.target_column,
                              cfg.benchmark.feature_columns)
        return ds.X, ds.y, {"kind": "csv", "path": str(cfg.test_csv), "n": ds.n}
    X = test_inputs(cfg.benchmark.name, cfg.test_size)
    fn = benchmark_function(cfg.benchmark.name)
    truth = np.asarray(fn(X[:, 0] if X.shape[1] == 1 else X), dtype=float)
    kind = "uniform-grid" if X.shape[1] == 1 else "sobol-tail"
    return X, truth, {"kind": kind, "n": int(X.shape[0])}


def _train_dataset(cfg: ExperimentConfig, rep: int) -> tuple[Dataset, int]:
    ds_seed = cfg.seed + rep
    spec = BenchmarkSpec(
        name=cfg.benchmark.name,
        n_train=cfg.benchmark.n_train,
        noise_variance=cfg.benchmark.noise_variance,
        seed=ds_seed,
        sobol_seed_offset=cfg.benchmark.sobol_seed_offset,
        csv_path=cfg.benchmark.csv_path,
        target_column=cfg.benchmark.target_column,
        feature_columns=cfg.benchmark.feature_columns,
    )
    return synthesize_dataset(spec), ds_seed


def _format(v) -> str:
    if isinstance(v, float):
        if np.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _quartiles(values) -> dict:
    vals = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if vals.size == 0:
        return {"q1": None, "median": None, "q3": None, "mean": None}
    return {
        "q1": float(np.percentile(vals, 25)),
        "median": float(np.percentile(vals, 50)),
        "q3": float(np.percentile(vals, 75)),
        "mean": float(vals.mean()),
    }


METRIC_COLUMNS = ["nrmse", "nnois", "coverage", "final_nll", "epochs"]


def run_repetition(cfg: ExperimentConfig, rep: int, X_test, truth):
    """Train one model on the rep's dataset and score it on the test set."""
    train_raw, ds_seed = _train_dataset(cfg, rep)
    standardizer = Standardizer.fit(train_raw)
    train = standardizer.transform(train_raw)
    kernel = cfg.kernel.build(train.p)
    model = GpModel(kernel)
    tc = dataclasses.replace(cfg.train, seed=(cfg.seed + rep) * 10_000)
    t0 = time.perf_counter()
    fit = multi_restart_fit(model, train, tc)
    pred = model.posterior(train, standardizer.transform_x(X_test),
                           alpha=cfg.alpha, interval_mode=cfg.interval_mode)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    mean = standardizer.inverse_y(pred.mean)
    var = standardizer.inverse_y_var(pred.variance)
    lower, upper = predict_interval(mean, var, cfg.alpha, cfg.interval_mode)
    report = evaluate_predictions(mean, lower, upper, truth, cfg.alpha)
    epochs = sum(r.epochs for r in fit.records)
    row = {
        "rep": rep, "seed": ds_seed,
        "nrmse": report.nrmse, "nnois": report.nnois, "coverage": report.coverage,
        "final_nll": fit.best_loss, "epochs": epochs, "wall_ms": wall_ms,
    }
    predictions = np.column_stack([X_test, truth, mean, lower, upper])
    return row, predictions


def run_config(cfg: ExperimentConfig, echo=print) -> dict:
    """Execute all repetitions; write metrics.csv, summary.json, predictions."""
    X_test, truth, test_meta = _test_set(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    p = X_test.shape[1]
    pred_header = [f"x{i}" for i in range(p)] + ["truth", "mean", "lower", "upper"]
    for rep in range(cfg.repetitions):
        try:
            row, predictions = run_repetition(cfg, rep, X_test, truth)
            _write_csv(out / f"predictions_rep{rep:03d}.csv", pred_header,
                       predictions.tolist())
        except (NumericsError, ContractError) as exc:
            row = {"rep": rep, "seed": cfg.seed + rep,
                   "nrmse": float("nan"), "nnois": float("nan"),
                   "coverage": float("nan"), "final_nll": float("nan"),
                   "epochs": 0, "wall_ms": 0.0}
            echo(f"rep {rep}: failed ({exc})")
        rows.append(row)
        echo(f"rep {rep}: nrmse={_format(row['nrmse'])} "
             f"nnois={_format(row['nnois'])} coverage={_format(row['coverage'])}")
    header = ["rep", "seed"] + METRIC_COLUMNS + ["wall_ms"]
    _write_csv(out / "metrics.csv", header,
               [[r[h] for h in header] for r in rows])
    summary = {
        "config": {
            "benchmark": cfg.benchmark.name,
            "n_train": cfg.benchmark.n_train,
            "noise_variance": cfg.benchmark.noise_variance,
            "kernel_family": cfg.kernel.family,
            "repetitions": cfg.repetitions,
            "restarts": cfg.train.restarts,
            "seed": cfg.seed,
            "interval_mode": cfg.interval_mode,
            "alpha": cfg.alpha,
            "test_set": test_meta,
        },
        "metrics": {m: _quartiles([r[m] for r in rows]) for m in
                    ("nrmse", "nnois", "coverage", "final_nll")},
        "failed_repetitions": [r["rep"] for r in rows if np.isnan(r["nrmse"])],
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


# ------------------------------------------------------------------ sweep ---

def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    node[keys[-1]] = value


def run_sweep(raw: dict, path: Path | None, echo=print) -> list[dict]:
    axis = raw.get("axis")
    if not isinstance(axis, dict) or "param" not in axis or "values" not in axis:
        raise ConfigError("sweep config needs an 'axis' section with "
                          "'param' (dotted path) and 'values' (list)")
    values = axis["values"]
    if not isinstance(values, list) or not values:
        raise ConfigError("axis.values must be a non-empty list")
    labels = axis.get("labels")
    if labels is not None and len(labels) != len(values):
        raise ConfigError("axis.labels must match axis.values in length")
    base = {k: v for k, v in raw.items() if k != "axis"}
    base_cfg = ExperimentConfig.from_dict(copy.deepcopy(base), path)

    # validate every axis point before any training starts
    variants = []
    for i, v in enumerate(values):
        raw_i = copy.deepcopy(base)
        _set_path(raw_i, axis["param"], v)
        label = str(labels[i]) if labels else f"{axis['param']}={v}"
        cfg_i = ExperimentConfig.from_dict(raw_i, path)
        cfg_i.output_dir = base_cfg.output_dir / f"axis_{i:02d}"
        variants.append((label, cfg_i))

    results = []
    sweep_rows = []
    for label, cfg_i in variants:
        echo(f"== axis value: {label}")
        summary = run_config(cfg_i, echo=echo)
        results.append({"label": label, "summary": summary})
        row = [label]
        for m in ("nrmse", "nnois", "coverage"):
            q = summary["metrics"][m]
            row += [q["q1"], q["median"], q["q3"], q["mean"]]
        sweep_rows.append(row)
    header = ["axis"]
    for m in ("nrmse", "nnois", "coverage"):
        header += [f"{m}_q1", f"{m}_median", f"{m}_q3", f"{m}_mean"]
    base_cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(base_cfg.output_dir / "sweep.csv", header,
               [[v if v is not None else float("nan") for v in row]
                for row in sweep_rows])
    return results


# ---------------------------------------------------------------- compare ---

def run_compare(raw: dict, path: Path | None, echo=print) -> dict:
    families = raw.get("families")
    if not isinstance(families, dict) or not families:
        raise ConfigError("compare config needs a 'families' mapping of "
                          "name -> kernel section")
    base = {k: v for k, v in raw.items() if k != "families"}
    base_cfg = ExperimentConfig.from_dict(
        {**copy.deepcopy(base), "kernel": {"family": "gaussian"}}, path)

    configs = {}
    for name, kcfg in families.items():
        raw_i = copy.deepcopy(base)
        raw_i["kernel"] = kcfg
        cfg_i = ExperimentConfig.from_dict(raw_i, path)
        cfg_i.output_dir = base_cfg.output_dir / str(name)
        configs[str(name)] = cfg_i

    X_test, truth, _ = _test_set(base_cfg)
    rows = []
    for name, cfg_i in configs.items():
        echo(f"== family: {name}")
        cfg_i.output_dir.mkdir(parents=True, exist_ok=True)
        for rep in range(cfg_i.repetitions):
            try:
                row, _ = run_repetition(cfg_i, rep, X_test, truth)
            except (NumericsError, ContractError) as exc:
                row = {"rep": rep, "seed": cfg_i.seed + rep,
                       "nrmse": float("nan"), "nnois": float("nan"),
                       "coverage": float("nan"), "final_nll": float("nan"),
                       "epochs": 0, "wall_ms": 0.0}
                echo(f"  rep {rep}: failed ({exc})")
            echo(f"  rep {rep}: nrmse={_format(row['nrmse'])} "
                 f"nnois={_format(row['nnois'])}")
            rows.append({"family": name, **row})
    header = ["family", "rep", "seed"] + METRIC_COLUMNS + ["wall_ms"]
    base_cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(base_cfg.output_dir / "compare.csv", header,
               [[r[h] for h in header] for r in rows])
    summary = {}
    for name in configs:
        fam_rows = [r for r in rows if r["family"] == name]
        summary[name] = {m: _quartiles([r[m] for r in fam_rows])
                         for m in ("nrmse", "nnois", "coverage")}
    (base_cfg.output_dir / "compare_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


# --------------------------------------------------------------- gradcheck ---

def run_gradcheck(cfg: ExperimentConfig, echo=print, max_indices: int = 20,
                  tolerance: float = 1e-4) -> float:
    train_raw, _ = _train_dataset(cfg, 0)
    standardizer = Standardizer.fit(train_raw)
    train = standardizer.transform(train_raw)
    kernel = cfg.kernel.build(train.p)
    model = GpModel(kernel)
    rng = np.random.default_rng(cfg.seed)
    theta = model.random_params(rng)
    model.set_param_vector(theta)
    _, grad = model.nll_and_grad(train)

    def loss_fn(th):
        model.set_param_vector(th)
        return model.nll(train)

    n = theta.size
    indices = (np.arange(n) if n <= max_indices
               else rng.choice(n, size=max_indices, replace=False))
    report = fd_check(loss_fn, grad, theta, indices=sorted(int(i) for i in indices))
    echo(f"gradcheck: {len(report.entries)} of {n} parameters probed, "
         f"max relative error {report.max_rel_error:.3e} "
         f"(worst index {report.worst_index})")
    echo("PASS" if report.max_rel_error <= tolerance else "FAIL")
    return report.max_rel_error


# -------------------------------------------------------------------- cli ---

def _apply_overrides(raw: dict, args) -> dict:
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.reps is not None:
        raw["repetitions"] = args.reps
    if args.out is not None:
        raw["output_dir"] = args.out
    return raw


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seekgp",
        description="Config-driven GP experiments with learnable "
                    "nonstationary kernels.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, helptext in [
        ("run", "train one kernel on one benchmark over R repetitions"),
        ("sweep", "run across an axis of config values"),
        ("compare", "run several kernel families on shared datasets"),
        ("validate", "parse and validate a config without training"),
        ("gradcheck", "finite-difference audit of the model gradient"),
    ]:
        p = sub.add_parser(verb, help=helptext)
        p.add_argument("config", help="path to the YAML config file")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--reps", type=int, default=None,
                       help="override repetition count")
        p.add_argument("--out", type=str, default=None,
                       help="override output directory")
    args = parser.parse_args(argv)

    try:
        raw = _apply_overrides(load_config(args.config), args)
        path = Path(args.config)
        if args.verb == "validate":
            if "families" in raw:
                run_compare_validate(raw, path)
            elif "axis" in raw:
                base = {k: v for k, v in raw.items() if k != "axis"}
                ExperimentConfig.from_dict(copy.deepcopy(base), path)
            else:
                ExperimentConfig.from_dict(raw, path)
            print("OK")
            return 0
        if args.verb == "run":
            summary = run_config(ExperimentConfig.from_dict(raw, path))
            print(json.dumps(summary["metrics"], indent=2, sort_keys=True))
            return 0
        if args.verb == "sweep":
            run_sweep(raw, path)
            return 0
        if args.verb == "compare":
            run_compare(raw, path)
            return 0
        if args.verb == "gradcheck":
            err = run_gradcheck(ExperimentConfig.from_dict(raw, path))
            return 0 if err <= 1e-4 else 1
    except (ConfigError, DataError) as exc:
        return _fail(exc, 2)
    except (ContractError, NumericsError) as exc:
        return _fail(exc, 1)
    return 0


def run_compare_validate(raw: dict, path: Path | None) -> None:
    families = raw.get("families")
    if not isinstance(families, dict) or not families:
        raise ConfigError("compare config needs a 'families' mapping")
    base = {k: v for k, v in raw.items() if k != "families"}
    for name, kcfg in families.items():
        raw_i = copy.deepcopy(base)
        raw_i["kernel"] = kcfg
        ExperimentConfig.from_dict(raw_i, path)


if __name__ == "__main__":
    sys.exit(main())
