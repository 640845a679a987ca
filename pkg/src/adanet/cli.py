"""Command-line surface: synth, train, eval, cv, bounds.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.  All
commands are deterministic under a fixed seed; JSON outputs are
byte-reproducible (floats printed as shortest round-trip decimals).
"""

from __future__ import annotations

import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .baselines import FixedNetConfig, train_fixed_nn, train_logreg
from .complexity import BoundConfig, generalization_bound
from .data import (
    Dataset,
    apply_standardization,
    load_csv,
    make_folds,
    save_csv,
    standardize,
    subset,
    synth,
)
from .driver import TrainConfig, train_adanet, train_adanet_cvx, write_log
from .losses import margin_error
from .network import load_model

ALGORITHMS = ("adanet", "adanet-cvx", "logreg", "nn")

DEFAULT_GRIDS = {
    "adanet": {
        "lambda_": [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4],
        "units_per_layer": [100, 150, 250],
        "learning_rate": [1e-4, 1e-3, 1e-2, 1e-1],
        "norm_cap": [1.0, 1.005, 1.01, 1.1, 1.2],
    },
    "adanet-cvx": {
        "lambda_": [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4],
        "norm_cap": [1.0, 1.005, 1.01, 1.1, 1.2],
    },
    "logreg": {
        "lambda_": [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
        "learning_rate": [1e-4, 1e-3, 1e-2, 1e-1],
    },
    "nn": {
        "hidden_layers": [1, 2, 3],
        "units": [100, 150, 512, 1024, 2048],
        "learning_rate": [1e-4, 1e-3, 1e-2, 1e-1],
        "lambda_": [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
    },
}


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, indent=1)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file: {exc}")
    if not isinstance(cfg, dict):
        raise click.UsageError("config file must hold a JSON object")
    return cfg


def _effective(params: dict, file_cfg: dict, defaults: dict) -> dict:
    """Flag > config file > default, per key."""
    merged = dict(defaults)
    for key, value in file_cfg.items():
        if key not in defaults:
            raise click.UsageError(f"unknown config key {key!r}")
        merged[key] = value
    for key, value in params.items():
        if value is not None:
            merged[key] = value
    return merged


def _fit(dataset: Dataset, algo: str, params: dict, do_standardize: bool):
    """Train one model; returns (model, records or None)."""
    stats = None
    if do_standardize:
        dataset, stats = standardize(dataset)
    if algo in ("adanet", "adanet-cvx"):
        cfg_fields = set(TrainConfig.__dataclass_fields__)
        cfg = TrainConfig(**{k: v for k, v in params.items() if k in cfg_fields})
        trainer = train_adanet if algo == "adanet" else train_adanet_cvx
        model, records = trainer(dataset, cfg)
    elif algo == "logreg":
        model = train_logreg(
            dataset,
            learning_rate=params.get("learning_rate", 1.0),
            lambda_=params.get("lambda_", 0.0),
        )
        records = None
    elif algo == "nn":
        nn_fields = set(FixedNetConfig.__dataclass_fields__)
        translated = dict(params)
        translated.setdefault("seed", params.get("seed", 0))
        cfg = FixedNetConfig(**{k: v for k, v in translated.items() if k in nn_fields})
        model = train_fixed_nn(dataset, cfg)
        records = None
    else:
        raise click.UsageError(f"unknown algorithm {algo!r}")
    if stats is not None:
        model.hyperparams["standardize"] = {
            "mean": [float(v) for v in stats.mean],
            "std": [float(v) for v in stats.std],
        }
    return model, records


@click.group()
def main():
    """Structural learning of feedforward networks, with baselines."""


@main.command("synth")
@click.option("--kind", type=click.Choice(["circles", "linear"]), required=True)
@click.option("--m", type=int, default=1000, show_default=True)
@click.option("--noise", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--header", is_flag=True, default=False)
def cmd_synth(kind, m, noise, seed, out, header):
    """Generate a synthetic dataset CSV."""
    try:
        dataset = synth(kind, m, noise, seed)
        save_csv(dataset, out, header=header)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("train")
@click.option("--algo", type=click.Choice(ALGORITHMS), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--log", "log_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file with hyperparameters; flags override it.")
@click.option("--seed", type=int, default=None)
@click.option("--rounds", "max_rounds", type=int, default=None)
@click.option("--units", "units_per_layer", type=int, default=None)
@click.option("--lambda", "lambda_", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--norm-cap", type=float, default=None)
@click.option("--p", type=float, default=None)
@click.option("--loss", type=click.Choice(["exponential", "logistic"]), default=None)
@click.option("--policy", type=click.Choice(["full", "previous", "dropout"]), default=None)
@click.option("--penalty", type=click.Choice(["none", "adanet-r"]), default=None)
@click.option("--complexity", type=click.Choice(["explicit", "sd"]), default=None)
@click.option("--activation", type=click.Choice(["relu", "sigmoid"]), default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--weak-iter", type=int, default=None)
@click.option("--dropout-rate", type=float, default=None)
@click.option("--hidden-layers", type=int, default=None, help="nn baseline only")
@click.option("--header", is_flag=True, default=False)
@click.option("--standardize/--no-standardize", "do_standardize", default=True,
              show_default=True)
@click.option("--timing", is_flag=True, default=False,
              help="Include wall-clock seconds in the training log.")
def cmd_train(algo, data, out, log_path, config_path, header, do_standardize,
              timing, **flags):
    """Train a model and write its document (and optional round log)."""
    file_cfg = _load_config_file(config_path)
    defaults = {
        "seed": 0, "max_rounds": 10, "units_per_layer": 8, "lambda_": 1e-4,
        "beta": 0.0, "norm_cap": 1.1, "p": 2.0, "loss": "logistic",
        "policy": "full", "penalty": "none", "complexity": "explicit",
        "activation": "relu", "learning_rate": 0.1, "batch_size": 100,
        "weak_iter": 2000, "dropout_rate": 0.0, "hidden_layers": 1,
        "units": 100, "max_iter": 2000,
    }
    params = _effective(flags, file_cfg, defaults)
    if algo == "nn":
        params.setdefault("units", params["units_per_layer"])
        params["max_iter"] = params.get("weak_iter", params["max_iter"])
    try:
        dataset = load_csv(data, has_header=header)
        model, records = _fit(dataset, algo, params, do_standardize)
        model.save(out)
        if log_path and records is not None:
            write_log(records, log_path, include_timing=timing)
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--rho", "rhos", type=float, multiple=True, default=(0.0,),
              show_default=True)
@click.option("--header", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
def cmd_eval(model_path, data, rhos, header, out):
    """Report accuracy and margin errors of a saved model on a dataset."""
    try:
        model = load_model(model_path)
        dataset = load_csv(data, has_header=header)
        if dataset.n_features != model.n_features:
            raise ValueError(
                f"dimension mismatch: model expects {model.n_features} features, "
                f"data has {dataset.n_features}"
            )
        scores = model.decision_function(dataset.features)
        payload = {
            "accuracy": float(np.mean(np.sign(scores) * dataset.labels > 0)),
            "margin_errors": {
                repr(float(r)): margin_error(scores, dataset.labels, r) for r in rhos
            },
            "m": dataset.m,
        }
        _emit(payload, out)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("bounds")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--rho", type=float, default=0.1, show_default=True)
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--header", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
def cmd_bounds(model_path, data, rho, delta, header, out):
    """Evaluate the margin-based generalization bound as a diagnostic."""
    try:
        model = load_model(model_path)
        dataset = load_csv(data, has_header=header)
        stats = model.hyperparams.get("standardize")
        if stats is not None:
            from .data import DatasetStats

            ds_stats = DatasetStats(
                mean=np.asarray(stats["mean"]), std=np.asarray(stats["std"]), r_inf=0.0
            )
            dataset = apply_standardization(dataset, ds_stats)
        cfg_echo = model.hyperparams.get("config", {})
        depth = max(model.depth, 1)
        cap = cfg_echo.get("norm_cap", 1.1)
        caps = tuple(cap) if isinstance(cap, list) else (float(cap),) * depth
        if len(caps) < depth:
            caps = caps + (caps[-1],) * (depth - len(caps))
        from .kernel import dual_exponent

        cfg = BoundConfig(
            rho=rho, delta=delta, lambdas=caps,
            q=dual_exponent(float(cfg_echo.get("p", 2.0))),
        )
        _emit(generalization_bound(model, dataset, cfg), out)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _grid_points(grid: dict) -> list[dict]:
    keys = sorted(grid)
    values = [grid[k] if isinstance(grid[k], list) else [grid[k]] for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def _cv_task(dataset, algo, params, rotation, seed, do_standardize):
    assignment = make_folds(dataset, rotation, seed)
    train = subset(dataset, assignment.train_indices())
    model, _ = _fit(train, algo, params, do_standardize)

    def acc(indices):
        part = subset(dataset, indices)
        scores = model.decision_function(part.features)
        return float(np.mean(np.sign(scores) * part.labels > 0))

    return acc(assignment.validation_indices()), acc(assignment.test_indices())


@main.command("cv")
@click.option("--algo", type=click.Choice(ALGORITHMS), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--grid-file", type=click.Path(exists=True), default=None,
              help="JSON object mapping hyperparameter names to value lists.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--header", is_flag=True, default=False)
@click.option("--standardize/--no-standardize", "do_standardize", default=True)
@click.option("--out", type=click.Path(), default=None)
def cmd_cv(algo, data, grid_file, seed, header, do_standardize, out):
    """10-fold rotation protocol with grid search.

    Fold i is the test set and fold i+1 (mod 10) the validation set for
    rotation i; selection maximizes mean validation accuracy, and the
    selected setting's test accuracy is reported as mean +/- stdev.
    """
    try:
        dataset = load_csv(data, has_header=header)
        grid = _load_config_file(grid_file) or DEFAULT_GRIDS[algo]
        points = _grid_points(grid)
        workers = max(1, int(os.environ.get("ADANET_THREADS", "1")))
        tasks = [
            (gi, rotation, params)
            for gi, params in enumerate(points)
            for rotation in range(10)
        ]
        val = np.zeros((len(points), 10))
        test = np.zeros((len(points), 10))
        base_params = {"seed": seed}
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _cv_task, dataset, algo, {**base_params, **params},
                    rotation, seed, do_standardize,
                )
                for gi, rotation, params in tasks
            ]
            for (gi, rotation, _), fut in zip(tasks, futures):
                val[gi, rotation], test[gi, rotation] = fut.result()
        val_means = val.mean(axis=1)
        best = int(np.argmax(val_means))  # first maximizer in grid order
        mean, std = float(test[best].mean()), float(test[best].std())
        payload = {
            "algo": algo,
            "seed": seed,
            "grid": [
                {
                    "params": points[gi],
                    "validation_mean": float(val_means[gi]),
                    "test_mean": float(test[gi].mean()),
                    "test_std": float(test[gi].std()),
                }
                for gi in range(len(points))
            ],
            "selected": {
                "params": points[best],
                "test_mean": mean,
                "test_std": std,
                "summary": f"{mean:.4f} ± {std:.4f}",
            },
        }
        _emit(payload, out)
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
