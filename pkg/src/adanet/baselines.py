"""Comparison models: l1-regularized logistic regression and a fixed-depth
feedforward relu network, both emitted in the shared model document format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernel import InvalidInputError, make_rng
from .losses import surrogate
from .network import AdaNetModel, Subnetwork, Unit, feature_id, unit_id
from .solver import proximal_gradient
from .weaklearner import CandidateNet, CandidateSpec, TrainingDivergedError


@dataclass(frozen=True)
class FixedNetConfig:
    """Architecture and SGD budget of the fixed baseline network."""

    hidden_layers: int = 1
    units: int = 100
    learning_rate: float = 0.01
    lambda_: float = 0.0
    regularization: str = "l1"  # l1 | l2, applied to the output weights
    batch_size: int = 100
    max_iter: int = 10_000
    loss: str = "logistic"
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers < 1 or self.units < 1:
            raise InvalidInputError("need at least one hidden layer and unit")
        if self.regularization not in ("l1", "l2"):
            raise InvalidInputError(f"unknown regularization: {self.regularization!r}")


def train_logreg(
    dataset: Dataset,
    learning_rate: float = 1.0,
    lambda_: float = 0.0,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> AdaNetModel:
    """l1-penalized logistic regression with an unpenalized intercept.

    Solved by proximal gradient; the learning rate caps the initial step
    size.  The result is a depth-1 single-unit model document whose
    intercept rides in the hyperparams.
    """
    X = dataset.features
    y = dataset.labels
    m = dataset.m

    def smooth(wb):
        w, b = wb[:-1], wb[-1]
        margin = y * (X @ w + b)
        val, deriv = surrogate("logistic", -margin)
        coeff = -(y * deriv) / m
        grad = np.concatenate([X.T @ coeff, [np.sum(coeff)]])
        return float(np.mean(val)), grad

    l1 = np.full(dataset.n_features + 1, lambda_)
    l1[-1] = 0.0  # bias is never penalized
    report = proximal_gradient(
        smooth, np.zeros(dataset.n_features + 1), l1,
        tol=tol, max_iter=max_iter, step0=max(learning_rate, 1e-12),
    )
    if not np.all(np.isfinite(report.minimizer)):
        raise TrainingDivergedError(report.iterations)
    w, b = report.minimizer[:-1], float(report.minimizer[-1])
    unit = Unit(
        uid=unit_id(1, 1, 0),
        layer=1,
        sources=tuple(feature_id(j) for j in range(dataset.n_features)),
        weights=w,
        activation=None,
    )
    sub = Subnetwork(round_index=1, depth=1, layers=((unit,),))
    model = AdaNetModel(
        n_features=dataset.n_features,
        loss="logistic",
        hyperparams={
            "algorithm": "logreg",
            "intercept": b,
            "lambda": lambda_,
            "learning_rate": learning_rate,
        },
    )
    return model.attach_subnetwork(sub, np.array([1.0]))


def train_fixed_nn(dataset: Dataset, cfg: FixedNetConfig) -> AdaNetModel:
    """Mini-batch SGD training of a fixed l-layer relu network.

    Reuses the candidate-block machinery with no cross connections; unlike
    the grown candidates, the trained top weights are kept.  Units carry no
    bias, matching the shared document format.
    """
    spec = CandidateSpec(
        round_index=1,
        depth=cfg.hidden_layers,
        units_per_layer=cfg.units,
        policy="full",
        activation="relu",
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        max_iter=cfg.max_iter,
        seed=cfg.seed,
    )
    rng = make_rng(cfg.seed)
    prior_inputs = [np.zeros((dataset.m, 0)) for _ in range(cfg.hidden_layers - 1)]
    prior_ids = [() for _ in range(cfg.hidden_layers - 1)]
    net = CandidateNet(spec, cfg.loss, dataset.n_features, prior_inputs, prior_ids, rng)
    m = dataset.m
    batch = min(cfg.batch_size, m)
    base_margins = np.ones(m)
    for it in range(cfg.max_iter):
        rows = rng.integers(0, m, size=batch)
        value, grads, grad_top = net.loss_and_grad(
            dataset.features, dataset.labels, base_margins, rows
        )
        if not np.isfinite(value):
            raise TrainingDivergedError(it)
        if cfg.lambda_ > 0:
            if cfg.regularization == "l1":
                grad_top = grad_top + cfg.lambda_ * np.sign(net.top_weights)
            else:
                grad_top = grad_top + 2.0 * cfg.lambda_ * net.top_weights
        for W, g in zip(net.layer_weights, grads):
            W -= cfg.learning_rate * g
        net.top_weights -= cfg.learning_rate * grad_top

    layers = []
    for k in range(1, cfg.hidden_layers + 1):
        if k == 1:
            sources = tuple(feature_id(j) for j in range(dataset.n_features))
            activation = None
        else:
            sources = tuple(unit_id(1, k - 1, j) for j in range(cfg.units))
            activation = "relu"
        layers.append(tuple(
            Unit(
                uid=unit_id(1, k, j),
                layer=k,
                sources=sources,
                weights=net.layer_weights[k - 1][j].copy(),
                activation=activation,
            )
            for j in range(cfg.units)
        ))
    sub = Subnetwork(round_index=1, depth=cfg.hidden_layers, layers=tuple(layers))
    model = AdaNetModel(
        n_features=dataset.n_features,
        loss=cfg.loss,
        hyperparams={
            "algorithm": "nn",
            "hidden_layers": cfg.hidden_layers,
            "units": cfg.units,
            "lambda": cfg.lambda_,
            "regularization": cfg.regularization,
            "learning_rate": cfg.learning_rate,
            "seed": cfg.seed,
        },
    )
    return model.attach_subnetwork(sub, net.top_weights)
