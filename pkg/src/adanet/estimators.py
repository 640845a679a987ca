"""scikit-learn compatible estimator wrappers around the training drivers.

These follow the usual fit/predict/decision_function contract so grown
models compose with pipelines, grid search and metrics from the wider
ecosystem.  The fitted model document is available as ``model_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import FixedNetConfig, train_fixed_nn, train_logreg
from .data import Dataset, standardize
from .driver import TrainConfig, train_adanet, train_adanet_cvx
from .kernel import InvalidInputError


class _BaseBinaryEstimator(BaseEstimator, ClassifierMixin):
    """Shared plumbing: label encoding, optional standardization, prediction."""

    def _encode(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise InvalidInputError("binary classification requires exactly 2 classes")
        signed = np.where(y == self.classes_[1], 1.0, -1.0)
        return X, signed

    def _prepare(self, X, signed):
        dataset = Dataset(X, signed)
        stats = None
        if getattr(self, "standardize", True):
            dataset, stats = standardize(dataset)
        return dataset, stats

    def _finalize(self, model, stats):
        if stats is not None:
            model.hyperparams["standardize"] = {
                "mean": [float(v) for v in stats.mean],
                "std": [float(v) for v in stats.std],
            }
        self.model_ = model
        self.n_features_in_ = model.n_features
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.model_.decision_function(X)

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores > 0, self.classes_[1], self.classes_[0])


class AdaNetClassifier(_BaseBinaryEstimator):
    """Adaptively grown network trained by SGD-candidate coordinate descent."""

    def __init__(
        self,
        max_rounds=10,
        units_per_layer=8,
        lambda_=1e-4,
        beta=0.0,
        norm_cap=1.1,
        p=2.0,
        loss="logistic",
        policy="full",
        penalty="none",
        complexity="explicit",
        activation="relu",
        learning_rate=0.1,
        batch_size=100,
        weak_iter=2000,
        dropout_rate=0.0,
        enforce_norms=False,
        standardize=True,
        random_state=0,
    ):
        self.max_rounds = max_rounds
        self.units_per_layer = units_per_layer
        self.lambda_ = lambda_
        self.beta = beta
        self.norm_cap = norm_cap
        self.p = p
        self.loss = loss
        self.policy = policy
        self.penalty = penalty
        self.complexity = complexity
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.weak_iter = weak_iter
        self.dropout_rate = dropout_rate
        self.enforce_norms = enforce_norms
        self.standardize = standardize
        self.random_state = random_state

    def _train_config(self):
        return TrainConfig(
            max_rounds=self.max_rounds,
            units_per_layer=self.units_per_layer,
            lambda_=self.lambda_,
            beta=self.beta,
            norm_cap=self.norm_cap,
            p=self.p,
            loss=self.loss,
            policy=self.policy,
            penalty=self.penalty,
            complexity=self.complexity,
            activation=self.activation,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            weak_iter=self.weak_iter,
            dropout_rate=self.dropout_rate,
            enforce_norms=self.enforce_norms,
            seed=self.random_state,
        )

    def fit(self, X, y):
        X, signed = self._encode(X, y)
        dataset, stats = self._prepare(X, signed)
        model, records = train_adanet(dataset, self._train_config())
        self.records_ = records
        self.depth_ = model.depth
        return self._finalize(model, stats)


class AdaNetCVXClassifier(AdaNetClassifier):
    """Adaptively grown network using the closed-form dual weak learner."""

    def fit(self, X, y):
        X, signed = self._encode(X, y)
        dataset, stats = self._prepare(X, signed)
        model, records = train_adanet_cvx(dataset, self._train_config())
        self.records_ = records
        self.depth_ = model.depth
        return self._finalize(model, stats)


class LogisticRegressionL1(_BaseBinaryEstimator):
    """l1-penalized logistic regression solved by proximal gradient."""

    def __init__(self, learning_rate=1.0, lambda_=0.0, max_iter=10_000,
                 tol=1e-8, standardize=True):
        self.learning_rate = learning_rate
        self.lambda_ = lambda_
        self.max_iter = max_iter
        self.tol = tol
        self.standardize = standardize

    def fit(self, X, y):
        X, signed = self._encode(X, y)
        dataset, stats = self._prepare(X, signed)
        model = train_logreg(
            dataset, self.learning_rate, self.lambda_,
            tol=self.tol, max_iter=self.max_iter,
        )
        return self._finalize(model, stats)


class FixedNetClassifier(_BaseBinaryEstimator):
    """Fixed-architecture relu network trained by mini-batch SGD."""

    def __init__(self, hidden_layers=1, units=100, learning_rate=0.01,
                 lambda_=0.0, regularization="l1", batch_size=100,
                 max_iter=10_000, loss="logistic", standardize=True,
                 random_state=0):
        self.hidden_layers = hidden_layers
        self.units = units
        self.learning_rate = learning_rate
        self.lambda_ = lambda_
        self.regularization = regularization
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.loss = loss
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y):
        X, signed = self._encode(X, y)
        dataset, stats = self._prepare(X, signed)
        cfg = FixedNetConfig(
            hidden_layers=self.hidden_layers,
            units=self.units,
            learning_rate=self.learning_rate,
            lambda_=self.lambda_,
            regularization=self.regularization,
            batch_size=self.batch_size,
            max_iter=self.max_iter,
            loss=self.loss,
            seed=self.random_state,
        )
        model = train_fixed_nn(dataset, cfg)
        return self._finalize(model, stats)
