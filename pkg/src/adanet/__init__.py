"""Adaptive structural learning of feedforward networks by boosting-style
block coordinate descent on a complexity-regularized convex objective."""

from .complexity import (
    BoundConfig,
    ComplexitySchedule,
    generalization_bound,
    rademacher_explicit,
    rademacher_mc_estimate,
    rademacher_recursive,
    sd_surrogate,
)
from .data import Dataset, DatasetStats, FoldAssignment, load_csv, make_folds, standardize, synth
from .driver import TrainConfig, RoundRecord, train_adanet, train_adanet_cvx
from .estimators import (
    AdaNetClassifier,
    AdaNetCVXClassifier,
    FixedNetClassifier,
    LogisticRegressionL1,
)
from .network import AdaNetModel, Subnetwork, Unit, load_model, model_from_document

__all__ = [
    "AdaNetClassifier",
    "AdaNetCVXClassifier",
    "AdaNetModel",
    "BoundConfig",
    "ComplexitySchedule",
    "Dataset",
    "DatasetStats",
    "FixedNetClassifier",
    "FoldAssignment",
    "LogisticRegressionL1",
    "RoundRecord",
    "Subnetwork",
    "TrainConfig",
    "Unit",
    "generalization_bound",
    "load_csv",
    "load_model",
    "make_folds",
    "model_from_document",
    "rademacher_explicit",
    "rademacher_mc_estimate",
    "rademacher_recursive",
    "sd_surrogate",
    "standardize",
    "synth",
    "train_adanet",
    "train_adanet_cvx",
]

__version__ = "0.1.0"
