"""Outer boosting loops: grow-by-round training for both the SGD weak learner
and the closed-form dual variant, with round bookkeeping and logs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict

import numpy as np

from .complexity import make_schedule
from .data import Dataset, r_infinity
from .kernel import InvalidInputError, apply_activation, dual_exponent
from .losses import surrogate
from .network import AdaNetModel
from .solver import ObjectiveSpec, bisect_1d, prox_solve
from .weaklearner import (
    CandidateSpec,
    CvxSelection,
    TrainingDivergedError,
    cvx_select,
    cvx_subnetwork,
    gen_candidate_sgd,
)


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on; echoed into the model document."""

    max_rounds: int = 10  # T
    units_per_layer: int = 8  # B
    lambda_: float = 1e-4
    beta: float = 0.0
    norm_cap: float | tuple[float, ...] = 1.1  # Lambda_{k,k-1}
    p: float = 2.0
    loss: str = "logistic"
    policy: str = "full"
    penalty: str = "none"  # none | adanet-r
    complexity: str = "explicit"  # explicit | sd
    activation: str = "relu"
    learning_rate: float = 0.1
    batch_size: int = 100
    weak_iter: int = 10_000
    dropout_rate: float = 0.0
    enforce_norms: bool = False
    seed: int = 0
    solver_tol: float = 1e-8
    solver_max_iter: int = 10_000
    tol_accept: float = 1e-10
    retries: int = 0

    def __post_init__(self):
        if self.max_rounds < 1:
            raise InvalidInputError("max_rounds must be at least 1")
        if self.lambda_ < 0 or self.beta < 0:
            raise InvalidInputError("lambda and beta must be non-negative")

    def norm_caps(self, max_depth: int) -> tuple[float, ...]:
        if isinstance(self.norm_cap, (int, float)):
            return (float(self.norm_cap),) * max_depth
        caps = tuple(float(v) for v in self.norm_cap)
        if len(caps) < max_depth:
            caps = caps + (caps[-1],) * (max_depth - len(caps))
        return caps

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["norm_cap"], tuple):
            d["norm_cap"] = list(d["norm_cap"])
        return d


@dataclass(frozen=True)
class CandidateSummary:
    depth: int
    gamma: float
    objective: float | None  # None when training diverged
    failed: bool = False


@dataclass(frozen=True)
class RoundRecord:
    t: int
    candidates: tuple[CandidateSummary, ...]
    winner_depth: int | None
    accepted: bool
    objective: float  # full-objective value after the round
    seconds: float


def round_report(records, include_timing: bool = False) -> list[dict]:
    """Serialize round records to the JSON-lines log schema.

    Wall-clock timing is opt-in so that logs stay byte-reproducible.
    """
    out = []
    for rec in records:
        entry = {
            "t": rec.t,
            "candidates": [
                {"depth": c.depth, "gamma": c.gamma, "objective": c.objective}
                for c in rec.candidates
            ],
            "winner_depth": rec.winner_depth,
            "accepted": rec.accepted,
            "F": rec.objective,
        }
        if include_timing:
            entry["seconds"] = rec.seconds
        out.append(entry)
    return out


def write_log(records, path, include_timing: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in round_report(records, include_timing):
            fh.write(json.dumps(entry) + "\n")


def _candidate_seed(base: int, t: int, depth: int) -> int:
    return (base * 1_000_003 + t * 101 + depth) % (1 << 63)


def _subnetwork_top_outputs(model: AdaNetModel, dataset: Dataset, sub) -> np.ndarray:
    """Outputs of the candidate's top units in the context of the model."""
    probe = model.attach_subnetwork(sub, np.zeros(len(sub.top_units())))
    out = probe.forward_units(dataset.features)
    return np.column_stack([out[u.uid] for u in sub.top_units()])


def _base_objective(loss: str, base_margins: np.ndarray) -> float:
    val, _ = surrogate(loss, base_margins)
    return float(np.mean(val))


def train_adanet(dataset: Dataset, cfg: TrainConfig) -> tuple[AdaNetModel, list[RoundRecord]]:
    """Grow a model by block coordinate descent with SGD-generated candidates.

    Each round trains a same-depth and a depth-plus-one candidate, solves the
    l1-penalized step weights for each, keeps the better one, and accepts it
    only if the full objective strictly decreases.
    """
    q = dual_exponent(cfg.p)
    m = dataset.m
    r_inf = r_infinity(dataset)
    model = AdaNetModel(
        n_features=dataset.n_features,
        loss=cfg.loss,
        hyperparams={"config": cfg.to_dict(), "algorithm": "adanet"},
    )
    scores = np.zeros(m)
    records: list[RoundRecord] = []
    objective = _base_objective(cfg.loss, 1.0 - dataset.labels * scores)
    depth_prev = 1  # round 1 candidates have depths 1 and 2

    for t in range(1, cfg.max_rounds + 1):
        start = time.perf_counter()
        max_depth = depth_prev + 1
        caps = cfg.norm_caps(max_depth)
        widths = [dataset.n_features] + [cfg.units_per_layer] * max_depth
        schedule = make_schedule(
            cfg.complexity, max_depth, caps, widths, q, m, r_inf,
            model=model, dataset=dataset, activation=cfg.activation,
        )
        base_margins = 1.0 - dataset.labels * scores
        base_val = _base_objective(cfg.loss, base_margins)

        summaries: list[CandidateSummary] = []
        solved = []
        for depth in (depth_prev, depth_prev + 1):
            gamma = cfg.lambda_ * schedule.value_at(depth) + cfg.beta
            spec = CandidateSpec(
                round_index=t,
                depth=depth,
                units_per_layer=cfg.units_per_layer,
                policy=cfg.policy,
                activation=cfg.activation,
                lambdas=caps,
                p=cfg.p,
                learning_rate=cfg.learning_rate,
                batch_size=cfg.batch_size,
                max_iter=cfg.weak_iter,
                dropout_rate=cfg.dropout_rate,
                seed=_candidate_seed(cfg.seed, t, depth),
                penalty_mode=cfg.penalty,
                gamma=gamma,
                enforce_norms=cfg.enforce_norms,
            )
            try:
                sub = gen_candidate_sgd(model, dataset, spec, cfg.loss)
            except TrainingDivergedError:
                summaries.append(CandidateSummary(depth, gamma, None, failed=True))
                continue
            outputs = _subnetwork_top_outputs(model, dataset, sub)
            ospec = ObjectiveSpec(cfg.loss, base_margins, outputs, dataset.labels, gamma)
            report = prox_solve(ospec, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
            summaries.append(CandidateSummary(depth, gamma, report.value))
            solved.append((report.value, depth, sub, outputs, report, gamma))

        if not solved:
            records.append(RoundRecord(
                t, tuple(summaries), None, False, objective,
                time.perf_counter() - start,
            ))
            break

        # shallower candidate listed first, so strict < keeps it on ties
        best = min(solved, key=lambda item: item[0])
        value, depth, sub, outputs, report, gamma = best
        accepted = value < base_val - cfg.tol_accept
        if accepted:
            model = model.attach_subnetwork(sub, report.minimizer)
            scores = scores + outputs @ report.minimizer
            objective = objective + (value - base_val)
            depth_prev = max(depth_prev, depth)
        records.append(RoundRecord(
            t, tuple(summaries), depth, accepted, objective,
            time.perf_counter() - start,
        ))
        if not accepted:
            break
    return model, records


def train_adanet_cvx(dataset: Dataset, cfg: TrainConfig) -> tuple[AdaNetModel, list[RoundRecord]]:
    """Grow a model by the closed-form dual construction, one unit per round.

    Each round evaluates the dual value of every layer (existing layers plus
    one deeper), builds the attaining unit, and takes the exact univariate
    step; terminates on zero dual value or non-improvement.
    """
    q = dual_exponent(cfg.p)
    m = dataset.m
    r_inf = r_infinity(dataset)
    model = AdaNetModel(
        n_features=dataset.n_features,
        loss=cfg.loss,
        hyperparams={"config": cfg.to_dict(), "algorithm": "adanet-cvx"},
    )
    scores = np.zeros(m)
    records: list[RoundRecord] = []
    objective = _base_objective(cfg.loss, np.ones(m))

    for t in range(1, cfg.max_rounds + 1):
        start = time.perf_counter()
        max_depth = model.depth + 1
        caps = cfg.norm_caps(max_depth)
        widths = [dataset.n_features] + [max(c, 1) for c in model.layer_unit_counts()]
        schedule = make_schedule(
            cfg.complexity, max_depth, caps, widths, q, m, r_inf,
            model=model, dataset=dataset, activation=cfg.activation,
        )
        selection = cvx_select(
            model, dataset, cfg.loss, caps, cfg.p, cfg.activation, scores=scores
        )
        if selection is None:
            records.append(RoundRecord(t, (), None, False, objective,
                                       time.perf_counter() - start))
            break
        gamma = cfg.lambda_ * schedule.value_at(selection.layer) + cfg.beta
        outputs = _cvx_unit_outputs(model, dataset, selection, cfg.activation)
        base_margins = 1.0 - dataset.labels * scores
        base_val = _base_objective(cfg.loss, base_margins)
        ospec = ObjectiveSpec(cfg.loss, base_margins, outputs[:, None],
                              dataset.labels, gamma)
        report = bisect_1d(ospec, tol=cfg.solver_tol)
        eta = float(report.minimizer[0])
        summary = CandidateSummary(selection.layer, gamma, report.value)
        accepted = eta != 0.0 and report.value < base_val - cfg.tol_accept
        if accepted:
            sub = cvx_subnetwork(selection, t, cfg.activation)
            model = model.attach_subnetwork(sub, np.array([eta]))
            scores = scores + eta * outputs
            objective = objective + (report.value - base_val)
        records.append(RoundRecord(
            t, (summary,), selection.layer, accepted, objective,
            time.perf_counter() - start,
        ))
        if not accepted:
            break
    return model, records


def _cvx_unit_outputs(
    model: AdaNetModel, dataset: Dataset, selection: CvxSelection, activation: str
) -> np.ndarray:
    if selection.layer == 1:
        return dataset.features @ selection.weights
    out = model.forward_units(dataset.features)
    cols = np.column_stack(
        [apply_activation(activation, out[uid]) for uid in selection.source_ids]
    )
    return cols @ selection.weights
