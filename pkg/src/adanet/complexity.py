"""Rademacher-complexity machinery: layer bounds, Monte-Carlo estimation,
the standard-deviation surrogate, and the margin-based generalization bound.

Logs are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, r_infinity
from .kernel import InvalidInputError, apply_activation, make_rng
from .network import AdaNetModel


@dataclass(frozen=True)
class ComplexitySchedule:
    """Per-depth penalty scales r_k and where they came from."""

    values: tuple[float, ...]
    provenance: str  # explicit-bound | sd-surrogate | user-supplied

    def value_at(self, depth: int) -> float:
        if not 1 <= depth <= len(self.values):
            raise InvalidInputError(f"no complexity value for depth {depth}")
        return self.values[depth - 1]


@dataclass(frozen=True)
class BoundConfig:
    """Inputs of the explicit margin bound besides the model itself."""

    rho: float
    delta: float
    lambdas: tuple[float, ...]  # per-layer norm caps, index s-1 holds Lambda_{s,s-1}
    q: float

    def __post_init__(self):
        if self.rho <= 0:
            raise InvalidInputError("rho must be positive")
        if not 0 < self.delta < 1:
            raise InvalidInputError("delta must lie in (0, 1)")
        if any(lam < 0 for lam in self.lambdas):
            raise InvalidInputError("norm caps must be non-negative")


def rademacher_recursive(bounds_below, lambdas, n_units, q: float) -> float:
    """One step of the recursive layer bound: 2 * sum_s Lambda_s n_s^(1/q) R_s."""
    bounds_below = np.asarray(bounds_below, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    n_units = np.asarray(n_units, dtype=np.float64)
    if not (bounds_below.shape == lambdas.shape == n_units.shape):
        raise InvalidInputError("per-layer lists must be aligned")
    if np.any(bounds_below < 0) or np.any(lambdas < 0) or np.any(n_units < 0):
        raise InvalidInputError("inputs must be non-negative")
    if np.isinf(q):
        factors = np.ones_like(n_units)
    else:
        factors = n_units ** (1.0 / q)
    return float(2.0 * np.sum(lambdas * factors * bounds_below))


def rademacher_explicit(k: int, lambdas, n_units, q: float, m: int, r_inf: float) -> float:
    """Closed-form bound for a depth-k stack connected only layer-to-layer.

    lambdas[s-1] is the norm cap between layers s-1 and s (s = 1..k);
    n_units[s] is the width of layer s, with n_units[0] the input dimension.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    lambdas = np.asarray(lambdas, dtype=np.float64)
    n_units = np.asarray(n_units, dtype=np.float64)
    if len(lambdas) < k or len(n_units) < k:
        raise InvalidInputError("need norm caps and widths for layers 1..k")
    if np.any(lambdas < 0) or r_inf < 0:
        raise InvalidInputError("inputs must be non-negative")
    n0 = n_units[0]
    if n0 < 1:
        raise InvalidInputError("input dimension must be at least 1")
    lam_prod = float(np.prod(2.0 * lambdas[:k]))
    width_prod = float(np.prod(n_units[:k]))
    scale = 1.0 if np.isinf(q) else width_prod ** (1.0 / q)
    return r_inf * lam_prod * scale * math.sqrt(math.log(2.0 * n0) / (2.0 * m))


def rademacher_mc_estimate(
    family_sampler, dataset: Dataset, n_trials: int, n_sigma: int, seed: int
) -> float:
    """Monte-Carlo lower estimate of the empirical Rademacher complexity.

    Averages, over ``n_sigma`` sign draws, the best correlation achieved by
    ``n_trials`` sampled family members; sampling the sup from below makes
    this a statistical lower estimate of the true value.
    """
    if n_trials < 1 or n_sigma < 1:
        raise InvalidInputError("n_trials and n_sigma must be at least 1")
    rng = make_rng(seed)
    m = dataset.m
    outputs = np.empty((n_trials, m))
    for t in range(n_trials):
        h = family_sampler(rng)
        outputs[t] = np.asarray(h(dataset.features), dtype=np.float64)
    sigmas = rng.choice((-1.0, 1.0), size=(n_sigma, m))
    corr = outputs @ sigmas.T / m  # (n_trials, n_sigma)
    return float(np.mean(np.max(corr, axis=0)))


def sd_surrogate(
    model: AdaNetModel,
    dataset: Dataset,
    depth: int,
    lam: float = 1.0,
    activation: str = "relu",
) -> float:
    """Standard-deviation surrogate for the complexity of depth-k candidates.

    Mean, over the candidate's input units (layer depth-1), of the population
    stdev of their activated outputs on the training set; depth 1 uses the
    raw features.  Depths whose input layer does not exist yet fall back to
    the deepest available surrogate scaled by 2*lam per missing layer.
    """
    if dataset.m < 1:
        raise InvalidInputError("empty dataset")
    if depth < 1:
        raise InvalidInputError("depth must be at least 1")
    if depth == 1:
        return float(np.mean(dataset.features.std(axis=0)))
    layers = model.units_by_layer()
    available = max((k for k in layers if layers[k]), default=0)
    target = depth - 1
    if target <= available:
        units = layers[target]
        out = model.forward_units(dataset.features)
        stds = [
            float(np.std(apply_activation(activation, out[unit.uid])))
            for unit in units
        ]
        return float(np.mean(stds))
    # extrapolate past the built depth, one doubling per missing layer
    base_depth = available + 1 if available >= 1 else 1
    base = sd_surrogate(model, dataset, base_depth, lam, activation)
    return base * (2.0 * lam) ** (depth - base_depth)


def make_schedule(
    kind: str,
    max_depth: int,
    lambdas,
    n_units,
    q: float,
    m: int,
    r_inf: float,
    model: AdaNetModel | None = None,
    dataset: Dataset | None = None,
    activation: str = "relu",
) -> ComplexitySchedule:
    """Build the per-depth penalty schedule used for Gamma = lambda*r + beta."""
    if kind == "explicit":
        values = tuple(
            rademacher_explicit(k, lambdas, n_units, q, m, r_inf)
            for k in range(1, max_depth + 1)
        )
        return ComplexitySchedule(values=values, provenance="explicit-bound")
    if kind == "sd":
        if model is None or dataset is None:
            raise InvalidInputError("sd surrogate needs the current model and data")
        lam = float(np.asarray(lambdas, dtype=np.float64)[0])
        values = tuple(
            sd_surrogate(model, dataset, k, lam, activation)
            for k in range(1, max_depth + 1)
        )
        return ComplexitySchedule(values=values, provenance="sd-surrogate")
    raise InvalidInputError(f"unknown schedule kind: {kind!r}")


def _c_term(rho: float, l: int, m: int, delta: float) -> tuple[float, bool]:
    """The slack term of the margin bound; returns (value, clamped flag)."""
    tail = math.log(2.0 / delta) / (2.0 * m)
    if l <= 1:
        return math.sqrt(tail), False
    log_l = math.log(l)
    arg = rho * rho * m / log_l
    clamped = arg <= 1.0
    ceil_val = 0.0 if clamped else math.ceil(4.0 / (rho * rho) * math.log(arg))
    return math.sqrt(ceil_val * log_l / m + tail), clamped


def generalization_bound(
    model: AdaNetModel, dataset: Dataset, cfg: BoundConfig
) -> dict:
    """Evaluate the explicit margin-based bound as a diagnostic report.

    The unobservable expected max-feature-magnitude is replaced by its
    plug-in sample value.  Totals above 1 are flagged vacuous.
    """
    from .losses import margin_error  # local import to avoid a cycle

    m = dataset.m
    n0 = dataset.n_features
    l = max(model.depth, 1)
    scores = model.raw_scores(dataset.features)
    emp_margin = margin_error(scores, dataset.labels, cfg.rho)
    r_inf = r_infinity(dataset)
    widths = [float(n0)] + [float(c) for c in model.layer_unit_counts()]
    w_l1 = model.output_weight_l1_by_layer()
    weighted = 0.0
    for k in range(1, model.depth + 1):
        wk = w_l1.get(k, 0.0)
        if wk == 0.0:
            continue
        lam_prod = float(np.prod([4.0 * cfg.lambdas[s - 1] for s in range(1, k + 1)]))
        width_prod = float(np.prod(widths[:k]))
        scale = 1.0 if np.isinf(cfg.q) else width_prod ** (1.0 / cfg.q)
        weighted += wk * r_inf * lam_prod * scale * math.sqrt(
            2.0 * math.log(2.0 * n0) / m
        )
    weighted *= 2.0 / cfg.rho
    log_l_term = 0.0 if l <= 1 else (2.0 / cfg.rho) * math.sqrt(math.log(l) / m)
    c_val, clamped = _c_term(cfg.rho, l, m, cfg.delta)
    total = emp_margin + weighted + log_l_term + c_val
    return {
        "rho": cfg.rho,
        "delta": cfg.delta,
        "terms": {
            "margin_error": emp_margin,
            "weighted_complexity": weighted,
            "log_l": log_l_term,
            "C": c_val,
        },
        "r_inf_plugin": r_inf,
        "depth": l,
        "m": m,
        "clamped": clamped,
        "total": total,
        "vacuous": total > 1.0,
    }
