"""Convex surrogate losses, margin error, and the boosting sample distribution.

The round objectives always evaluate the surrogate at 1 - y*f (margin offset
one), and the sample distribution weights examples by the derivative of the
surrogate at that argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import InvalidInputError, sigmoid

LOSS_KINDS = ("exponential", "logistic")


def surrogate(kind: str, x):
    """Return (value, derivative) of the surrogate loss at x (array or scalar).

    exponential: exp(x); logistic: log(1 + exp(x)), both evaluated stably.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite surrogate argument")
    if kind == "exponential":
        val = np.exp(arr)
        return val, val.copy()
    if kind == "logistic":
        # log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
        val = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
        return val, sigmoid(arr)
    raise InvalidInputError(f"unknown loss kind: {kind!r}")


def margin_error(scores, labels, rho: float) -> float:
    """Fraction of examples with margin y*f(x) <= rho."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise InvalidInputError("scores and labels must have equal length")
    if rho < 0:
        raise InvalidInputError("rho must be non-negative")
    return float(np.mean(labels * scores <= rho))


@dataclass(frozen=True)
class SampleDistribution:
    """Normalized example weights D(i) plus the normalizer S_t."""

    weights: np.ndarray
    normalizer: float


def boosting_distribution(kind: str, scores, labels) -> SampleDistribution:
    """Example weights proportional to the loss derivative at 1 - y*f.

    The normalizer S_t is the raw sum of derivatives.  For the exponential
    loss the weights are computed through a shifted exponent so that the
    normalized distribution never overflows.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError("non-finite scores")
    arg = 1.0 - labels * scores
    if kind == "exponential":
        shift = np.max(arg)
        shifted = np.exp(arg - shift)
        weights = shifted / np.sum(shifted)
        with np.errstate(over="ignore"):  # normalizer may saturate to inf
            normalizer = float(np.sum(shifted) * np.exp(shift))
    else:
        _, deriv = surrogate(kind, arg)
        normalizer = float(np.sum(deriv))
        weights = deriv / normalizer
    return SampleDistribution(weights=weights, normalizer=normalizer)
