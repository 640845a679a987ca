"""Convex minimization for the per-round step weights.

Two routes to the same minimizer: proximal gradient with backtracking on the
l1-penalized round objective, and a derivative-bisection specialization for
one-dimensional steps.  Both report the final subdifferential residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import InvalidInputError, soft_threshold
from .losses import surrogate


class NumericError(RuntimeError):
    """Solver failed for numeric reasons (unbounded descent, overflow)."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """The round objective: mean surrogate of offset margins minus the new
    block's contribution, plus a single l1 penalty on the block."""

    loss: str
    base_margins: np.ndarray  # 1 - y_i * f_{t-1}(x_i)
    outputs: np.ndarray  # candidate unit outputs, shape (m, B)
    labels: np.ndarray
    gamma: float

    def __post_init__(self):
        H = np.asarray(self.outputs, dtype=np.float64)
        if H.ndim != 2:
            raise InvalidInputError("outputs must be an (m, B) matrix")
        if not np.all(np.isfinite(H)):
            raise InvalidInputError("non-finite candidate outputs")
        if self.gamma < 0:
            raise InvalidInputError("gamma must be non-negative")
        object.__setattr__(self, "outputs", H)
        object.__setattr__(
            self, "base_margins", np.asarray(self.base_margins, dtype=np.float64)
        )
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.outputs.shape[1]


@dataclass(frozen=True)
class SolveReport:
    minimizer: np.ndarray
    value: float
    iterations: int
    residual: float
    converged: bool


def smooth_part(spec: ObjectiveSpec, w: np.ndarray) -> tuple[float, np.ndarray]:
    """Value and gradient of the differentiable part of the round objective."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("non-finite weights")
    m = spec.outputs.shape[0]
    arg = spec.base_margins - spec.labels * (spec.outputs @ w)
    val, deriv = surrogate(spec.loss, arg)
    grad = -(spec.outputs.T @ (spec.labels * deriv)) / m
    return float(np.mean(val)), grad


def objective_round(spec: ObjectiveSpec, w) -> tuple[float, np.ndarray]:
    """Round objective value and the gradient of its smooth part."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (spec.dim,):
        raise InvalidInputError(f"w must have {spec.dim} entries")
    val, grad = smooth_part(spec, w)
    return val + spec.gamma * float(np.sum(np.abs(w))), grad


def objective_full(model, dataset, loss: str, gammas) -> float:
    """Full regularized objective of the grown model on the training sample."""
    gammas = np.asarray(gammas, dtype=np.float64)
    weights = np.array([w for _, w in model.output_weights])
    if gammas.shape != weights.shape:
        raise InvalidInputError("one penalty per attached output weight required")
    scores = model.raw_scores(dataset.features)
    val, _ = surrogate(loss, 1.0 - dataset.labels * scores)
    return float(np.mean(val) + np.sum(gammas * np.abs(weights)))


def optimality_residual(spec: ObjectiveSpec, w: np.ndarray, grad: np.ndarray) -> float:
    """Distance of 0 from the subdifferential, coordinate-wise max."""
    res = np.where(
        w != 0.0,
        np.abs(grad + spec.gamma * np.sign(w)),
        np.maximum(np.abs(grad) - spec.gamma, 0.0),
    )
    return float(np.max(res)) if res.size else 0.0


def prox_solve(
    spec: ObjectiveSpec,
    w0=None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> SolveReport:
    """Proximal-gradient descent with halving backtracking from step 1.0."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    w = np.zeros(spec.dim) if w0 is None else np.asarray(w0, dtype=np.float64)
    return proximal_gradient(
        lambda v: smooth_part(spec, v), w, spec.gamma, tol=tol, max_iter=max_iter
    )


def _directional_derivative(spec: ObjectiveSpec, w: float) -> float:
    _, grad = smooth_part(spec, np.array([w]))
    return float(grad[0])


def bisect_1d(spec: ObjectiveSpec, tol: float = 1e-10, max_expand: int = 200) -> SolveReport:
    """Bisection on the piecewise-smooth derivative of a one-dimensional step.

    The kink at 0 is handled through one-sided subderivatives: 0 is optimal
    whenever |g'(0)| <= gamma.
    """
    if spec.dim != 1:
        raise InvalidInputError("bisect_1d requires a single coordinate")
    g0 = _directional_derivative(spec, 0.0)
    if abs(g0) <= spec.gamma:
        val, grad = objective_round(spec, np.array([0.0]))
        return SolveReport(np.array([0.0]), val,
                           0, optimality_residual(spec, np.array([0.0]), grad), True)
    # derivative of the full objective away from 0
    sign = 1.0 if g0 < -spec.gamma else -1.0  # side of the minimizer

    def deriv(w: float) -> float:
        return _directional_derivative(spec, w) + spec.gamma * np.sign(w)

    lo, hi = 0.0, sign
    for _ in range(max_expand):
        if deriv(hi) * sign >= 0.0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NumericError("bracket expansion failed: unbounded descent")
    a, b = (lo, hi) if sign > 0 else (hi, lo)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if deriv(mid) > 0.0:
            b = mid
        else:
            a = mid
        if b - a <= tol:
            break
    w = np.array([0.5 * (a + b)])
    val, grad = objective_round(spec, w)
    residual = optimality_residual(spec, w, grad)
    return SolveReport(w, val, 0, residual, residual <= max(tol, 1e-8) * 100)


def proximal_gradient(
    smooth_fn,
    w0,
    l1_weights,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    step0: float = 1.0,
) -> SolveReport:
    """Generic ISTA with backtracking for mean-loss + weighted-l1 objectives.

    ``smooth_fn(w) -> (value, gradient)``; ``l1_weights`` is a scalar or a
    per-coordinate array (zeros leave coordinates unpenalized).
    """
    w = np.asarray(w0, dtype=np.float64).copy()
    l1 = np.broadcast_to(np.asarray(l1_weights, dtype=np.float64), w.shape)
    f_val, grad = smooth_fn(w)
    step = step0

    def residual_of(wv, gv):
        res = np.where(
            wv != 0.0,
            np.abs(gv + l1 * np.sign(wv)),
            np.maximum(np.abs(gv) - l1, 0.0),
        )
        return float(np.max(res)) if res.size else 0.0

    residual = residual_of(w, grad)
    for iterations in range(1, max_iter + 1):
        if residual <= tol:
            return SolveReport(w, f_val + float(np.sum(l1 * np.abs(w))),
                               iterations - 1, residual, True)
        step = min(step * 2.0, step0)
        while True:
            w_new = soft_threshold(w - step * grad, step * l1)
            diff = w_new - w
            f_new, grad_new = smooth_fn(w_new)
            quad = f_val + float(grad @ diff) + float(diff @ diff) / (2.0 * step)
            if np.isfinite(f_new) and f_new <= quad + 1e-15:
                break
            step *= 0.5
            if step < 1e-18:
                raise NumericError("backtracking step underflow")
        w, f_val, grad = w_new, f_new, grad_new
        residual = residual_of(w, grad)
    return SolveReport(w, f_val + float(np.sum(l1 * np.abs(w))),
                       max_iter, residual, residual <= tol)
