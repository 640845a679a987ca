"""Dense numeric primitives shared by every other module.

Everything here is a pure function on float64 arrays.  Activations are the
1-Lipschitz ones used by grown units (relu, sigmoid) plus identity for raw
unit outputs.
"""

from __future__ import annotations

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")


class InvalidInputError(ValueError):
    """Raised when an operation receives malformed numeric input."""


def as_vector(v) -> np.ndarray:
    """Coerce to a finite float64 array, raising on NaN/Inf."""
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite entries in input")
    return arr


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function 1 / (1 + exp(-x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply_activation(kind: str, v) -> np.ndarray:
    """Apply an activation coordinate-wise to a finite array."""
    arr = as_vector(v)
    if kind == "relu":
        return np.maximum(arr, 0.0)
    if kind == "sigmoid":
        return sigmoid(arr)
    if kind == "identity":
        return arr
    raise InvalidInputError(f"unknown activation kind: {kind!r}")


def activation_derivative(kind: str, z: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation values z.

    relu uses subderivative 0 at the kink.
    """
    z = np.asarray(z, dtype=np.float64)
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        s = sigmoid(z)
        return s * (1.0 - s)
    if kind == "identity":
        return np.ones_like(z)
    raise InvalidInputError(f"unknown activation kind: {kind!r}")


def pnorm(v, p: float) -> float:
    """l_p norm for p in [1, inf]; p=inf returns the max magnitude."""
    if p < 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    arr = as_vector(v)
    if arr.size == 0:
        return 0.0
    if np.isinf(p):
        return float(np.max(np.abs(arr)))
    if p == 1:
        return float(np.sum(np.abs(arr)))
    return float(np.sum(np.abs(arr) ** p) ** (1.0 / p))


def dual_exponent(p: float) -> float:
    """Conjugate exponent q with 1/p + 1/q = 1; maps 1 <-> inf."""
    if p < 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def soft_threshold(x, tau):
    """Shrinkage operator sign(x) * max(|x| - tau, 0); tau >= 0."""
    if np.any(np.asarray(tau) < 0):
        raise InvalidInputError("threshold must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic counter-based random stream (Philox)."""
    return np.random.Generator(np.random.Philox(seed))


def project_pnorm_ball(u: np.ndarray, p: float, radius: float) -> np.ndarray:
    """Radial projection onto the l_p ball of the given radius."""
    norm = pnorm(u, p)
    if norm <= radius or norm == 0.0:
        return u
    return u * (radius / norm)
