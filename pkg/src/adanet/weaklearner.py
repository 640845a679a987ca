"""Candidate-subnetwork generation.

Two generators: a mini-batch SGD heuristic that trains a B-units-per-layer
block against the current residual loss (with full / previous-round /
dropout connection policies and an optional l1 penalty on the temporary top
weights), and the closed-form dual-norm construction that picks a single
best unit per layer via the boosting-distribution edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernel import (
    InvalidInputError,
    activation_derivative,
    apply_activation,
    dual_exponent,
    make_rng,
    pnorm,
    project_pnorm_ball,
)
from .losses import boosting_distribution, surrogate
from .network import AdaNetModel, Subnetwork, Unit, feature_id, unit_id

POLICIES = ("full", "previous", "dropout")


class TrainingDivergedError(RuntimeError):
    """SGD hit a non-finite loss; carries the iteration index."""

    def __init__(self, iteration: int):
        super().__init__(f"candidate training diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class CandidateSpec:
    """Shape and training budget of one candidate subnetwork."""

    round_index: int
    depth: int
    units_per_layer: int
    policy: str = "full"
    activation: str = "relu"
    lambdas: tuple[float, ...] = ()
    p: float = 2.0
    learning_rate: float = 0.01
    batch_size: int = 100
    max_iter: int = 10_000
    dropout_rate: float = 0.0
    seed: int = 0
    penalty_mode: str = "none"  # none | adanet-r
    gamma: float = 0.0
    enforce_norms: bool = False

    def __post_init__(self):
        if self.depth < 1 or self.units_per_layer < 1:
            raise InvalidInputError("depth and units_per_layer must be >= 1")
        if self.policy not in POLICIES:
            raise InvalidInputError(f"unknown policy: {self.policy!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidInputError("dropout rate must lie in [0, 1)")
        if self.penalty_mode not in ("none", "adanet-r"):
            raise InvalidInputError(f"unknown penalty mode: {self.penalty_mode!r}")


@dataclass(frozen=True)
class EdgeVector:
    """Weighted label correlations of permissible input units under D_t."""

    values: np.ndarray
    source_ids: tuple[str, ...]


def dropout_mask(rate: float, seed: int, round_index: int, prior_ids) -> np.ndarray:
    """Bernoulli keep-mask over cross-subnetwork connections, one flag per
    prior unit; deterministic in (seed, round)."""
    if not 0.0 <= rate < 1.0:
        raise InvalidInputError("dropout rate must lie in [0, 1)")
    rng = make_rng((seed << 16) ^ (round_index * 2654435761 % (1 << 31)))
    return (rng.random(len(prior_ids)) >= rate).astype(np.float64)


def prior_units_by_layer(model: AdaNetModel, policy: str) -> dict[int, list[Unit]]:
    """Existing units a new candidate may read, per layer, under the policy."""
    if policy in ("full", "dropout"):
        return model.units_by_layer()
    if policy == "previous":
        if not model.subnetworks:
            return {}
        last = model.subnetworks[-1]
        return {
            k: list(layer) for k, layer in enumerate(last.layers, start=1) if layer
        }
    raise InvalidInputError(f"unknown policy: {policy!r}")


class CandidateNet:
    """A trainable candidate block plus temporary top weights.

    Prior-unit outputs enter as fixed (already activated) input columns at
    each layer above the first; only the block's own weights and the top
    weights receive gradients.
    """

    def __init__(self, spec: CandidateSpec, loss: str, n_features: int,
                 prior_inputs: list[np.ndarray], prior_ids: list[tuple[str, ...]],
                 rng: np.random.Generator):
        self.spec = spec
        self.loss = loss
        self.n_features = n_features
        self.prior_inputs = prior_inputs  # index k-2 holds layer-k cross inputs
        self.prior_ids = prior_ids
        B = spec.units_per_layer
        self.layer_weights: list[np.ndarray] = []
        for k in range(1, spec.depth + 1):
            fan_in = n_features if k == 1 else B + prior_inputs[k - 2].shape[1]
            fan_out = B if k < spec.depth else 1
            a = np.sqrt(6.0 / (fan_in + fan_out))
            self.layer_weights.append(rng.uniform(-a, a, size=(B, fan_in)))
        a = np.sqrt(6.0 / (B + 1))
        self.top_weights = rng.uniform(-a, a, size=B)

    def forward(self, X: np.ndarray, rows=None):
        """Pre-activations per layer and the block's top outputs for rows of X."""
        act = self.spec.activation
        Xb = X if rows is None else X[rows]
        zs = [Xb @ self.layer_weights[0].T]
        inputs = [Xb]
        for k in range(2, self.spec.depth + 1):
            own = apply_activation(act, zs[-1])
            prior = self.prior_inputs[k - 2]
            prior_b = prior if rows is None else prior[rows]
            inp = np.hstack([own, prior_b]) if prior_b.shape[1] else own
            inputs.append(inp)
            zs.append(inp @ self.layer_weights[k - 1].T)
        return zs, inputs

    def top_outputs(self, X: np.ndarray) -> np.ndarray:
        zs, _ = self.forward(X)
        return zs[-1]

    def loss_and_grad(self, X, labels, base_margins, rows=None):
        """Residual surrogate loss of the candidate and exact gradients.

        Returns (value, per-layer weight gradients, top weight gradient).
        """
        spec = self.spec
        zs, inputs = self.forward(X, rows)
        y = labels if rows is None else labels[rows]
        base = base_margins if rows is None else base_margins[rows]
        nb = len(y)
        scores = zs[-1] @ self.top_weights
        arg = base - y * scores
        val, deriv = surrogate(self.loss, arg)
        value = float(np.mean(val))
        dscore = -(y * deriv) / nb
        grad_top = zs[-1].T @ dscore
        if spec.penalty_mode == "adanet-r":
            value += spec.gamma * float(np.sum(np.abs(self.top_weights)))
            grad_top = grad_top + spec.gamma * np.sign(self.top_weights)
        delta = np.outer(dscore, self.top_weights)
        grads = [None] * spec.depth
        B = spec.units_per_layer
        for k in range(spec.depth, 0, -1):
            grads[k - 1] = delta.T @ inputs[k - 1]
            if k > 1:
                delta = (delta @ self.layer_weights[k - 1][:, :B]) * activation_derivative(
                    spec.activation, zs[k - 2]
                )
        return value, grads, grad_top


def _collect_prior_inputs(
    model: AdaNetModel, dataset: Dataset, spec: CandidateSpec
) -> tuple[list[np.ndarray], list[tuple[str, ...]], np.ndarray | None]:
    """Activated outputs of permitted prior units per candidate layer >= 2.

    Under the dropout policy a fixed keep-mask (inverted-dropout scaled) is
    applied for the training phase; the unscaled columns are what the built
    subnetwork will read afterwards.
    """
    allowed = prior_units_by_layer(model, spec.policy)
    out = model.forward_units(dataset.features) if model.subnetworks else {}
    inputs, ids = [], []
    for k in range(2, spec.depth + 1):
        units = allowed.get(k - 1, [])
        uids = tuple(u.uid for u in units)
        if units:
            cols = np.column_stack(
                [apply_activation(spec.activation, out[u.uid]) for u in units]
            )
        else:
            cols = np.zeros((dataset.m, 0))
        inputs.append(cols)
        ids.append(uids)
    mask = None
    if spec.policy == "dropout" and any(len(u) for u in ids):
        flat = [uid for uids in ids for uid in uids]
        mask = dropout_mask(spec.dropout_rate, spec.seed, spec.round_index, flat)
    return inputs, ids, mask


def gen_candidate_sgd(
    model: AdaNetModel, dataset: Dataset, spec: CandidateSpec, loss: str
) -> Subnetwork:
    """Train a candidate block by mini-batch SGD on the residual objective.

    The temporary top weights are discarded; the returned subnetwork carries
    only the trained inner weights (projected onto the norm caps when
    enforcement is on).
    """
    rng = make_rng(spec.seed)
    prior_inputs, prior_ids, mask = _collect_prior_inputs(model, dataset, spec)
    train_inputs = prior_inputs
    if mask is not None:
        scale = mask / (1.0 - spec.dropout_rate)
        train_inputs, pos = [], 0
        for cols in prior_inputs:
            width = cols.shape[1]
            train_inputs.append(cols * scale[pos : pos + width])
            pos += width

    net = CandidateNet(spec, loss, dataset.n_features, train_inputs, prior_ids, rng)
    base_margins = 1.0 - dataset.labels * model.raw_scores(dataset.features)
    m = dataset.m
    batch = min(spec.batch_size, m)
    for it in range(spec.max_iter):
        rows = rng.integers(0, m, size=batch)
        value, grads, grad_top = net.loss_and_grad(
            dataset.features, dataset.labels, base_margins, rows
        )
        if not np.isfinite(value):
            raise TrainingDivergedError(it)
        for W, g in zip(net.layer_weights, grads):
            W -= spec.learning_rate * g
        net.top_weights -= spec.learning_rate * grad_top

    # evaluation after training uses all connections, unscaled
    net.prior_inputs = prior_inputs
    return _build_subnetwork(spec, net, prior_ids)


def _build_subnetwork(
    spec: CandidateSpec, net: CandidateNet, prior_ids: list[tuple[str, ...]]
) -> Subnetwork:
    B = spec.units_per_layer
    layers = []
    for k in range(1, spec.depth + 1):
        if k == 1:
            sources = tuple(feature_id(j) for j in range(net.n_features))
            activation = None
        else:
            own = tuple(unit_id(spec.round_index, k - 1, j) for j in range(B))
            sources = own + prior_ids[k - 2]
            activation = spec.activation
        units = []
        for j in range(B):
            w = net.layer_weights[k - 1][j].copy()
            if spec.enforce_norms and spec.lambdas:
                cap = spec.lambdas[min(k, len(spec.lambdas)) - 1]
                w = project_pnorm_ball(w, spec.p, cap)
            units.append(
                Unit(
                    uid=unit_id(spec.round_index, k, j),
                    layer=k,
                    sources=sources,
                    weights=w,
                    activation=activation,
                )
            )
        layers.append(tuple(units))
    return Subnetwork(round_index=spec.round_index, depth=spec.depth, layers=tuple(layers))


# ------------------------------------------------------------------ dual route


def cvx_edges(
    model: AdaNetModel,
    dataset: Dataset,
    loss: str,
    layer: int,
    activation: str = "relu",
    scores: np.ndarray | None = None,
) -> EdgeVector:
    """Boosting-distribution-weighted correlations of permissible inputs.

    Layer 1 correlates the raw features with the labels; higher layers use
    the activated outputs of the model's layer-(s-1) units.
    """
    if scores is None:
        scores = model.raw_scores(dataset.features)
    dist = boosting_distribution(loss, scores, dataset.labels)
    weighted = dist.weights * dataset.labels
    if layer == 1:
        values = dataset.features.T @ weighted
        ids = tuple(feature_id(j) for j in range(dataset.n_features))
        return EdgeVector(values=values, source_ids=ids)
    units = model.units_by_layer().get(layer - 1, [])
    if not units:
        raise InvalidInputError(f"no units exist at layer {layer - 1}")
    out = model.forward_units(dataset.features)
    cols = np.column_stack([apply_activation(activation, out[u.uid]) for u in units])
    return EdgeVector(values=cols.T @ weighted, source_ids=tuple(u.uid for u in units))


def dual_weights(eps: np.ndarray, p: float, cap: float) -> np.ndarray:
    """Weight vector of p-norm <= cap attaining u . eps = cap * ||eps||_q.

    The magnitude profile is |eps_i|^(q-1) rescaled; signs follow eps so the
    dual norm is attained exactly.  p=1 concentrates on the max-magnitude
    coordinate (lowest index on ties); p=inf takes the full sign vector.
    """
    eps = np.asarray(eps, dtype=np.float64)
    q = dual_exponent(p)
    if np.all(eps == 0.0):
        return np.zeros_like(eps)
    if np.isinf(q):  # p = 1
        i_star = int(np.argmax(np.abs(eps)))
        u = np.zeros_like(eps)
        u[i_star] = cap * np.sign(eps[i_star])
        return u
    if q == 1.0:  # p = inf
        return cap * np.sign(eps)
    norm_q = pnorm(eps, q)
    return np.sign(eps) * cap * np.abs(eps) ** (q - 1.0) / norm_q ** (q / p)


@dataclass(frozen=True)
class CvxSelection:
    layer: int
    weights: np.ndarray
    dual_value: float
    source_ids: tuple[str, ...]
    dual_values_by_layer: tuple[float, ...] = field(default=())


def cvx_select(
    model: AdaNetModel,
    dataset: Dataset,
    loss: str,
    lambdas,
    p: float,
    activation: str = "relu",
    scores: np.ndarray | None = None,
) -> CvxSelection | None:
    """Pick the closed-form best single-unit candidate over layers 1..depth+1.

    Returns None when every edge vector vanishes (no descent direction).
    Ties in the layer argmax break toward the shallower layer.
    """
    q = dual_exponent(p)
    depth = model.depth
    lambdas = np.asarray(lambdas, dtype=np.float64)
    candidates = []
    duals = []
    for s in range(1, depth + 2):
        if s > 1 and not model.units_by_layer().get(s - 1):
            duals.append(0.0)
            candidates.append(None)
            continue
        edges = cvx_edges(model, dataset, loss, s, activation, scores)
        cap = float(lambdas[min(s, len(lambdas)) - 1])
        duals.append(cap * pnorm(edges.values, q))
        candidates.append(edges)
    best = int(np.argmax(duals))
    # argmax returns the first maximizer, which is the shallowest layer
    if duals[best] <= 0.0 or candidates[best] is None:
        return None
    s_star = best + 1
    edges = candidates[best]
    cap = float(lambdas[min(s_star, len(lambdas)) - 1])
    u = dual_weights(edges.values, p, cap)
    return CvxSelection(
        layer=s_star,
        weights=u,
        dual_value=float(duals[best]),
        source_ids=edges.source_ids,
        dual_values_by_layer=tuple(duals),
    )


def cvx_subnetwork(selection: CvxSelection, round_index: int, activation: str) -> Subnetwork:
    """Wrap a dual-selected unit as a single-top-unit subnetwork.

    Lower layers are empty: the unit reads previously built units directly.
    """
    s = selection.layer
    unit = Unit(
        uid=unit_id(round_index, s, 0),
        layer=s,
        sources=selection.source_ids,
        weights=selection.weights,
        activation=None if s == 1 else activation,
    )
    layers = tuple(() for _ in range(s - 1)) + ((unit,),)
    return Subnetwork(round_index=round_index, depth=s, layers=layers)
