"""The grown model: per-round subnetworks, output weights, and evaluation.

A unit's stored activation is the one applied to its *source* outputs before
the dot product; the output layer always reads raw (pre-activation) unit
outputs.  Units are append-only and identified by "round.layer.index" ids;
input features are identified by "f<j>" ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import ACTIVATIONS, InvalidInputError, apply_activation

SCHEMA_VERSION = 1


class StructuralError(ValueError):
    """A subnetwork references sources that the model does not permit."""


class DocumentError(ValueError):
    """A model document that does not match the schema."""


def feature_id(j: int) -> str:
    return f"f{j}"


def unit_id(round_idx: int, layer: int, index: int) -> str:
    return f"{round_idx}.{layer}.{index}"


@dataclass(frozen=True)
class Unit:
    """One unit: a weighted sum of activated source outputs (or raw features)."""

    uid: str
    layer: int
    sources: tuple[str, ...]
    weights: np.ndarray
    activation: str | None  # applied to source outputs; None for layer-1 units

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.sources),):
            raise InvalidInputError("unit weights must align with sources")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("non-finite unit weights")
        if self.activation is not None and self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"unknown activation: {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sources", tuple(self.sources))


@dataclass(frozen=True)
class Subnetwork:
    """One round's additive block: a stack of unit layers (lower ones may be empty)."""

    round_index: int
    depth: int
    layers: tuple[tuple[Unit, ...], ...]

    def __post_init__(self):
        if self.depth < 1 or len(self.layers) != self.depth:
            raise InvalidInputError("layers must cover depths 1..depth")
        object.__setattr__(
            self, "layers", tuple(tuple(layer) for layer in self.layers)
        )

    def top_units(self) -> tuple[Unit, ...]:
        return self.layers[-1]

    def all_units(self):
        for layer in self.layers:
            yield from layer


@dataclass(frozen=True)
class AdaNetModel:
    """The ensemble network built over rounds; immutable, attach returns a copy."""

    n_features: int
    loss: str
    subnetworks: tuple[Subnetwork, ...] = ()
    output_weights: tuple[tuple[str, float], ...] = ()
    hyperparams: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return max((s.depth for s in self.subnetworks), default=0)

    @property
    def intercept(self) -> float:
        return float(self.hyperparams.get("intercept", 0.0))

    def units_by_layer(self) -> dict[int, list[Unit]]:
        layers: dict[int, list[Unit]] = {}
        for sub in self.subnetworks:
            for k, layer in enumerate(sub.layers, start=1):
                layers.setdefault(k, []).extend(layer)
        return layers

    def layer_unit_counts(self) -> list[int]:
        """Unit counts n_k for k = 1..depth."""
        layers = self.units_by_layer()
        return [len(layers.get(k, [])) for k in range(1, self.depth + 1)]

    def _unit_index(self) -> dict[str, Unit]:
        return {u.uid: u for sub in self.subnetworks for u in sub.all_units()}

    def forward_units(self, X: np.ndarray) -> dict[str, np.ndarray]:
        """Pre-activation outputs of every unit on the rows of X, bottom-up.

        Each unit's output vector is computed once and reused by all units
        that read it.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise InvalidInputError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        out: dict[str, np.ndarray] = {}
        layers = self.units_by_layer()
        for k in sorted(layers):
            for unit in layers[k]:
                cols = []
                for src in unit.sources:
                    if src.startswith("f"):
                        cols.append(X[:, int(src[1:])])
                    else:
                        val = out[src]
                        if unit.activation is not None:
                            val = apply_activation(unit.activation, val)
                        cols.append(val)
                inputs = np.column_stack(cols) if cols else np.zeros((X.shape[0], 0))
                out[unit.uid] = inputs @ unit.weights
        return out

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        """Output-layer score: weighted sum of pre-activation unit outputs."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        scores = np.full(X.shape[0], self.intercept, dtype=np.float64)
        if self.output_weights:
            out = self.forward_units(X)
            for uid, w in self.output_weights:
                if w != 0.0:
                    scores += w * out[uid]
        return scores

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Score after applying any stored feature standardization."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        stats = self.hyperparams.get("standardize")
        if stats is not None:
            mean = np.asarray(stats["mean"], dtype=np.float64)
            std = np.asarray(stats["std"], dtype=np.float64)
            safe = np.where(std > 0, std, 1.0)
            X = (X - mean) / safe
            X[:, std == 0] = 0.0
        return self.raw_scores(X)

    def score(self, x) -> float:
        """Score of a single example."""
        return float(self.raw_scores(np.asarray(x, dtype=np.float64)[None, :])[0])

    def output_weight_l1_by_layer(self) -> dict[int, float]:
        """Sum of |w| over output connections, grouped by the unit's layer."""
        index = self._unit_index()
        sums: dict[int, float] = {}
        for uid, w in self.output_weights:
            k = index[uid].layer
            sums[k] = sums.get(k, 0.0) + abs(w)
        return sums

    def attach_subnetwork(self, sub: Subnetwork, w_new) -> "AdaNetModel":
        """Append a subnetwork and extend the output weights over its top units.

        Existing weights are untouched; sources must reference features,
        earlier units of the correct layer, or units within the subnetwork.
        """
        w_new = np.asarray(w_new, dtype=np.float64)
        if w_new.shape != (len(sub.top_units()),):
            raise InvalidInputError("w_new must align with the subnetwork's top layer")
        known = {u.uid: u.layer for s in self.subnetworks for u in s.all_units()}
        for k, layer in enumerate(sub.layers, start=1):
            for unit in layer:
                if unit.layer != k:
                    raise StructuralError(f"unit {unit.uid} recorded at wrong layer")
                for src in unit.sources:
                    if src.startswith("f"):
                        if k != 1:
                            raise StructuralError(
                                f"unit {unit.uid}: feature source {src} above layer 1"
                            )
                        if not 0 <= int(src[1:]) < self.n_features:
                            raise StructuralError(f"unknown feature id {src}")
                    else:
                        if known.get(src) != k - 1:
                            raise StructuralError(
                                f"unit {unit.uid}: source {src} is not a layer-{k-1} unit"
                            )
                known[unit.uid] = k
        new_weights = self.output_weights + tuple(
            (u.uid, float(w)) for u, w in zip(sub.top_units(), w_new)
        )
        return replace(
            self,
            subnetworks=self.subnetworks + (sub,),
            output_weights=new_weights,
        )

    # ---------------------------------------------------------------- io

    def to_document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "loss": self.loss,
            "hyperparams": self.hyperparams,
            "n_features": self.n_features,
            "subnetworks": [
                {
                    "round": sub.round_index,
                    "depth": sub.depth,
                    "layers": [
                        [
                            {
                                "sources": list(u.sources),
                                "u": [float(v) for v in u.weights],
                                "activation": u.activation,
                            }
                            for u in layer
                        ]
                        for layer in sub.layers
                    ],
                }
                for sub in self.subnetworks
            ],
            "output_weights": [
                {"unit": uid, "w": float(w)} for uid, w in self.output_weights
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=1)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def _check_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    for key in obj:
        if key not in allowed:
            raise DocumentError(f"unknown field {key!r} in {where}")
    for key in required:
        if key not in obj:
            raise DocumentError(f"missing field {key!r} in {where}")


def model_from_document(doc: dict) -> AdaNetModel:
    """Parse a model document, rejecting unknown fields and dangling sources."""
    _check_keys(
        doc,
        {"schema_version", "loss", "hyperparams", "n_features", "subnetworks", "output_weights"},
        {"schema_version", "loss", "n_features", "subnetworks", "output_weights"},
        "model document",
    )
    if doc["schema_version"] != SCHEMA_VERSION:
        raise DocumentError(
            f"schema version {doc['schema_version']} not supported (want {SCHEMA_VERSION})"
        )
    model = AdaNetModel(
        n_features=int(doc["n_features"]),
        loss=doc["loss"],
        hyperparams=dict(doc.get("hyperparams", {})),
    )
    subnetworks = []
    known: dict[str, int] = {}
    for sdoc in doc["subnetworks"]:
        _check_keys(sdoc, {"round", "depth", "layers"}, {"round", "depth", "layers"}, "subnetwork")
        layers = []
        for k, layer_doc in enumerate(sdoc["layers"], start=1):
            layer = []
            for j, udoc in enumerate(layer_doc):
                _check_keys(
                    udoc, {"sources", "u", "activation"}, {"sources", "u", "activation"}, "unit"
                )
                uid = unit_id(int(sdoc["round"]), k, j)
                for src in udoc["sources"]:
                    if src.startswith("f"):
                        if not 0 <= int(src[1:]) < model.n_features:
                            raise DocumentError(f"dangling feature reference {src!r}")
                    elif known.get(src) != k - 1:
                        raise DocumentError(f"dangling source reference {src!r}")
                layer.append(
                    Unit(
                        uid=uid,
                        layer=k,
                        sources=tuple(udoc["sources"]),
                        weights=np.asarray(udoc["u"], dtype=np.float64),
                        activation=udoc["activation"],
                    )
                )
                known[uid] = k
            layers.append(tuple(layer))
        subnetworks.append(
            Subnetwork(round_index=int(sdoc["round"]), depth=int(sdoc["depth"]), layers=tuple(layers))
        )
    uids = set(known)
    output_weights = []
    for wdoc in doc["output_weights"]:
        _check_keys(wdoc, {"unit", "w"}, {"unit", "w"}, "output weight")
        if wdoc["unit"] not in uids:
            raise DocumentError(f"dangling output weight reference {wdoc['unit']!r}")
        output_weights.append((wdoc["unit"], float(wdoc["w"])))
    return replace(
        model,
        subnetworks=tuple(subnetworks),
        output_weights=tuple(output_weights),
    )


def load_model(path) -> AdaNetModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_document(json.load(fh))
