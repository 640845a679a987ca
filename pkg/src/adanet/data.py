"""Dataset ingestion, standardization, fold rotation and synthetic generators.

The on-disk format is plain CSV: first column the label (-1/+1, or 0/1 which
is remapped), remaining columns float features, optional single header row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import InvalidInputError, make_rng


class ParseError(ValueError):
    """CSV row that cannot be turned into a labeled example."""


@dataclass(frozen=True)
class Dataset:
    """A binary-labeled sample: one feature row per example, labels in {-1,+1}."""

    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError("features must be a non-empty 2-d array")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("non-finite feature entries")
        if y.shape != (X.shape[0],):
            raise InvalidInputError("labels must align with feature rows")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidInputError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class DatasetStats:
    """Per-column standardization statistics plus the max-row-infinity-norm."""

    mean: np.ndarray
    std: np.ndarray
    r_inf: float


@dataclass(frozen=True)
class FoldAssignment:
    """A 10-way partition with a designated test fold; validation is the next fold."""

    fold_of: np.ndarray = field(repr=False)
    test_fold: int

    @property
    def n_folds(self) -> int:
        return 10

    @property
    def validation_fold(self) -> int:
        return (self.test_fold + 1) % self.n_folds

    def test_indices(self) -> np.ndarray:
        return np.flatnonzero(self.fold_of == self.test_fold)

    def validation_indices(self) -> np.ndarray:
        return np.flatnonzero(self.fold_of == self.validation_fold)

    def train_indices(self) -> np.ndarray:
        mask = (self.fold_of != self.test_fold) & (self.fold_of != self.validation_fold)
        return np.flatnonzero(mask)


def _parse_label(tok: str, line_no: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"line {line_no}: non-numeric label {tok!r}") from None
    if val in (-1.0, 1.0):
        return val
    if val == 0.0:
        return -1.0
    raise ParseError(f"line {line_no}: label {tok!r} not in {{-1, 0, 1}}")


def load_csv(path, has_header: bool = False) -> Dataset:
    """Load a label-first CSV file into a Dataset.

    Labels given as 0/1 are remapped to -1/+1.  Errors name the 1-based line
    number of the offending row (header excluded from numbering).
    """
    names = None
    labels: list[float] = []
    rows: list[list[float]] = []
    arity = None
    with open(path, "r", encoding="utf-8", newline=None) as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    body = lines[1:] if has_header else lines
    if has_header and lines:
        names = tuple(tok.strip() for tok in lines[0].split(",")[1:])
    for line_no, line in enumerate(body, start=1):
        if not line.strip():
            continue
        toks = [tok.strip() for tok in line.split(",")]
        if arity is None:
            arity = len(toks)
            if arity < 2:
                raise ParseError(f"line {line_no}: need a label and at least one feature")
        elif len(toks) != arity:
            raise ParseError(
                f"line {line_no}: expected {arity} fields, got {len(toks)}"
            )
        labels.append(_parse_label(toks[0], line_no))
        try:
            rows.append([float(tok) for tok in toks[1:]])
        except ValueError:
            raise ParseError(f"line {line_no}: non-numeric feature field") from None
    if not rows:
        raise ParseError("empty file")
    return Dataset(np.array(rows), np.array(labels), column_names=names)


def save_csv(dataset: Dataset, path, header: bool = False) -> None:
    """Write a Dataset in the label-first CSV layout accepted by load_csv."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            names = dataset.column_names or tuple(
                f"f{j}" for j in range(dataset.n_features)
            )
            fh.write("label," + ",".join(names) + "\n")
        for y, row in zip(dataset.labels, dataset.features):
            fh.write(f"{int(y)}," + ",".join(repr(float(v)) for v in row) + "\n")


def standardize(dataset: Dataset) -> tuple[Dataset, DatasetStats]:
    """Center and scale each column to mean 0, population stdev 1.

    Zero-variance columns are mapped to all zeros.  The returned stats can be
    reused on held-out data via apply_standardization.
    """
    if dataset.m < 2:
        raise InvalidInputError("standardization needs at least 2 examples")
    mean = dataset.features.mean(axis=0)
    std = dataset.features.std(axis=0)  # population (1/m) convention
    stats = DatasetStats(mean=mean, std=std, r_inf=r_infinity(dataset))
    return apply_standardization(dataset, stats), stats


def apply_standardization(dataset: Dataset, stats: DatasetStats) -> Dataset:
    """Apply previously computed column statistics; zero-variance columns -> 0."""
    safe = np.where(stats.std > 0, stats.std, 1.0)
    X = (dataset.features - stats.mean) / safe
    X[:, stats.std == 0] = 0.0
    return Dataset(X, dataset.labels, column_names=dataset.column_names)


def r_infinity(dataset: Dataset) -> float:
    """Largest infinity-norm of any feature row."""
    return float(np.max(np.abs(dataset.features)))


def make_folds(dataset: Dataset, test_fold: int, seed: int) -> FoldAssignment:
    """Shuffle indices into 10 near-equal folds; fold sizes differ by <= 1.

    Fold ``test_fold`` is the test set, the next fold (mod 10) validation,
    the remaining eight folds training.
    """
    if dataset.m < 10:
        raise InvalidInputError("need at least 10 examples for 10 folds")
    if not 0 <= test_fold <= 9:
        raise InvalidInputError("test_fold must be in 0..9")
    perm = make_rng(seed).permutation(dataset.m)
    fold_of = np.empty(dataset.m, dtype=np.int64)
    fold_of[perm] = np.arange(dataset.m) % 10
    return FoldAssignment(fold_of=fold_of, test_fold=test_fold)


def subset(dataset: Dataset, indices: np.ndarray) -> Dataset:
    return Dataset(
        dataset.features[indices],
        dataset.labels[indices],
        column_names=dataset.column_names,
    )


def synth(kind: str, m: int, noise: float, seed: int) -> Dataset:
    """Generate a desk-scale synthetic dataset.

    ``circles``: two concentric annuli in R^2 labeled by radius; not linearly
    separable.  ``linear``: two Gaussian blobs in R^4 separated along a random
    hyperplane; linearly separable at noise=0.
    """
    if m < 4:
        raise InvalidInputError("m must be at least 4")
    rng = make_rng(seed)
    half = m // 2
    y = np.concatenate([np.ones(half), -np.ones(m - half)])
    if kind == "circles":
        radius = np.where(
            y > 0,
            rng.uniform(0.4, 1.0, size=m),
            rng.uniform(1.6, 2.2, size=m),
        )
        theta = rng.uniform(0.0, 2.0 * np.pi, size=m)
        X = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        X += noise * rng.standard_normal((m, 2))
    elif kind == "linear":
        w = rng.standard_normal(4)
        w /= np.linalg.norm(w)
        g = rng.standard_normal((m, 4))
        tangent = g - np.outer(g @ w, w)  # spread orthogonal to the separator
        X = np.outer(y, w) + 0.5 * tangent + noise * rng.standard_normal((m, 4))
    else:
        raise InvalidInputError(f"unknown synthetic kind: {kind!r}")
    perm = rng.permutation(m)
    return Dataset(X[perm], y[perm])
