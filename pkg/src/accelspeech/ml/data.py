"""Labelled feature matrices and stratified partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ClassTooSmall, NonFiniteInput
from ..features import FEATURE_NAMES


def _label_key(label: str):
    # numeric-looking labels order numerically, the rest lexically after them
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def canonical_classes(labels) -> tuple[str, ...]:
    return tuple(sorted(set(labels), key=_label_key))


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    labels: np.ndarray  # str labels
    classes: tuple[str, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.labels = np.asarray(self.labels, dtype=object)
        if self.X.ndim != 2 or self.X.shape[0] != len(self.labels):
            raise ValueError("X must be 2-D with one row per label")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names do not match X columns")
        if not np.all(np.isfinite(self.X)):
            raise NonFiniteInput("dataset contains non-finite feature values")
        unknown = set(self.labels.tolist()) - set(self.classes)
        if unknown:
            raise ValueError(f"labels {sorted(unknown)} not in class list")
        if self.ids is None:
            self.ids = np.array([f"{i}" for i in range(len(self.labels))], dtype=object)

    @classmethod
    def from_arrays(cls, X, labels, classes=None, feature_names=None, ids=None) -> "Dataset":
        labels = [str(v) for v in labels]
        classes = tuple(classes) if classes is not None else canonical_classes(labels)
        X = np.asarray(X, dtype=float)
        names = tuple(feature_names) if feature_names is not None else (
            FEATURE_NAMES if X.shape[1] == len(FEATURE_NAMES)
            else tuple(f"f{i}" for i in range(X.shape[1])))
        return cls(X, np.array(labels, dtype=object), classes, names,
                   None if ids is None else np.asarray(ids, dtype=object))

    @classmethod
    def from_vectors(cls, vectors, classes=None) -> "Dataset":
        X = np.array([v.values for v in vectors], dtype=float).reshape(len(vectors), len(FEATURE_NAMES))
        return cls.from_arrays(X, [v.label for v in vectors], classes,
                               ids=[v.region_id for v in vectors])

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def y(self) -> np.ndarray:
        """Labels as indices into ``classes``."""
        lookup = {c: i for i, c in enumerate(self.classes)}
        return np.array([lookup[v] for v in self.labels], dtype=np.int64)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.labels[rows], self.classes, self.feature_names, self.ids[rows])

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.X, np.asarray(labels, dtype=object), self.classes, self.feature_names, self.ids)


def split_train_test(data: Dataset, fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified random split; each class keeps at least one row on each side."""
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    y = data.y
    train, test = [], []
    for c in range(len(data.classes)):
        members = np.flatnonzero(y == c)
        if len(members) == 0:
            continue
        if len(members) < 2:
            raise ClassTooSmall(f"class {data.classes[c]!r} has {len(members)} member(s)")
        members = rng.permutation(members)
        n_train = min(max(int(round(fraction * len(members))), 1), len(members) - 1)
        train.extend(members[:n_train].tolist())
        test.extend(members[n_train:].tolist())
    return data.subset(sorted(train)), data.subset(sorted(test))


def stratified_folds(y: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Fold index per row; per-class fold sizes differ by at most one.

    Classes are dealt round-robin with a running offset so overall fold
    sizes also stay balanced.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == c))
        folds[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return folds
