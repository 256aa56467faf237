"""Random forest, random subspace ensemble and decision table classifiers."""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ClassTooSmall, NonFiniteInput, SingleClassDataset
from .cart import Tree, grow_tree
from .data import Dataset, split_train_test, stratified_folds
from .evaluation import EvalReport, confusion_matrix, evaluate

MODEL_FORMAT = "accelspeech-model"
MODEL_VERSION = 1

KIND_ALIASES = {
    "rf": "random_forest", "random_forest": "random_forest",
    "rss": "random_subspace", "random_subspace": "random_subspace",
    "dt": "decision_table", "decision_table": "decision_table",
}

RF_DEFAULTS = {"n_trees": 100, "max_depth": None, "min_leaf": 1, "mtry": None}
RSS_DEFAULTS = {"n_members": 10, "subspace_fraction": 0.5, "max_depth": None, "min_leaf": 1}
DT_DEFAULTS = {"search": "best_first", "eval_folds": 5, "bins": 10, "stale_limit": 5}


@dataclass(eq=False)
class TrainedModel:
    kind: str
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    params: dict
    seed: int
    members: list = field(default_factory=list)  # [(feature subset or None, Tree)]
    table: dict | None = None
    constant: int | None = None
    flags: list = field(default_factory=list)

    # -- prediction ------------------------------------------------------

    def predict_index(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("prediction input contains non-finite values")
        if self.constant is not None:
            return np.full(len(X), self.constant, dtype=np.int64)
        if self.kind == "decision_table":
            return _table_predict(self.table, X)
        votes = np.zeros((len(X), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(X))
        for _subset, tree in self.members:
            votes[rows, tree.predict_index(X)] += 1
        return np.argmax(votes, axis=1)

    def predict(self, X) -> list[str]:
        return [self.classes[i] for i in self.predict_index(X)]

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "classes": list(self.classes),
            "feature_names": list(self.feature_names),
            "params": self.params,
            "seed": self.seed,
            "flags": list(self.flags),
            "constant": self.constant,
        }
        if self.kind == "decision_table" and self.table is not None:
            t = self.table
            d["table"] = {
                "selected": list(t["selected"]),
                "cuts": [c.tolist() for c in t["cuts"]],
                "default": t["default"],
                "entries": [[list(k), v] for k, v in sorted(t["entries"].items())],
            }
        else:
            d["members"] = [
                {"features": None if s is None else list(s), "tree": tree.to_dict()}
                for s, tree in self.members
            ]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a model file")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        m = cls(d["kind"], tuple(d["classes"]), tuple(d["feature_names"]), d["params"],
                d["seed"], flags=list(d.get("flags", [])), constant=d.get("constant"))
        if "table" in d:
            t = d["table"]
            m.table = {
                "selected": tuple(t["selected"]),
                "cuts": [np.asarray(c, dtype=float) for c in t["cuts"]],
                "default": t["default"],
                "entries": {tuple(k): int(v) for k, v in t["entries"]},
            }
        for mem in d.get("members", []):
            s = mem["features"]
            m.members.append((None if s is None else tuple(s), Tree.from_dict(mem["tree"])))
        return m

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        return cls.from_dict(json.loads(text))


def predict(model: TrainedModel, vector) -> str:
    """Class label for a single feature vector."""
    v = np.asarray(vector, dtype=float).reshape(1, -1)
    return model.predict(v)[0]


def member_seeds(seed: int, n: int) -> list[int]:
    """Per-member seeds derived from the master seed, independent of schedule."""
    return np.random.SeedSequence(int(seed)).generate_state(n, dtype=np.uint32).tolist()


def _single_class(data: Dataset, kind: str, params: dict, seed: int) -> TrainedModel | None:
    present = np.unique(data.y)
    if len(present) > 1:
        return None
    warnings.warn(f"training set holds a single class ({data.classes[present[0]]!r}); "
                  "model is constant", SingleClassDataset, stacklevel=3)
    return TrainedModel(kind, data.classes, data.feature_names, params, seed,
                        constant=int(present[0]), flags=["single_class"])


def train_random_forest(data: Dataset, params: dict | None = None, seed: int = 0) -> TrainedModel:
    """Bagged Gini trees, ceil(sqrt(p)) candidate features per split, majority vote."""
    p = {**RF_DEFAULTS, **(params or {})}
    n_feat = data.X.shape[1]
    if p["mtry"] is None:
        p["mtry"] = int(math.ceil(math.sqrt(n_feat)))
    const = _single_class(data, "random_forest", p, seed)
    if const is not None:
        return const
    y = data.y
    n = len(y)
    model = TrainedModel("random_forest", data.classes, data.feature_names, p, seed)
    for s in member_seeds(seed, p["n_trees"]):
        boot = np.random.default_rng(s).integers(0, n, n)
        tree = grow_tree(data.X, y, len(data.classes), sample_idx=boot, mtry=p["mtry"],
                         max_depth=p["max_depth"], min_leaf=p["min_leaf"], seed=s)
        model.members.append((None, tree))
    return model


def train_random_subspace(data: Dataset, params: dict | None = None, seed: int = 0) -> TrainedModel:
    """Full-data Gini trees, each restricted to a random feature subset."""
    p = {**RSS_DEFAULTS, **(params or {})}
    const = _single_class(data, "random_subspace", p, seed)
    if const is not None:
        return const
    n_feat = data.X.shape[1]
    size = min(n_feat, max(1, int(math.ceil(p["subspace_fraction"] * n_feat))))
    y = data.y
    model = TrainedModel("random_subspace", data.classes, data.feature_names, p, seed)
    for s in member_seeds(seed, p["n_members"]):
        subset = np.sort(np.random.default_rng(s).choice(n_feat, size=size, replace=False))
        tree = grow_tree(data.X, y, len(data.classes), features=subset,
                         max_depth=p["max_depth"], min_leaf=p["min_leaf"], seed=s)
        model.members.append((tuple(subset.tolist()), tree))
    return model


# -- decision table ------------------------------------------------------------


def equal_frequency_cuts(col: np.ndarray, bins: int) -> np.ndarray:
    qs = np.quantile(col, np.arange(1, bins) / bins)
    return np.unique(qs)


def _discretize(X: np.ndarray, cuts) -> np.ndarray:
    return np.column_stack([np.searchsorted(c, X[:, j], side="right") for j, c in enumerate(cuts)]) \
        if cuts else np.zeros((len(X), 0), dtype=np.int64)


def _group_ids(B: np.ndarray, subset) -> np.ndarray:
    if not subset:
        return np.zeros(len(B), dtype=np.int64)
    _, gid = np.unique(B[:, list(subset)], axis=0, return_inverse=True)
    return gid.reshape(-1)


def _table_cv_accuracy(B, y, subset, folds, n_classes, k) -> float:
    gid = _group_ids(B, subset)
    G = int(gid.max()) + 1
    correct = 0
    for f in range(k):
        tr = folds != f
        te = ~tr
        cnt = np.zeros((G, n_classes), dtype=np.int64)
        np.add.at(cnt, (gid[tr], y[tr]), 1)
        default = int(np.argmax(np.bincount(y[tr], minlength=n_classes)))
        seen = cnt.sum(axis=1) > 0
        group_pred = np.argmax(cnt, axis=1)
        g = gid[te]
        pred = np.where(seen[g], group_pred[g], default)
        correct += int(np.sum(pred == y[te]))
    return correct / len(y)


def best_first_search(B, y, n_classes, folds, k, stale_limit=5):
    """Forward best-first subset search on cross-validated table accuracy.

    Stops after ``stale_limit`` consecutive expansions without improvement.
    Ties keep the subset found first.
    """
    n_feat = B.shape[1]
    cache = {}

    def merit(s):
        if s not in cache:
            cache[s] = _table_cv_accuracy(B, y, s, folds, n_classes, k)
        return cache[s]

    best, best_m = (), merit(())
    counter = 0
    heap = [(-best_m, counter, ())]
    visited = {()}
    stale = 0
    while heap and stale < stale_limit:
        _, _, node = heapq.heappop(heap)
        improved = False
        for f in range(n_feat):
            if f in node:
                continue
            child = tuple(sorted(node + (f,)))
            if child in visited:
                continue
            visited.add(child)
            m = merit(child)
            counter += 1
            heapq.heappush(heap, (-m, counter, child))
            if m > best_m + 1e-12:
                best, best_m = child, m
                improved = True
        stale = 0 if improved else stale + 1
    return best, best_m


def train_decision_table(data: Dataset, params: dict | None = None, seed: int = 0) -> TrainedModel:
    """Majority-class lookup table over a searched subset of discretised features.

    Features are cut into equal-frequency bins on the training data; unseen
    bin tuples fall back to the overall majority class.
    """
    p = {**DT_DEFAULTS, **(params or {})}
    if p["search"] != "best_first":
        raise ValueError(f"unsupported search {p['search']!r}")
    const = _single_class(data, "decision_table", p, seed)
    if const is not None:
        return const
    X, y = data.X, data.y
    C = len(data.classes)
    all_cuts = [equal_frequency_cuts(X[:, j], p["bins"]) for j in range(X.shape[1])]
    B = _discretize(X, all_cuts)
    k = min(p["eval_folds"], int(np.bincount(y).max()))
    k = max(k, 2)
    folds = stratified_folds(y, k, seed)
    selected, score = best_first_search(B, y, C, folds, k, p["stale_limit"])

    gid_rows = B[:, list(selected)]
    entries: dict = {}
    counts: dict = {}
    for row, label in zip(map(tuple, gid_rows.tolist()), y.tolist()):
        counts.setdefault(row, np.zeros(C, dtype=np.int64))[label] += 1
    for key, cnt in counts.items():
        entries[key] = int(np.argmax(cnt))
    default = int(np.argmax(np.bincount(y, minlength=C)))
    model = TrainedModel("decision_table", data.classes, data.feature_names, p, seed)
    model.table = {
        "selected": tuple(int(s) for s in selected),
        "cuts": [all_cuts[j] for j in selected],
        "default": default,
        "entries": entries,
        "cv_merit": score,
    }
    return model


def _table_predict(table, X) -> np.ndarray:
    sel = list(table["selected"])
    B = _discretize(X[:, sel], table["cuts"]) if sel else np.zeros((len(X), 0), dtype=np.int64)
    out = np.empty(len(X), dtype=np.int64)
    for i, row in enumerate(map(tuple, B.tolist())):
        out[i] = table["entries"].get(row, table["default"])
    return out


TRAINERS = {
    "random_forest": train_random_forest,
    "random_subspace": train_random_subspace,
    "decision_table": train_decision_table,
}


def make_trainer(kind: str, params: dict | None = None, seed: int = 0):
    """Callable Dataset -> TrainedModel for the given classifier kind."""
    fn = TRAINERS[KIND_ALIASES[kind]]
    return lambda data: fn(data, params, seed)


# -- evaluation protocols ------------------------------------------------------


def cross_validate(data: Dataset, k: int = 10, trainer=None, seed: int = 0) -> EvalReport:
    """Stratified k-fold CV; one confusion matrix over all held-out rows."""
    trainer = trainer or make_trainer("rf", seed=seed)
    y = data.y
    sizes = np.bincount(y, minlength=len(data.classes))
    small = [data.classes[i] for i, s in enumerate(sizes) if 0 < s < k]
    if small:
        raise ClassTooSmall(f"classes {small} have fewer than k={k} members")
    folds = stratified_folds(y, k, seed)
    pred = np.empty(len(y), dtype=np.int64)
    for f in range(k):
        test = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        model = trainer(data.subset(train))
        pred[test] = model.predict_index(data.X[test])
    report = evaluate(confusion_matrix(y, pred, len(data.classes)), data.classes)
    report.meta.update({"protocol": f"cv{k}", "seed": seed, "n": len(y)})
    return report


def holdout(data: Dataset, trainer=None, fraction: float = 0.8, seed: int = 0) -> EvalReport:
    trainer = trainer or make_trainer("rf", seed=seed)
    train, test = split_train_test(data, fraction, seed)
    model = trainer(train)
    pred = model.predict_index(test.X)
    report = evaluate(confusion_matrix(test.y, pred, len(data.classes)), data.classes)
    report.meta.update({"protocol": f"holdout{int(round(fraction * 100))}", "seed": seed,
                        "n_train": len(train), "n_test": len(test)})
    return report
