"""CART classification trees (Gini), grown with numba.

A fitted tree is a handful of flat arrays; node 0 is the root and a node
is a leaf when ``feature == -1``. Samples with ``x[feature] <= threshold``
go left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(X, y, n_classes, idx, feat_pool, mtry, max_depth, min_leaf, seed):
    np.random.seed(seed)
    m = idx.shape[0]
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, n_classes), np.int64)
    depth_of = np.zeros(cap, np.int64)

    pool = feat_pool.copy()
    n_pool = pool.shape[0]
    k = min(mtry, n_pool)

    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    sp = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = m
    sp = 1
    n_nodes = 1

    cl = np.zeros(n_classes, np.int64)
    vals = np.empty(m)

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        n = hi - lo
        for i in range(lo, hi):
            counts[node, y[idx[i]]] += 1
        pure = False
        for c in range(n_classes):
            if counts[node, c] == n:
                pure = True
        if pure or n < 2 * min_leaf or (max_depth > 0 and depth_of[node] >= max_depth):
            continue

        # parent impurity * n
        sq = 0.0
        for c in range(n_classes):
            sq += counts[node, c] * counts[node, c]
        best_score = n - sq / n + 1e-12
        best_f = -1
        best_t = 0.0

        # partial Fisher-Yates draw of k candidate features; no draw when all are used
        if k < n_pool:
            for j in range(k):
                r = j + np.random.randint(0, n_pool - j)
                tmp = pool[j]
                pool[j] = pool[r]
                pool[r] = tmp
        for j in range(k):
            f = pool[j]
            for i in range(n):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals[:n])
            for c in range(n_classes):
                cl[c] = 0
            for i in range(n - 1):
                cl[y[idx[lo + order[i]]]] += 1
                nl = i + 1
                nr = n - nl
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a == b or nl < min_leaf or nr < min_leaf:
                    continue
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    sl += cl[c] * cl[c]
                    d = counts[node, c] - cl[c]
                    sr += d * d
                score = (nl - sl / nl) + (nr - sr / nr)
                if score < best_score:
                    best_score = score
                    best_f = f
                    t = 0.5 * (a + b)
                    if not t < b:
                        t = a
                    best_t = t
        if best_f < 0:
            continue

        # partition idx[lo:hi] in place
        i = lo
        jj = hi - 1
        while i <= jj:
            if X[idx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[jj]
                idx[jj] = tmp
                jj -= 1
        mid = i
        if mid == lo or mid == hi:
            continue
        feature[node] = best_f
        threshold[node] = best_t
        l_id = n_nodes
        r_id = n_nodes + 1
        n_nodes += 2
        left[node] = l_id
        right[node] = r_id
        depth_of[l_id] = depth_of[node] + 1
        depth_of[r_id] = depth_of[node] + 1
        # push right first so the left subtree is grown first
        stack_node[sp] = r_id
        stack_lo[sp] = mid
        stack_hi[sp] = hi
        sp += 1
        stack_node[sp] = l_id
        stack_lo[sp] = lo
        stack_hi[sp] = mid
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), counts[:n_nodes].copy())


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


def majority(counts: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(counts, axis=-1)


@dataclass(eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def leaf_class(self) -> np.ndarray:
        return majority(self.counts)

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        leaves = _apply(X, self.feature, self.threshold, self.left, self.right)
        return self.leaf_class()[leaves]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["counts"], dtype=np.int64).reshape(len(d["feature"]), -1),
        )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    sample_idx: np.ndarray | None = None,
    features: np.ndarray | None = None,
    mtry: int | None = None,
    max_depth: int | None = None,
    min_leaf: int = 1,
    seed: int = 0,
) -> Tree:
    """Grow one Gini tree on ``X[sample_idx]`` (duplicates allowed).

    At each node ``mtry`` candidate features are drawn from ``features``
    (all of them when mtry is None). Splits with zero impurity decrease are
    accepted so XOR-like structure can still be carved out.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    idx = np.arange(len(y), dtype=np.int64) if sample_idx is None else np.array(sample_idx, dtype=np.int64)
    pool = np.arange(X.shape[1], dtype=np.int64) if features is None else np.array(features, dtype=np.int64)
    k = len(pool) if mtry is None else int(mtry)
    return Tree(*_grow(X, y, int(n_classes), idx, pool, k, int(max_depth or 0), int(min_leaf),
                       int(seed) & 0xFFFFFFFF))
