"""Gini decision trees grown greedily on presorted sample orders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend


def gini(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total < 1:
        raise ValueError("gini impurity needs at least one sample")
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass
class DecisionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf.

    ``counts[i]`` holds (normal, attack) training counts reaching node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # children always follow parents
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray, kernel: str | None = None) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _backend.get(kernel).apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X: np.ndarray, kernel: str | None = None) -> np.ndarray:
        """Leaf-majority class, ties going to attack."""
        c = self.counts[self.apply(X, kernel)]
        return (c[:, 1] >= c[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.array(d["feature"], dtype=np.int32),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int32),
            np.array(d["right"], dtype=np.int32),
            np.array(d["counts"], dtype=np.int64).reshape(-1, 2),
        )


def fit_tree(X: np.ndarray, y: np.ndarray, seed: int | None = None, *, max_features=None,
             min_samples_split: int = 2, kernel: str | None = None) -> DecisionTree:
    """Grow an unpruned gini tree.

    Every node scans all candidate thresholds (midpoints between consecutive
    distinct values) of the considered features and keeps the split with the
    largest impurity decrease; equal decreases go to the lowest feature index,
    then the lowest threshold. Splits that leave impurity unchanged are never
    taken. ``max_features`` (int) draws a per-node feature subset from
    ``seed``; the default considers every feature, leaving the tree
    deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    n, F = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on an empty sample")
    k = _backend.get(kernel)
    rng = np.random.default_rng(seed)
    all_features = np.arange(F, dtype=np.int32)
    if max_features is not None and not 1 <= max_features <= F:
        raise ValueError(f"max_features must lie in [1, {F}]")

    XT = np.ascontiguousarray(X.T)
    order = np.ascontiguousarray(np.argsort(XT, axis=1, kind="stable").astype(np.intp))
    goes_left = np.zeros(n, dtype=np.uint8)
    tmp = np.empty(n, dtype=np.intp)

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(start, end):
        n1 = int(y[order[0, start:end]].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((end - start - n1, n1))
        return len(feature) - 1

    stack = [(new_node(0, n), 0, n)]
    while stack:
        node, start, end = stack.pop()
        if end - start < min_samples_split:
            continue
        split = None
        if max_features is not None and max_features < F:
            subset = np.sort(rng.choice(F, size=max_features, replace=False)).astype(np.int32)
            split = k.best_split(XT, y, order, start, end, subset)
        if split is None:
            split = k.best_split(XT, y, order, start, end, all_features)
        if split is None:
            continue
        f, n_left, thr = split
        k.partition(order, start, end, f, n_left, goes_left, tmp)
        mid = start + n_left
        feature[node], threshold[node] = f, thr
        left[node] = new_node(start, mid)
        right[node] = new_node(mid, end)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], mid, end))
        stack.append((left[node], start, mid))

    return DecisionTree(
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )
