"""Bagged gini trees with a majority vote."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tree import DecisionTree, fit_tree

FORMAT = "ensemble-ids/forest"
FORMAT_VERSION = 1


class NotFittedError(RuntimeError):
    pass


@dataclass
class RandomForest:
    n_estimators: int = 60
    max_features: int | str | None = None  # None = all features
    seed: int = 0
    criterion: str = "gini"
    bootstrap: bool = True
    trees: list[DecisionTree] = field(default_factory=list)
    fit_time: float = 0.0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.criterion != "gini":
            raise ValueError("only the gini criterion is supported")

    def tree_votes(self, X: np.ndarray, kernel: str | None = None) -> np.ndarray:
        """(n_trees, rows) matrix of per-tree votes."""
        if not self.trees:
            raise NotFittedError("random forest has not been fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        return np.stack([t.predict(X, kernel) for t in self.trees])

    def predict(self, X: np.ndarray, kernel: str | None = None) -> np.ndarray:
        votes = self.tree_votes(X, kernel)
        attack = votes.sum(axis=0, dtype=np.int64)
        # ties go to attack
        return (2 * attack >= len(self.trees)).astype(np.int8)

    def save(self, path) -> None:
        payload = {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "n_estimators": self.n_estimators,
            "max_features": self.max_features,
            "seed": self.seed,
            "criterion": self.criterion,
            "bootstrap": self.bootstrap,
            "fit_time": self.fit_time,
            "trees": [t.to_dict() for t in self.trees],
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path) -> "RandomForest":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        payload = json.loads(path.read_text())
        if payload.get("format") != FORMAT or payload.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported forest format")
        trees = [DecisionTree.from_dict(t) for t in payload.pop("trees")]
        for key in ("format", "version"):
            payload.pop(key)
        return cls(trees=trees, **payload)


def resolve_max_features(max_features, n_features: int) -> int | None:
    if max_features in (None, "all", "auto"):
        return None
    if max_features == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    return int(max_features)


def tree_seeds(seed: int, n_estimators: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_estimators)


def _fit_one(X, y, seq, bootstrap, max_features, kernel):
    rng = np.random.default_rng(seq)
    n = len(X)
    idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
    tree_seed = int(rng.integers(0, 2**63 - 1))
    return fit_tree(X[idx], y[idx], tree_seed, max_features=max_features, kernel=kernel)


def fit(X: np.ndarray, y: np.ndarray, n_estimators: int = 60, seed: int = 0, *,
        max_features=None, bootstrap: bool = True, n_jobs: int = 1,
        kernel: str | None = None) -> RandomForest:
    """Fit ``n_estimators`` trees, tree ``i`` on a bootstrap drawn from child seed ``i``.

    Trees are independent, so ``n_jobs > 1`` fans them out over threads
    (the compiled kernel releases the GIL) without changing the result.
    """
    rf = RandomForest(n_estimators=n_estimators, max_features=max_features, seed=seed,
                      bootstrap=bootstrap)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if len(X) == 0:
        raise ValueError("cannot fit a forest on an empty matrix")
    mf = resolve_max_features(max_features, X.shape[1])
    seqs = tree_seeds(seed, n_estimators)
    t0 = time.perf_counter()
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            rf.trees = list(pool.map(lambda s: _fit_one(X, y, s, bootstrap, mf, kernel), seqs))
    else:
        rf.trees = [_fit_one(X, y, s, bootstrap, mf, kernel) for s in seqs]
    rf.fit_time = time.perf_counter() - t0
    return rf


def predict(rf: RandomForest, X: np.ndarray) -> np.ndarray:
    return rf.predict(X)
