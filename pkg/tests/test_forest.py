from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ensemble_ids.forest import (
    KERNELS,
    DecisionTree,
    NotFittedError,
    RandomForest,
    fit,
    fit_tree,
    gini,
)
from ensemble_ids.forest.forest import tree_seeds
from ensemble_ids.preprocess import fit_preprocessor

kernels = pytest.mark.parametrize("kernel", sorted(KERNELS))


# -- exact oracle ----------------------------------------------------------

def exact_gini(n0, n1):
    n = n0 + n1
    return 1 - Fraction(n0, n) ** 2 - Fraction(n1, n) ** 2


def brute_force_tree(X, y, rows=None):
    """Exhaustive exact-arithmetic tree builder returning nested dicts.

    Tries every feature and every midpoint between consecutive distinct
    values, scores each with the exact gini decrease, and keeps the largest
    strictly positive one (lowest feature, then lowest threshold, on ties).
    """
    if rows is None:
        rows = list(range(len(X)))
    n1 = sum(y[i] for i in rows)
    n0 = len(rows) - n1
    node = {"counts": (n0, n1)}
    if n0 == 0 or n1 == 0:
        return node
    parent = exact_gini(n0, n1)
    n = len(rows)
    best = None
    for f in range(len(X[0])):
        values = sorted({Fraction(X[i][f]) for i in rows})
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            left = [i for i in rows if X[i][f] <= thr]
            right = [i for i in rows if X[i][f] > thr]
            l1 = sum(y[i] for i in left)
            r1 = sum(y[i] for i in right)
            child = (Fraction(len(left), n) * exact_gini(len(left) - l1, l1)
                     + Fraction(len(right), n) * exact_gini(len(right) - r1, r1))
            gain = parent - child
            if gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, thr, left, right)
    if best is not None:
        _, f, thr, left, right = best
        node.update(feature=f, threshold=thr, left=brute_force_tree(X, y, left),
                    right=brute_force_tree(X, y, right))
    return node


def nested(tree, i=0):
    node = {"counts": tuple(int(c) for c in tree.counts[i])}
    if tree.feature[i] >= 0:
        node.update(feature=int(tree.feature[i]), threshold=float(tree.threshold[i]),
                    left=nested(tree, tree.left[i]), right=nested(tree, tree.right[i]))
    return node


def as_float(node):
    out = dict(node)
    if "feature" in node:
        out.update(threshold=float(node["threshold"]), left=as_float(node["left"]),
                   right=as_float(node["right"]))
    return out


def oracle_predict(node, x):
    while "feature" in node:
        node = node["left"] if Fraction(x[node["feature"]]) <= node["threshold"] else node["right"]
    n0, n1 = node["counts"]
    return int(n1 >= n0)


samples = st.integers(1, 3).flatmap(lambda d: st.lists(
    st.tuples(st.lists(st.integers(0, 4), min_size=d, max_size=d), st.integers(0, 1)),
    min_size=1, max_size=30))


@kernels
@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(data=samples)
def test_tree_matches_brute_force(kernel, data):
    X = [row for row, _ in data]
    y = [label for _, label in data]
    tree = fit_tree(np.array(X, dtype=float), np.array(y), kernel=kernel)
    oracle = brute_force_tree(X, y)
    assert nested(tree) == as_float(oracle)
    Xa = np.array(X, dtype=float)
    assert tree.predict(Xa, kernel).tolist() == [oracle_predict(oracle, x) for x in X]


def test_tree_matches_brute_force_on_fractional_values():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = np.round(rng.uniform(size=(30, 4)), 2)
        y = (rng.uniform(size=30) < 0.4).astype(int)
        tree = fit_tree(X, y)
        oracle = brute_force_tree(X.tolist(), y.tolist())
        assert nested(tree) == as_float(oracle)
        assert tree.predict(X).tolist() == [oracle_predict(oracle, x) for x in X.tolist()]


# -- gini ------------------------------------------------------------------

@pytest.mark.parametrize("counts", [(10, 0), (5, 5), (3, 1), (1, 0), (7, 13)])
def test_gini_hand_oracle(counts):
    assert gini(counts) == pytest.approx(float(exact_gini(*counts)), abs=1e-15)


def test_gini_examples():
    assert gini((10, 0)) == 0.0
    assert gini((5, 5)) == 0.5
    assert gini((3, 1)) == 0.375


def test_gini_zero_total():
    with pytest.raises(ValueError):
        gini((0, 0))


# -- single trees ----------------------------------------------------------

@kernels
def test_single_class_is_one_leaf(kernel):
    X = np.random.default_rng(0).uniform(size=(20, 3))
    tree = fit_tree(X, np.ones(20, dtype=int), kernel=kernel)
    assert tree.n_nodes == 1
    assert tree.predict(X).tolist() == [1] * 20


@kernels
def test_midpoint_split(kernel):
    tree = fit_tree(np.array([[0.0], [1.0]]), np.array([0, 1]), kernel=kernel)
    assert tree.n_nodes == 3
    assert tree.feature[0] == 0 and tree.threshold[0] == 0.5
    assert tree.predict(np.array([[0.2], [0.7]])).tolist() == [0, 1]


@kernels
def test_parity_sample_needs_depth_two(kernel):
    # labels alternate N, A, A, N along x and no single cut separates them
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    tree = fit_tree(X, y, kernel=kernel)
    assert tree.predict(X).tolist() == y.tolist()
    assert tree.depth() >= 2


def test_pure_xor_has_no_positive_gain_split():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    tree = fit_tree(X, np.array([0, 1, 1, 0]))
    assert tree.n_nodes == 1


def test_accepted_splits_strictly_reduce_impurity():
    rng = np.random.default_rng(1)
    X = rng.integers(0, 5, size=(300, 4)).astype(float)
    y = (X[:, 0] + rng.integers(0, 3, 300) > 4).astype(int)
    tree = fit_tree(X, y)
    for i in np.flatnonzero(tree.feature >= 0):
        parent = tree.counts[i]
        kids = [tree.counts[tree.left[i]], tree.counts[tree.right[i]]]
        assert all(k.sum() > 0 for k in kids)
        child = sum(Fraction(int(k.sum()), int(parent.sum())) * exact_gini(*map(int, k)) for k in kids)
        assert exact_gini(*map(int, parent)) - child > 0


def test_leaves_pure_or_unsplittable():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 3, size=(200, 2)).astype(float)
    y = rng.integers(0, 2, size=200)
    tree = fit_tree(X, y)
    leaves = tree.apply(X)
    for leaf in np.unique(leaves):
        rows = np.flatnonzero(leaves == leaf)
        # an impure leaf must admit no split with positive gain
        sub = brute_force_tree(X[rows].tolist(), y[rows].tolist())
        assert "feature" not in sub


def test_tree_leaf_tie_goes_to_attack():
    # identical rows with opposite labels cannot be split
    tree = fit_tree(np.zeros((2, 3)), np.array([0, 1]))
    assert tree.n_nodes == 1
    assert tree.predict(np.zeros((1, 3))).tolist() == [1]


def test_tree_dict_round_trip():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(100, 5))
    tree = fit_tree(X, (X[:, 1] > 0.3).astype(int))
    back = DecisionTree.from_dict(tree.to_dict())
    np.testing.assert_array_equal(back.predict(X), tree.predict(X))


def test_max_features_subset_is_seeded():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(200, 8))
    y = (X[:, 2] + X[:, 5] > 1).astype(int)
    a = fit_tree(X, y, 5, max_features=3)
    b = fit_tree(X, y, 5, max_features=3)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(ValueError):
        fit_tree(X, y, 5, max_features=9)


# -- compiled vs numpy -----------------------------------------------------

@pytest.mark.skipif("compiled" not in KERNELS, reason="compiled kernel not built")
def test_kernels_grow_identical_trees():
    rng = np.random.default_rng(5)
    X = np.round(rng.uniform(size=(2000, 10)), 3)
    X[:, 3] = rng.integers(0, 4, 2000)
    y = ((X[:, 0] > 0.4) ^ (X[:, 3] == 2) ^ (rng.uniform(size=2000) < 0.05)).astype(int)
    a = fit_tree(X, y, kernel="compiled")
    b = fit_tree(X, y, kernel="python")
    assert a.to_dict() == b.to_dict()
    np.testing.assert_array_equal(a.apply(X, "compiled"), b.apply(X, "python"))


def test_unknown_kernel():
    with pytest.raises(ValueError, match="unavailable"):
        fit_tree(np.zeros((2, 1)), np.array([0, 1]), kernel="gpu")


# -- forests ---------------------------------------------------------------

def blob_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 6))
    y = ((X[:, 0] + 0.5 * X[:, 1] > 0.8) ^ (rng.uniform(size=n) < 0.05)).astype(int)
    return X, y


def test_forest_is_deterministic():
    X, y = blob_data()
    a = fit(X, y, n_estimators=7, seed=3)
    b = fit(X, y, n_estimators=7, seed=3)
    assert [t.to_dict() for t in a.trees] == [t.to_dict() for t in b.trees]
    c = fit(X, y, n_estimators=7, seed=4)
    assert [t.to_dict() for t in a.trees] != [t.to_dict() for t in c.trees]


def test_threaded_fit_matches_serial():
    X, y = blob_data()
    a = fit(X, y, n_estimators=6, seed=1)
    b = fit(X, y, n_estimators=6, seed=1, n_jobs=3)
    assert [t.to_dict() for t in a.trees] == [t.to_dict() for t in b.trees]


def test_single_tree_forest_is_one_bootstrap_tree():
    X, y = blob_data()
    rf = fit(X, y, n_estimators=1, seed=9)
    rng = np.random.default_rng(tree_seeds(9, 1)[0])
    idx = rng.integers(0, len(X), size=len(X))
    tree = fit_tree(X[idx], y[idx])
    assert rf.trees[0].to_dict() == tree.to_dict()
    np.testing.assert_array_equal(rf.predict(X), tree.predict(X))


def leaf(cls):
    return DecisionTree(np.array([-1], np.int32), np.zeros(1), np.array([-1], np.int32),
                        np.array([-1], np.int32), np.array([[1 - cls, cls]], np.int64))


@pytest.mark.parametrize("n_normal,n_attack,expected", [
    (0, 60, 1), (31, 29, 0), (30, 30, 1), (29, 31, 1), (60, 0, 0),
])
def test_forest_vote(n_normal, n_attack, expected):
    rf = RandomForest(n_estimators=60, trees=[leaf(0)] * n_normal + [leaf(1)] * n_attack)
    assert rf.predict(np.zeros((1, 4))).tolist() == [expected]


def test_unfitted_forest():
    with pytest.raises(NotFittedError):
        RandomForest().predict(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        RandomForest(n_estimators=0)


def test_full_depth_forest_fits_its_training_set(synthetic_train):
    fm = fit_preprocessor(synthetic_train).transform(synthetic_train)
    rf = fit(fm.values, fm.labels, n_estimators=60, seed=0)
    assert np.mean(rf.predict(fm.values) == fm.labels) >= 0.999


def test_forest_save_load(tmp_path):
    X, y = blob_data()
    rf = fit(X, y, n_estimators=3, seed=2)
    rf.save(tmp_path / "rf.json")
    back = RandomForest.load(tmp_path / "rf.json")
    np.testing.assert_array_equal(back.predict(X), rf.predict(X))
    assert back.seed == 2 and back.n_estimators == 3
    with pytest.raises(FileNotFoundError, match="missing.json"):
        RandomForest.load(tmp_path / "missing.json")
