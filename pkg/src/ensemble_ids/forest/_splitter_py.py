"""Pure numpy implementation of the split kernel (same contract as ``_splitter``)."""
from __future__ import annotations

import numpy as np

REL_TIE = 1e-12


def best_split(XT, y, order, start, end, features):
    n = end - start
    if n < 2:
        return None
    seg = order[features, start:end]  # (F', n)
    ys = y[seg].astype(np.int64)
    n1 = int(ys[0].sum())
    if n1 == 0 or n1 == n:
        return None
    vals = np.take_along_axis(XT[features], seg, axis=1)
    l1 = np.cumsum(ys[:, :-1], axis=1)
    n_left = np.arange(1, n, dtype=np.int64)
    n_right = n - n_left
    l0 = n_left - l1
    r1 = n1 - l1
    r0 = n_right - r1
    valid = (vals[:, :-1] < vals[:, 1:]) & (l1 * n_right != r1 * n_left)
    if not valid.any():
        return None
    proxy = ((l0 * l0 + l1 * l1).astype(np.float64) / n_left.astype(np.float64)
             + (r0 * r0 + r1 * r1).astype(np.float64) / n_right.astype(np.float64))
    proxy[~valid] = -np.inf
    best = proxy.max()
    flat = int(np.flatnonzero(proxy.ravel() >= best - best * REL_TIE)[0])
    fi, k = divmod(flat, n - 1)
    a, b = vals[fi, k], vals[fi, k + 1]
    thr = 0.5 * (a + b)
    if thr >= b:
        thr = a
    return int(features[fi]), k + 1, float(thr)


def partition(order, start, end, feature, n_left, goes_left, tmp):
    goes_left[order[feature, start:end]] = 0
    goes_left[order[feature, start:start + n_left]] = 1
    seg = order[:, start:end]
    perm = np.argsort(goes_left[seg] == 0, axis=1, kind="stable")
    order[:, start:end] = np.take_along_axis(seg, perm, axis=1)


def apply_tree(feature, threshold, left, right, X):
    node = np.zeros(len(X), dtype=np.int32)
    rows = np.arange(len(X))
    active = feature[node] >= 0
    while active.any():
        idx = rows[active]
        nd = node[idx]
        go_left = X[idx, feature[nd]] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active[idx] = feature[node[idx]] >= 0
    return node
