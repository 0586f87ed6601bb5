"""Compare the compiled and pure-Python random-forest kernels.

    python benchmarks/bench_split.py                  # synthetic data
    python benchmarks/bench_split.py --data KDDTrain+.txt --rows 20000

Times a single node split, a full tree and tree inference for each kernel
and checks that both kernels grow the same tree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ensemble_ids.forest import KERNELS, fit_tree
from ensemble_ids.forest._backend import get


def synthetic(rows: int, features: int, seed: int):
    rng = np.random.default_rng(seed)
    # coarse grids give the many repeated values typical of connection logs
    X = np.round(rng.random((rows, features)) * rng.integers(2, 50, size=features), 0)
    score = X[:, 0] - X[:, 1] + 0.5 * X[:, 2] + rng.normal(0, 3, rows)
    return X, (score > np.median(score)).astype(np.int8)


def from_file(path: str, rows: int, seed: int):
    from ensemble_ids.dataset import parse_file
    from ensemble_ids.preprocess import fit_preprocessor

    ds = parse_file(path)
    if rows < len(ds):
        idx = np.sort(np.random.default_rng(seed).choice(len(ds), rows, replace=False))
        ds = ds.subset(idx)
    fm = fit_preprocessor(ds).transform(ds)
    return fm.values, fm.labels.astype(np.int8)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(kernel: str, X, y, repeat: int) -> dict:
    k = get(kernel)
    XT = np.ascontiguousarray(X.T)
    order = np.ascontiguousarray(np.argsort(XT, axis=1, kind="stable").astype(np.intp))
    feats = np.arange(X.shape[1], dtype=np.int32)
    tree = fit_tree(X, y, kernel=kernel)
    return {
        "root split": best_of(lambda: k.best_split(XT, y, order, 0, len(y), feats), repeat),
        "fit tree": best_of(lambda: fit_tree(X, y, kernel=kernel), repeat),
        "predict": best_of(lambda: tree.predict(X, kernel), repeat),
        "_tree": tree,
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--data", help="NSL-KDD style file to sample rows from")
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--features", type=int, default=41)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if args.data:
        X, y = from_file(args.data, args.rows, args.seed)
    else:
        X, y = synthetic(args.rows, args.features, args.seed)
    print(f"{len(y)} rows x {X.shape[1]} features, best of {args.repeat}")

    results = {name: bench(name, X, y, args.repeat) for name in sorted(KERNELS)}
    if len(results) == 2:
        a, b = results["compiled"]["_tree"], results["python"]["_tree"]
        same = all(np.array_equal(getattr(a, f), getattr(b, f))
                   for f in ("feature", "threshold", "left", "right"))
        print(f"identical trees: {same} ({len(a.feature)} nodes)")
    else:
        print("compiled kernel not built; timing the python kernel only")

    names = sorted(results)
    print(f"{'step':<12}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for step in ("root split", "fit tree", "predict"):
        row = [results[n][step] for n in names]
        line = f"{step:<12}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if len(names) == 2:
            line += f"{row[1] / row[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
