"""Generate the bundled synthetic svmlight dataset.

Sparse unit-norm features, labels from a random separating hyperplane with a
fraction of labels flipped.  Deterministic given --seed.

    python3 scripts/make_synthetic_svm.py --out src/sgdrates/data/synthetic_200.svm
"""
from __future__ import annotations

import argparse

import numpy as np

from sgdrates.problems import Dataset, SparseExample, serialize_svmlight


def make_dataset(n: int = 200, dim: int = 20, nnz: int = 6, flip: float = 0.1, seed: int = 20120627) -> Dataset:
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(dim)
    examples = []
    for _ in range(n):
        idx = np.sort(rng.choice(dim, size=nnz, replace=False))
        vals = rng.standard_normal(nnz)
        vals /= np.linalg.norm(vals)
        vals = np.round(vals, 6)
        label = 1 if float(vals @ w_true[idx]) >= 0 else -1
        if rng.random() < flip:
            label = -label
        examples.append(SparseExample(label, tuple((int(i) + 1, float(v)) for i, v in zip(idx, vals))))
    return Dataset(examples, name="synthetic", max_index=dim)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--flip", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=20120627)
    args = ap.parse_args()
    ds = make_dataset(args.n, args.dim, flip=args.flip, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic: n={args.n} dim={args.dim} flip={args.flip} seed={args.seed}\n")
        fh.write(serialize_svmlight(ds))


if __name__ == "__main__":
    main()
