"""Step-size multiplier sweep: exact-gradient decay exponents and fitted SGD rates.

    python3 scripts/run_sweep.py --c-list 0.1,0.25,0.5,1,2 --out results/sweep.csv
"""
from __future__ import annotations

import argparse

from sgdrates import harness


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c-list", default="0.1,0.25,0.5,1,2")
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    c_list = [float(x) for x in args.c_list.split(",")]
    sweep = harness.stepsize_sweep(c_list, replicates=args.replicates, base_seed=args.seed, out=args.out)
    print(f"{'c':>6} {'source':14s} {'scheme':10s} {'exponent':>9s}  classification")
    for r in sweep.rows:
        print(f"{r.c:6g} {r.source:14s} {r.scheme:10s} {r.exponent:9.4f}  {r.classification}")


if __name__ == "__main__":
    main()
