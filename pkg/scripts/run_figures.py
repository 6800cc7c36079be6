"""Run every figure protocol and print the fitted rate of each scheme.

    python3 scripts/run_figures.py --out results --replicates 10
"""
from __future__ import annotations

import argparse
from pathlib import Path

from sgdrates import harness

BUNDLED_SVM = Path(harness.__file__).parent / "data" / "synthetic_200.svm"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for name in harness.FIGURES:
        train = BUNDLED_SVM if name == "svm" else None
        grid = tuple(2**k for k in range(7, 14)) if name == "svm" else harness.DEFAULT_GRID
        reports = harness.replicate_figure(name, args.out, train=train, lam=args.lam, replicates=args.replicates,
                                           t_grid=grid, base_seed=args.seed, workers=args.workers)
        for key, report in reports.items():
            print(f"{key}: {Path(args.out) / (key + '.csv')}")
            for scheme in report.schemes():
                series = report.series(scheme)
                if report.raw_objective:
                    print(f"  {scheme:12s} objective {series[0].mean_gap:.5g} -> {series[-1].mean_gap:.5g}")
                else:
                    fit = harness.estimate_rate(report, scheme)
                    print(f"  {scheme:12s} beta={fit.beta:.3f} slope={fit.slope:+.3f} (se {fit.slope_se:.3f}) {fit.classification}")


if __name__ == "__main__":
    main()
