"""Pass rate of the stochastic rate-classification criteria over a range of seeds.

    python3 scripts/seed_pass_rates.py --seeds 0-19
"""
from __future__ import annotations

import argparse

from sgdrates import harness
from sgdrates.harness import LOG_T_OVER_T, ONE_OVER_T, ExperimentSpec, estimate_rate, run_experiment
from sgdrates.solvers import EPOCH_GD


def check(problem: str, replicates: int, seed: int, wanted: dict[str, str]) -> dict[str, bool]:
    spec = ExperimentSpec(problem=problem, replicates=replicates, base_seed=seed,
                          schemes=harness.FIGURE_SCHEMES, include_epoch_gd=True)
    report = run_experiment(spec)
    out = {}
    for scheme, label in wanted.items():
        ok = estimate_rate(report, scheme).classification == label
        if problem == "smooth":
            scaled = [r.mean_scaled_gap for r in report.series(scheme)]
            ok &= max(scaled) / min(scaled) <= 3
        out[scheme] = ok
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0-19", help="inclusive range a-b")
    args = ap.parse_args()
    lo, hi = (int(x) for x in args.seeds.split("-"))
    smooth_wanted = {s: ONE_OVER_T for s in ("last", "average", "suffix:0.5", EPOCH_GD)}
    interior_wanted = {"average": LOG_T_OVER_T, "last": ONE_OVER_T, "suffix:0.5": ONE_OVER_T, EPOCH_GD: ONE_OVER_T}
    totals: dict[str, int] = {}
    for seed in range(lo, hi + 1):
        smooth = check("smooth", 10, seed, smooth_wanted)
        interior = check("interior", 100, seed, interior_wanted)
        row = {"smooth(all)": all(smooth.values()), **{f"interior {k}": v for k, v in interior.items()}}
        for k, v in row.items():
            totals[k] = totals.get(k, 0) + v
        print(f"seed {seed:3d}: " + "  ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in row.items()))
    n = hi - lo + 1
    print("pass rates: " + ", ".join(f"{k} {v}/{n}" for k, v in totals.items()))


if __name__ == "__main__":
    main()
