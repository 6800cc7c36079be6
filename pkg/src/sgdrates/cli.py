"""Command-line entry point: ``sgdrates <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 conformance failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import harness
from .core import SUFFIX, AveragingScheme
from .problems import SvmlightFormatError, build_problem, load_svmlight

EXIT_OK, EXIT_USAGE, EXIT_CONFORMANCE, EXIT_IO = 0, 1, 2, 3
PROBLEMS = ("smooth", "corner", "interior")
BUNDLED_SVM = Path(__file__).parent / "data" / "synthetic_200.svm"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> tuple[int, ...]:
    """``"128,256,512"`` or ``"2^7..2^14"`` (powers of two, inclusive)."""
    m = re.fullmatch(r"\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return tuple(2**k for k in range(lo, hi + 1))
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad horizon grid {text!r}") from None


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def parse_schemes(text: str, alpha: float | None = None) -> tuple[AveragingScheme, ...]:
    out = []
    for item in (x.strip() for x in text.split(",") if x.strip()):
        if item == SUFFIX and alpha is not None:
            out.append(AveragingScheme.suffix(alpha))
        else:
            out.append(AveragingScheme.parse(item))
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sgdrates", description="SGD averaging-scheme rate experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a grid experiment and write the aggregated CSV")
    r.add_argument("--problem", choices=PROBLEMS, default="smooth")
    r.add_argument("--schemes", default="last,average,suffix:0.5",
                   help="comma list of last, average, suffix[:alpha], epoch[:growth]")
    r.add_argument("--t-grid", type=parse_grid, default=harness.DEFAULT_GRID, help='e.g. "2^7..2^14" or "128,256"')
    r.add_argument("--replicates", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--c", type=float, default=1.0, help="step multiplier in c / (lam t)")
    r.add_argument("--alpha", type=float, default=None, help="fraction for a bare 'suffix' scheme")
    r.add_argument("--init", choices=("origin", "uniform"), default="uniform")
    r.add_argument("--epoch-gd", action="store_true", help="also run the Epoch-GD baseline")
    r.add_argument("--dim", type=int, default=5)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out", default=None, help="CSV path (stdout when omitted)")

    s = sub.add_parser("sweep", help="step-size multiplier sweep")
    s.add_argument("--c-list", type=parse_floats, default=(0.25, 0.5, 1.0, 2.0))
    s.add_argument("--t-grid", type=parse_grid, default=tuple(2**k for k in range(7, 13)))
    s.add_argument("--replicates", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)

    f = sub.add_parser("replicate-figure", help="run a figure protocol (smooth, nonsmooth, svm)")
    f.add_argument("--name", choices=harness.FIGURES, required=True)
    f.add_argument("--train", default=None, help="svmlight training file (svm only; default: bundled synthetic set)")
    f.add_argument("--test", default=None)
    f.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    f.add_argument("--replicates", type=int, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--t-grid", type=parse_grid, default=harness.DEFAULT_GRID)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--out", default="results")

    b = sub.add_parser("check-bounds", help="compare empirical gaps with a theoretical bound")
    b.add_argument("--problem", choices=PROBLEMS, default="smooth")
    b.add_argument("--bound", choices=("thm1", "thm2", "thm5", "lemma1", "thm3", "thm4"), required=True)
    b.add_argument("--replicates", type=int, default=100)
    b.add_argument("--alpha", type=float, default=0.5)
    b.add_argument("--t-grid", type=parse_grid, default=harness.DEFAULT_GRID)
    b.add_argument("--seed", type=int, default=0)

    h = sub.add_parser("check-highprob", help="empirical quantile of max_t t||w_t - w*||^2")
    h.add_argument("--problem", choices=PROBLEMS, default="corner")
    h.add_argument("--delta", type=float, default=0.05)
    h.add_argument("--t", type=int, default=1024)
    h.add_argument("--replicates", type=int, default=1000)
    h.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("data-stats", help="summary statistics of an svmlight file")
    d.add_argument("--file", required=True)
    return p


def _print_conformance(result: harness.Conformance) -> None:
    print("T,observed,stderr,bound,status")
    for row in result.rows:
        status = "skipped" if row.skipped else ("VIOLATED" if row.violated else "ok")
        print(f"{row.T},{row.observed:.6g},{row.stderr:.3g},{row.bound:.6g},{status}")
    print(result.summary())


def cmd_run(args) -> int:
    spec = harness.ExperimentSpec(
        problem=args.problem, t_grid=args.t_grid, replicates=args.replicates, base_seed=args.seed,
        schemes=parse_schemes(args.schemes, args.alpha), c=args.c, init=args.init,
        include_epoch_gd=args.epoch_gd, dim=args.dim, workers=args.workers, out=args.out,
    )
    report = harness.run_experiment(spec)
    if args.out is None:
        print(harness.CSV_HEADER)
        for r in sorted(report.rows, key=lambda r: (r.scheme, r.T)):
            print(f"{r.scheme},{r.T},{r.mean_gap:.17g},{r.std_gap:.17g},"
                  f"{r.mean_scaled_gap:.17g},{r.std_scaled_gap:.17g},{r.replicates}")
    else:
        print(f"wrote {args.out} ({len(report.rows)} rows)")
    if not report.raw_objective and len(spec.t_grid) >= 4:
        for scheme in report.schemes():
            fit = harness.estimate_rate(report, scheme)
            print(f"# {scheme}: beta={fit.beta:.4f} scaled-slope={fit.slope:.4g} "
                  f"(se {fit.slope_se:.3g}) -> {fit.classification}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sweep = harness.stepsize_sweep(args.c_list, args.t_grid, args.replicates, args.seed, args.out)
    print("c,source,scheme,exponent,classification")
    for r in sweep.rows:
        print(f"{r.c:g},{r.source},{r.scheme},{r.exponent:.4f},{r.classification}")
    return EXIT_OK


def cmd_figure(args) -> int:
    train = args.train
    if args.name == "svm" and train is None:
        train = BUNDLED_SVM
    reports = harness.replicate_figure(args.name, args.out, train=train, test=args.test, lam=args.lam,
                                       replicates=args.replicates, t_grid=args.t_grid,
                                       base_seed=args.seed, workers=args.workers)
    for key, report in reports.items():
        print(f"wrote {Path(args.out) / (key + '.csv')} ({len(report.rows)} rows)")
        if not report.raw_objective:
            for scheme in report.schemes():
                print(f"  {scheme}: {harness.estimate_rate(report, scheme).classification}")
    return EXIT_OK


def cmd_check_bounds(args) -> int:
    problem = build_problem(args.problem)
    g_sq = problem.g_sq_bound
    if args.bound == "lemma1":
        result = harness.check_distance_bound(problem, 1.0, args.t_grid, args.replicates, args.seed)
    elif args.bound in ("thm3", "thm4"):
        spec = harness.ExperimentSpec(problem=args.problem, t_grid=args.t_grid, replicates=args.replicates,
                                      base_seed=args.seed, schemes=("average",), init="uniform")
        result = harness.check_lower_bound(harness.run_experiment(spec), args.bound, 1.0)
    else:
        scheme = {"thm1": "last", "thm2": "average"}.get(args.bound) or AveragingScheme.suffix(args.alpha).label
        if args.bound != "thm5" and problem.mu is None:
            raise UsageError(f"{args.bound} applies to smooth problems only, not {args.problem!r}")
        spec = harness.ExperimentSpec(problem=args.problem, t_grid=args.t_grid, replicates=args.replicates,
                                      base_seed=args.seed, schemes=(scheme,), init="uniform")
        result = harness.check_upper_bound(harness.run_experiment(spec), args.bound, scheme,
                                           g_sq=g_sq, lam=problem.lam)
    _print_conformance(result)
    return EXIT_OK if result.passed else EXIT_CONFORMANCE


def cmd_check_highprob(args) -> int:
    problem = build_problem(args.problem)
    result = harness.check_high_probability(problem, 1.0, args.t, args.replicates, args.delta, args.seed)
    d = result.details
    print(f"quantile={d['quantile']:.6g} bound={d['bound']:.6g} ratio={d['ratio']:.3g} "
          f"(delta={d['delta']}, T={args.t}, R={d['replicates']}, G^2={d['g_sq']:.6g})")
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_CONFORMANCE


def cmd_data_stats(args) -> int:
    ds = load_svmlight(args.file)
    X = ds.to_csr()
    labels = ds.labels
    nnz = np.diff(X.indptr)
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    print(f"file={args.file}")
    print(f"examples={len(ds)}")
    print(f"positive={int((labels > 0).sum())}")
    print(f"negative={int((labels < 0).sum())}")
    print(f"max_index={ds.max_index}")
    print(f"nnz={int(nnz.sum())}")
    print(f"mean_nnz={float(nnz.mean()) if len(ds) else math.nan:.6g}")
    print(f"max_norm={float(norms.max()) if len(ds) else math.nan:.6g}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "replicate-figure": cmd_figure,
    "check-bounds": cmd_check_bounds,
    "check-highprob": cmd_check_highprob,
    "data-stats": cmd_data_stats,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, SvmlightFormatError) as exc:
        print(f"sgdrates: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"sgdrates: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
