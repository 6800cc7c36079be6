"""Experiment orchestration: replicates, aggregation, rate fits, bound checks, CSV output."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds
from .core import SUFFIX, AveragingScheme, StepSchedule, derive_replicate_stream
from .problems import Problem, SvmProblem, build_problem, load_svmlight
from .solvers import (
    EPOCH_GD,
    EpochGdConfig,
    SolverError,
    run_epoch_gd_batch,
    run_sgd_batch,
)

DEFAULT_GRID = tuple(2**k for k in range(7, 15))
FIGURE_SCHEMES = (AveragingScheme.last(), AveragingScheme.average(), AveragingScheme.suffix(0.5))
CSV_HEADER = "scheme,T,mean_gap,std_gap,mean_scaled_gap,std_scaled_gap,replicates"


def _schemes(items) -> tuple[AveragingScheme, ...]:
    return tuple(s if isinstance(s, AveragingScheme) else AveragingScheme.parse(s) for s in items)


@dataclass
class ExperimentSpec:
    """One grid experiment.  Cell ``(T, r)`` is an independent run seeded with
    ``derive_replicate_stream(base_seed, r * len(t_grid) + index(T))``.

    ``step_lambda`` replaces the problem's modulus in the step ``c / (lam' t)``.
    ``shared_stream`` gives every replicate the stream of replicate 0 (a test hook).
    """

    problem: str = "smooth"
    t_grid: tuple[int, ...] = DEFAULT_GRID
    replicates: int = 10
    base_seed: int = 0
    schemes: tuple[AveragingScheme, ...] = FIGURE_SCHEMES
    c: float = 1.0
    step_lambda: float | None = None
    init: str = "uniform"
    include_epoch_gd: bool = False
    epoch_first: int = 8
    epoch_first_step: float | None = None
    epoch_growth: float = 2.0
    epoch_decay: float = 2.0
    dim: int = 5
    workers: int = 1
    shared_stream: bool = False
    out: str | None = None

    def __post_init__(self):
        self.t_grid = tuple(int(t) for t in self.t_grid)
        self.schemes = _schemes(self.schemes)
        if not self.t_grid:
            raise ValueError("empty horizon grid")
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError(f"horizon grid must be strictly ascending, got {self.t_grid}")
        if self.t_grid[0] < 4:
            raise ValueError("every horizon must be at least 4")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if not self.c > 0:
            raise ValueError("step multiplier c must be positive")

    def stream(self, replicate: int, grid_index: int):
        r = 0 if self.shared_stream else replicate
        return derive_replicate_stream(self.base_seed, r * len(self.t_grid) + grid_index)

    def labels(self) -> list[str]:
        labels = [s.label for s in self.schemes]
        if self.include_epoch_gd:
            labels.append(EPOCH_GD)
        return labels

    def echo(self) -> dict[str, str]:
        return {
            "problem": self.problem,
            "t_grid": " ".join(map(str, self.t_grid)),
            "replicates": str(self.replicates),
            "base_seed": str(self.base_seed),
            "schemes": " ".join(s.label for s in self.schemes),
            "c": repr(self.c),
            "step_lambda": "problem" if self.step_lambda is None else repr(self.step_lambda),
            "init": self.init,
            "include_epoch_gd": str(self.include_epoch_gd).lower(),
            "epoch_gd": f"first={self.epoch_first} step={self.epoch_first_step} "
                        f"growth={self.epoch_growth} decay={self.epoch_decay}",
            "dim": str(self.dim),
            "seed_rule": "derive_replicate_stream(base_seed, r * len(t_grid) + grid_index)",
        }


@dataclass
class ReportRow:
    scheme: str
    T: int
    mean_gap: float
    std_gap: float
    mean_scaled_gap: float
    std_scaled_gap: float
    replicates: int


@dataclass
class Report:
    """Per-(scheme, T) mean and sample standard deviation of the gap over replicates.

    ``values[(scheme, T)]`` keeps the per-replicate gaps the rows were built from.
    """

    rows: list[ReportRow]
    values: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)
    problem: str = ""
    mu: float | None = None
    c: float = 1.0
    raw_objective: bool = False

    def schemes(self) -> list[str]:
        return sorted({r.scheme for r in self.rows})

    def series(self, scheme: str) -> list[ReportRow]:
        rows = sorted((r for r in self.rows if r.scheme == scheme), key=lambda r: r.T)
        if not rows:
            raise KeyError(f"no rows for scheme {scheme!r}")
        return rows

    def row(self, scheme: str, T: int) -> ReportRow:
        for r in self.rows:
            if r.scheme == scheme and r.T == T:
                return r
        raise KeyError((scheme, T))


def aggregate(values: dict[tuple[str, int], np.ndarray], **report_fields) -> Report:
    rows = []
    for (scheme, T), v in sorted(values.items()):
        v = np.asarray(v, dtype=float)
        if np.all(v == v[0]):  # identical replicates: exact, no rounding noise
            mean, std = float(v[0]), 0.0
        else:
            mean, std = float(np.mean(v)), float(np.std(v, ddof=1))
        rows.append(ReportRow(scheme, T, mean, std, mean * T, std * T, len(v)))
    return Report(rows=rows, values=dict(values), **report_fields)


def _run_cell(spec: ExperimentSpec, problem: Problem, grid_index: int) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    """All replicates at one horizon: ``label -> (R, d)`` output points and oracle-call counts."""
    T = spec.t_grid[grid_index]
    streams = [spec.stream(r, grid_index) for r in range(spec.replicates)]
    step_lambda = problem.lam if spec.step_lambda is None else spec.step_lambda
    out: dict[str, np.ndarray] = {}
    calls = {"sgd": 0, EPOCH_GD: 0}
    if spec.schemes:
        results = run_sgd_batch(
            problem, T, StepSchedule(spec.c, step_lambda), streams, spec.schemes, spec.init,
            allow_schedule_override=step_lambda != problem.lam,
        )
        for s in spec.schemes:
            out[s.label] = np.stack([res.outputs[s.label] for res in results])
        calls["sgd"] = sum(res.oracle_calls for res in results)
    if spec.include_epoch_gd:
        config = EpochGdConfig(T, min(spec.epoch_first, T), spec.epoch_first_step, spec.epoch_growth, spec.epoch_decay)
        results = run_epoch_gd_batch(problem, config, [s.fresh() for s in streams], spec.init)
        out[EPOCH_GD] = np.stack([res.outputs[EPOCH_GD] for res in results])
        calls[EPOCH_GD] = sum(res.oracle_calls for res in results)
    return out, calls


def _run_cell_star(args):
    return _run_cell_checked(*args)


def _run_cell_checked(spec, problem, grid_index):
    try:
        return _run_cell(spec, problem, grid_index)
    except SolverError as exc:
        raise SolverError(f"T={spec.t_grid[grid_index]}: {exc}") from exc


def _collect(spec: ExperimentSpec, problem: Problem):
    tasks = [(spec, problem, i) for i in range(len(spec.t_grid))]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            cells = list(pool.map(_run_cell_star, tasks))
    else:
        cells = [_run_cell_checked(*task) for task in tasks]
    points = {}
    calls = {"sgd": 0, EPOCH_GD: 0}
    for T, (cell, cell_calls) in zip(spec.t_grid, cells):
        for label, pts in cell.items():
            points[(label, T)] = pts
        for key, n in cell_calls.items():
            calls[key] += n
    return points, calls


def collect_outputs(spec: ExperimentSpec, problem: Problem | None = None) -> dict[tuple[str, int], np.ndarray]:
    """Output points of every (scheme, T, replicate) cell, as ``(scheme, T) -> (R, d)``."""
    problem = build_problem(spec.problem, spec.dim) if problem is None else problem
    return _collect(spec, problem)[0]


def evaluate(points: dict[tuple[str, int], np.ndarray], problem: Problem) -> dict[tuple[str, int], np.ndarray]:
    return {key: np.array([problem.gap(w) for w in pts]) for key, pts in points.items()}


def run_experiment(spec: ExperimentSpec, problem: Problem | None = None) -> Report:
    """Run every cell and aggregate gaps (raw objectives when the optimum is unknown)."""
    problem = build_problem(spec.problem, spec.dim) if problem is None else problem
    start = time.perf_counter()
    points, calls = _collect(spec, problem)
    values = evaluate(points, problem)
    report = aggregate(values, metadata=spec.echo(), problem=problem.name, mu=problem.mu,
                       c=spec.c, raw_objective=problem.f_min is None)
    report.metadata["quantity"] = "objective" if report.raw_objective else "gap"
    report.metadata["oracle_calls_sgd"] = str(calls["sgd"])
    report.metadata["oracle_calls_epoch_gd"] = str(calls[EPOCH_GD])
    report.metadata["wall_time_s"] = f"{time.perf_counter() - start:.3f}"
    if spec.out:
        emit_csv(report, spec.out)
    return report


# --------------------------------------------------------------------------
# rate estimation

ONE_OVER_T = "1/T-like"
LOG_T_OVER_T = "log(T)/T-like"
EXACT = "exact"
INDETERMINATE = "indeterminate"


@dataclass
class RateFit:
    """``beta``: minus the slope of ln(mean gap) on ln T.  ``slope``: slope of the
    mean scaled gap on ln T, with ``slope_se`` the standard error used to
    classify (``slope_se_sampling`` when replicate spreads are available, else
    ``slope_se_residual``)."""

    scheme: str
    beta: float
    intercept: float
    slope: float
    slope_intercept: float
    slope_se: float
    slope_se_residual: float
    slope_se_sampling: float
    residual_log: float
    residual_scaled: float
    classification: str


def _ols(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    return slope, intercept, resid, xc, sxx


def fit_rate(T, mean_gap, std_scaled=None, replicates=None, scheme: str = "",
             beta_tol: float = 0.15, z: float = 2.0) -> RateFit:
    T = np.asarray(T, dtype=float)
    y = np.asarray(mean_gap, dtype=float)
    if len(T) < 4:
        raise ValueError("rate estimation needs at least 4 horizons")
    x = np.log(T)
    scaled = y * T
    if np.all(y == 0):
        return RateFit(scheme, math.nan, math.nan, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, EXACT)

    pos = y > 0
    if pos.sum() >= 2:
        b, a, resid_log, _, _ = _ols(x[pos], np.log(y[pos]))
        beta, intercept, res_log = -b, a, float(np.linalg.norm(resid_log))
    else:
        beta, intercept, res_log = math.nan, math.nan, math.nan

    s, s0, resid, xc, sxx = _ols(x, scaled)
    n = len(x)
    se_resid = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    se_sampling = math.nan
    if std_scaled is not None and replicates is not None and min(replicates) >= 2:
        var = (np.asarray(std_scaled, dtype=float) ** 2) / np.asarray(replicates, dtype=float)
        se_sampling = math.sqrt(float(((xc / sxx) ** 2) @ var))
    se = se_resid if math.isnan(se_sampling) else se_sampling

    tol = 1e-9 * max(1.0, float(np.max(np.abs(scaled))))
    if abs(beta - 1.0) <= beta_tol and abs(s) <= z * se + tol:
        label = ONE_OVER_T
    elif beta < 1.0 and s > z * se + tol:
        label = LOG_T_OVER_T
    else:
        label = INDETERMINATE
    return RateFit(scheme, beta, intercept, s, s0, se, se_resid, se_sampling, res_log,
                   float(np.linalg.norm(resid)), label)


def estimate_rate(report: Report, scheme: str, beta_tol: float = 0.15, z: float = 2.0) -> RateFit:
    """OLS fits over the full grid; "1/T-like" needs ``|beta - 1| <= beta_tol`` and a scaled-gap
    slope within ``z`` standard errors of 0, "log(T)/T-like" needs ``beta < 1`` and a slope
    above ``z`` standard errors."""
    rows = report.series(scheme)
    return fit_rate(
        [r.T for r in rows], [r.mean_gap for r in rows],
        [r.std_scaled_gap for r in rows], [r.replicates for r in rows],
        scheme=scheme, beta_tol=beta_tol, z=z,
    )


# --------------------------------------------------------------------------
# conformance checks

@dataclass
class BoundCheck:
    T: int
    observed: float
    stderr: float
    bound: float
    violated: bool
    skipped: bool = False

    @property
    def margin(self) -> float:
        return self.bound - self.observed


@dataclass
class Conformance:
    name: str
    rows: list[BoundCheck]
    details: dict = field(default_factory=dict)

    @property
    def violations(self) -> list[BoundCheck]:
        return [r for r in self.rows if r.violated]

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        checked = [r for r in self.rows if not r.skipped]
        return (f"{self.name}: {'PASS' if self.passed else 'FAIL'} "
                f"({len(self.violations)} violations / {len(checked)} checked, {len(self.rows) - len(checked)} vacuous)")


def _stderr(row: ReportRow) -> float:
    return row.std_gap / math.sqrt(row.replicates)


UPPER_BOUNDS = {"thm1": "last", "thm2": "average", "thm5": SUFFIX}


def check_upper_bound(report: Report, bound: str, scheme: str | None = None, *, g_sq: float,
                      lam: float = 1.0, mu: float | None = None, alpha: float | None = None,
                      z: float = 2.0) -> Conformance:
    """Flag horizons where ``mean - z * stderr`` exceeds the bound.

    ``thm1`` pairs with the last iterate and ``thm2`` with the full average, both on
    smooth problems; ``thm5`` pairs with a suffix average on any problem.
    """
    if bound not in UPPER_BOUNDS:
        raise ValueError(f"unknown upper bound {bound!r}; expected one of {sorted(UPPER_BOUNDS)}")
    expected = UPPER_BOUNDS[bound]
    scheme = scheme or (expected if expected != SUFFIX else "suffix:0.5")
    if bound == "thm5":
        parsed = AveragingScheme.parse(scheme)
        if parsed.kind != SUFFIX:
            raise ValueError(f"thm5 bounds suffix averages, not {scheme!r}")
        alpha = parsed.alpha if alpha is None else alpha
        calc = lambda T: bounds.thm5_bound(alpha, g_sq, lam, T)  # noqa: E731
    else:
        if scheme != expected:
            raise ValueError(f"{bound} bounds the {expected!r} scheme, not {scheme!r}")
        mu = report.mu if mu is None else mu
        if mu is None:
            raise ValueError(f"{bound} needs a smooth problem; report is for {report.problem!r}")
        fn = bounds.thm1_bound if bound == "thm1" else bounds.thm2_bound
        calc = lambda T: fn(mu, g_sq, lam, T)  # noqa: E731
    rows = []
    for r in report.series(scheme):
        b = calc(r.T)
        se = _stderr(r)
        rows.append(BoundCheck(r.T, r.mean_gap, se, b, r.mean_gap - z * se > b))
    return Conformance(f"{bound}[{scheme}]", rows)


LOWER_BOUNDS = {"thm3": ("corner", bounds.thm3_lower), "thm4": ("interior", bounds.thm4_lower)}


def check_lower_bound(report: Report, which: str, c: float, scheme: str = "average",
                      z: float = 2.0) -> Conformance:
    """Flag horizons where ``mean + z * stderr`` falls below the lower bound;
    horizons where the bound is undefined or nonpositive are skipped as vacuous."""
    if which not in LOWER_BOUNDS:
        raise ValueError(f"unknown lower bound {which!r}; expected thm3 or thm4")
    problem, fn = LOWER_BOUNDS[which]
    if report.problem != problem:
        raise ValueError(f"{which} applies to the {problem} problem, report is for {report.problem!r}")
    if scheme != "average":
        raise ValueError(f"{which} bounds the full average, not {scheme!r}")
    if report.c != c:
        raise ValueError(f"report was run with c={report.c}, bound requested for c={c}")
    rows = []
    for r in report.series(scheme):
        se = _stderr(r)
        try:
            b = fn(c, r.T)
        except ValueError:
            rows.append(BoundCheck(r.T, r.mean_gap, se, math.nan, False, skipped=True))
            continue
        if b <= 0:
            rows.append(BoundCheck(r.T, r.mean_gap, se, b, False, skipped=True))
            continue
        rows.append(BoundCheck(r.T, r.mean_gap, se, b, r.mean_gap + z * se < b))
    return Conformance(f"{which}[c={c:g}]", rows)


def check_distance_bound(problem: Problem, c: float = 1.0, checkpoints: Sequence[int] = DEFAULT_GRID,
                         replicates: int = 100, base_seed: int = 0, g_sq: float | None = None,
                         init: str = "uniform", z: float = 2.0) -> Conformance:
    """Mean ``||w_t - w*||^2`` against ``4 G^2 / (lam'^2 t)`` with ``lam' = lam / c``, from one
    run of length ``max(checkpoints)`` per replicate."""
    if problem.optimum is None:
        raise ValueError(f"{problem.name}: the optimum is unknown")
    if c < 1:
        raise ValueError("the distance bound needs c >= 1")
    g_sq = problem.g_sq_bound if g_sq is None else g_sq
    checkpoints = tuple(sorted(checkpoints))
    streams = [derive_replicate_stream(base_seed, r) for r in range(replicates)]
    results = run_sgd_batch(problem, checkpoints[-1], StepSchedule(c, problem.lam), streams,
                            initial_point=init, checkpoints=checkpoints)
    dist = np.stack([res.checkpoint_dist_sq for res in results])
    lam_eff = problem.lam / c
    rows = []
    for i, t in enumerate(checkpoints):
        mean = float(dist[:, i].mean())
        se = float(dist[:, i].std(ddof=1)) / math.sqrt(replicates) if replicates > 1 else 0.0
        b = bounds.lemma1_bound(g_sq, lam_eff, t)
        rows.append(BoundCheck(t, mean, se, b, mean - z * se > b))
    return Conformance("lemma1", rows, {"g_sq": g_sq, "replicates": replicates})


def check_high_probability(problem: Problem, c: float = 1.0, T: int = 1024, R: int = 1000,
                           delta: float = 0.05, base_seed: int = 0, g_sq: float | None = None,
                           init: str = "uniform") -> Conformance:
    """Empirical ``1 - delta`` quantile of ``max_{t <= T} t ||w_t - w*||^2`` over ``R`` runs
    against the scaled high-probability bound ``(624 ln(ln T / delta) + 1) G^2 / lam'^2``."""
    if problem.optimum is None:
        raise ValueError(f"{problem.name}: the optimum is unknown")
    if R * delta < 5:
        raise ValueError(f"R * delta = {R * delta:g} < 5: too few replicates to resolve the {1 - delta:g} quantile")
    g_sq = problem.g_sq_bound if g_sq is None else g_sq
    streams = [derive_replicate_stream(base_seed, r) for r in range(R)]
    results = run_sgd_batch(problem, T, StepSchedule(c, problem.lam), streams, initial_point=init)
    scaled = np.array([res.max_scaled_distance for res in results])
    quantile = float(np.quantile(scaled, 1.0 - delta))
    bound = bounds.prop1_bound(math.sqrt(g_sq), problem.lam / c, 1, T, delta)
    ratio = quantile / bound
    row = BoundCheck(T, quantile, 0.0, bound, ratio >= 1.0)
    return Conformance("prop1", [row], {"ratio": ratio, "quantile": quantile, "bound": bound,
                                         "delta": delta, "replicates": R, "g_sq": g_sq})


# --------------------------------------------------------------------------
# step-size sweep

@dataclass
class SweepRow:
    c: float
    source: str
    scheme: str
    exponent: float
    classification: str


@dataclass
class SweepReport:
    rows: list[SweepRow]
    metadata: dict[str, str] = field(default_factory=dict)


def deterministic_exponent(c: float, t_grid: Sequence[int]) -> tuple[float, str]:
    """Decay exponent of the exact-gradient iterate ``w_T ~ T^(-exponent)``, by OLS on log-log."""
    w = np.array([bounds.appendixA_deterministic_iterate(c, T) for T in t_grid])
    if np.all(w == 0):
        return math.inf, EXACT
    slope, *_ = _ols(np.log(np.asarray(t_grid, dtype=float)), np.log(w))
    return -slope, f"T^-{-slope:.4f}"


def stepsize_sweep(c_list: Sequence[float], t_grid: Sequence[int] = tuple(2**k for k in range(7, 13)),
                   replicates: int = 10, base_seed: int = 0, out: str | None = None,
                   schemes: Sequence[str] = ("last", "average"), dim: int = 5) -> SweepReport:
    """For each ``c``: the exact-gradient iterate's decay exponent (for ``c <= 1``) and the
    fitted rate exponent of SGD with steps ``c / t`` on the corner problem."""
    rows = []
    for c in c_list:
        if not c > 0:
            raise ValueError(f"step multiplier must be positive, got {c}")
        if c <= 1:
            exponent, label = deterministic_exponent(c, t_grid)
            rows.append(SweepRow(c, "deterministic", "iterate", exponent, label))
        spec = ExperimentSpec(problem="corner", t_grid=tuple(t_grid), replicates=replicates,
                              base_seed=base_seed, schemes=tuple(schemes), c=c, init="uniform", dim=dim)
        report = run_experiment(spec)
        for scheme in report.schemes():
            fit = estimate_rate(report, scheme)
            rows.append(SweepRow(c, "corner", scheme, fit.beta, fit.classification))
    sweep = SweepReport(rows, {"c_list": " ".join(map(repr, c_list)), "t_grid": " ".join(map(str, t_grid)),
                               "replicates": str(replicates), "base_seed": str(base_seed)})
    if out:
        emit_sweep_csv(sweep, out)
    return sweep


# --------------------------------------------------------------------------
# CSV output

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def metadata_path(path) -> str:
    return os.fspath(path) + ".meta"


def _write_metadata(path, metadata: dict[str, str]) -> None:
    lines = [f"{k}={str(v).replace(chr(10), ' ')}" for k, v in metadata.items()]
    _write(metadata_path(path), "\n".join(lines) + "\n")


def emit_csv(report: Report, path) -> None:
    """Rows sorted by scheme then T; floats in 17 significant digits.
    ``<path>.meta`` receives the metadata as ``key=value`` lines."""
    lines = [CSV_HEADER]
    for r in sorted(report.rows, key=lambda r: (r.scheme, r.T)):
        lines.append(",".join([r.scheme, str(r.T), _fmt(r.mean_gap), _fmt(r.std_gap),
                               _fmt(r.mean_scaled_gap), _fmt(r.std_scaled_gap), str(r.replicates)]))
    _write(path, "\n".join(lines) + "\n")
    _write_metadata(path, report.metadata)


def read_csv(path) -> list[ReportRow]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            s, T, m, sd, ms, ssd, n = line.strip().split(",")
            rows.append(ReportRow(s, int(T), float(m), float(sd), float(ms), float(ssd), int(n)))
    return rows


def emit_sweep_csv(sweep: SweepReport, path) -> None:
    lines = ["c,source,scheme,exponent,classification"]
    for r in sweep.rows:
        lines.append(f"{_fmt(r.c)},{r.source},{r.scheme},{_fmt(r.exponent)},{r.classification}")
    _write(path, "\n".join(lines) + "\n")
    _write_metadata(path, sweep.metadata)


# --------------------------------------------------------------------------
# figure protocols

FIGURES = ("smooth", "nonsmooth", "svm")


def replicate_figure(name: str, out_dir, train=None, test=None, lam: float = 1e-4,
                     replicates: int = 10, t_grid: Sequence[int] = DEFAULT_GRID, base_seed: int = 0,
                     workers: int = 1) -> dict[str, Report]:
    """Run one figure protocol and write its CSVs into ``out_dir``.

    ``smooth`` and ``nonsmooth`` report scaled gaps of last / average / suffix(1/2) / Epoch-GD
    from a uniformly random start; ``svm`` reports raw train (and test) objectives from the origin.
    """
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; expected one of {FIGURES}")
    common = dict(t_grid=tuple(t_grid), replicates=replicates, base_seed=base_seed,
                  schemes=FIGURE_SCHEMES, include_epoch_gd=True, workers=workers)
    out_dir = Path(out_dir)
    if name in ("smooth", "nonsmooth"):
        problem_id = "smooth" if name == "smooth" else "interior"
        spec = ExperimentSpec(problem=problem_id, init="uniform", out=str(out_dir / f"{name}.csv"), **common)
        return {name: run_experiment(spec)}

    if train is None:
        raise ValueError("the svm figure needs a training file")
    train_set = load_svmlight(train)
    test_set = load_svmlight(test) if test is not None else None
    dim = max(train_set.max_index, test_set.max_index if test_set is not None else 0)
    problem = SvmProblem(train_set, lam, dim=dim)
    spec = ExperimentSpec(problem="svm", init="origin", dim=dim, **common)
    start = time.perf_counter()
    points = collect_outputs(spec, problem)
    meta = dict(spec.echo(), lam=repr(lam), train=os.fspath(train), quantity="objective",
                wall_time_s=f"{time.perf_counter() - start:.3f}")
    reports = {"svm_train": aggregate(evaluate(points, problem), metadata=dict(meta, split="train"),
                                      problem="svm", raw_objective=True)}
    if test_set is not None:
        test_problem = SvmProblem(test_set, lam, dim=dim)
        reports["svm_test"] = aggregate(evaluate(points, test_problem),
                                        metadata=dict(meta, split="test", test=os.fspath(test)),
                                        problem="svm", raw_objective=True)
    for key, report in reports.items():
        emit_csv(report, out_dir / f"{key}.csv")
    return reports
