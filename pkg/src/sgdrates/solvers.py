"""Projected SGD with simultaneous averaging schemes, and the Epoch-GD baseline.

The engines run a batch of independent replicates as the rows of one array.
Each row owns its stream, draws its whole noise sequence up front, and only
meets elementwise or row-wise operations, so row ``r`` of a batched run is
bitwise identical to a single run with the same stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import (
    AVERAGE,
    BOX,
    EPOCH,
    LAST,
    SUFFIX,
    AveragingScheme,
    EpochAverager,
    RngStream,
    RunningMean,
    StepSchedule,
    project,
    step_size,
    suffix_start,
)
from .problems import Problem

EPOCH_GD = "epoch_gd"

InitialPoint = Union[str, np.ndarray]


class SolverError(RuntimeError):
    pass


@dataclass
class RunConfig:
    problem: Problem
    horizon: int
    schedule: StepSchedule
    rng: RngStream
    schemes: tuple[AveragingScheme, ...] = (AveragingScheme(LAST),)
    initial_point: InitialPoint = "origin"
    checkpoints: tuple[int, ...] = ()
    allow_schedule_override: bool = False

    def __post_init__(self):
        self.schemes = tuple(self.schemes)
        self.checkpoints = tuple(sorted(int(t) for t in self.checkpoints))
        _validate_run(self.problem, self.horizon, self.schedule, self.schemes, self.checkpoints,
                      self.allow_schedule_override)


@dataclass
class RunResult:
    """Outcome of one run.  ``final_gaps`` hold ``F(out) - F(w*)``, or the raw
    objective when ``raw_objective`` is set (optimum unknown).

    ``checkpoint_gaps[label][i]`` is the gap of the scheme's output had the run
    stopped after round ``checkpoints[i]``; the suffix average is only defined
    at the horizon and is NaN elsewhere.  ``checkpoint_dist_sq[i]`` is
    ``||w_t - w*||^2`` for the iterate queried at round ``t``.
    """

    schemes: tuple[str, ...]
    outputs: dict[str, np.ndarray]
    final_gaps: dict[str, float]
    checkpoints: tuple[int, ...] = ()
    checkpoint_gaps: dict[str, np.ndarray] = field(default_factory=dict)
    checkpoint_dist_sq: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_scaled_distance: float = float("nan")
    seed: tuple = ()
    oracle_calls: int = 0
    raw_objective: bool = False


def _validate_run(problem, horizon, schedule, schemes, checkpoints, allow_override):
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    if not schemes:
        raise ValueError("request at least one averaging scheme")
    labels = [s.label for s in schemes]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate schemes in {labels}")
    if checkpoints and (checkpoints[0] < 1 or checkpoints[-1] > horizon):
        raise ValueError(f"checkpoints must lie in [1, {horizon}]")
    if schedule.lam != problem.lam and not allow_override:
        raise ValueError(
            f"step schedule uses lam={schedule.lam} but the problem has lam={problem.lam}; "
            "set allow_schedule_override to run a mismatched schedule"
        )


def initial_points(problem: Problem, initial_point: InitialPoint, streams: Sequence[RngStream]) -> np.ndarray:
    """Starting rows: ``"origin"``, ``"uniform"`` (drawn from each row's stream) or an explicit point."""
    if isinstance(initial_point, str):
        if initial_point == "origin":
            w = np.zeros(problem.dim)
            if not problem.domain.contains(w):
                raise ValueError(f"the origin is outside the {problem.name} domain")
            return np.tile(w, (len(streams), 1))
        if initial_point == "uniform":
            return np.stack([problem.domain.sample(s, problem.dim) for s in streams])
        raise ValueError(f"unknown initial point policy {initial_point!r}")
    w = np.asarray(initial_point, dtype=float)
    if w.shape != (problem.dim,):
        raise ValueError(f"initial point has shape {w.shape}, expected ({problem.dim},)")
    if not problem.domain.contains(w):
        raise ValueError("explicit initial point lies outside the domain")
    return np.tile(w, (len(streams), 1))


def _draw_noise(problem: Problem, streams: Sequence[RngStream], horizon: int) -> np.ndarray:
    # (T, R, ...) so that noise[t] is one contiguous block for all rows
    return np.ascontiguousarray(np.stack([problem.draw_noise(s, horizon) for s in streams], axis=1))


class _Stepper:
    """``W <- Proj(W - eta * G)`` with the box case inlined."""

    def __init__(self, problem: Problem):
        self.domain = problem.domain
        self.box = problem.domain.kind == BOX

    def __call__(self, W, eta, G):
        V = W - eta * G
        if self.box:
            np.maximum(V, self.domain.lower, out=V)
            np.minimum(V, self.domain.upper, out=V)
            return V
        return project(self.domain, V)


def _row_sq_dist(W, opt):
    diff = W - opt
    return (diff * diff).sum(axis=1)


def _check_finite(G, t, streams):
    if not np.isfinite(G).all():
        bad = int(np.flatnonzero(~np.isfinite(G).reshape(len(G), -1).all(axis=1))[0])
        s = streams[bad]
        raise SolverError(f"oracle returned a non-finite gradient at round {t} (seed={s.seed}, index={s.index})")


def run_sgd_batch(
    problem: Problem,
    horizon: int,
    schedule: StepSchedule,
    streams: Sequence[RngStream],
    schemes: Sequence[AveragingScheme] = (AveragingScheme(LAST),),
    initial_point: InitialPoint = "origin",
    checkpoints: Sequence[int] = (),
    allow_schedule_override: bool = False,
) -> list[RunResult]:
    """Run ``len(streams)`` independent SGD replicates side by side."""
    schemes = tuple(schemes)
    checkpoints = tuple(sorted(int(t) for t in checkpoints))
    _validate_run(problem, horizon, schedule, schemes, checkpoints, allow_schedule_override)
    R = len(streams)
    T = horizon

    W = initial_points(problem, initial_point, streams)
    noise = _draw_noise(problem, streams, T)
    step = _Stepper(problem)

    full = RunningMean() if any(s.kind == AVERAGE for s in schemes) else None
    suffixes = {s.label: (suffix_start(T, s.alpha), RunningMean()) for s in schemes if s.kind == SUFFIX}
    epochs = {s.label: EpochAverager(s.growth) for s in schemes if s.kind == EPOCH}

    opt = problem.optimum
    track = opt is not None
    max_scaled = np.zeros(R)
    ck_index = {t: i for i, t in enumerate(checkpoints)}
    ck_gaps = {s.label: np.full((R, len(checkpoints)), np.nan) for s in schemes}
    ck_dist = np.full((R, len(checkpoints)), np.nan)

    def current(s, W_next):
        if s.kind == LAST:
            return W_next
        if s.kind == AVERAGE:
            return full.mean
        if s.kind == SUFFIX:
            return suffixes[s.label][1].mean
        return epochs[s.label].mean

    d2 = None
    for t in range(1, T + 1):
        if full is not None:
            full.update(W)
        for start, acc in suffixes.values():
            if t >= start:
                acc.update(W)
        for ep in epochs.values():
            ep.update(W)
        if track:
            d2 = _row_sq_dist(W, opt)
            np.maximum(max_scaled, t * d2, out=max_scaled)

        G = problem.gradient(W, noise[t - 1])
        _check_finite(G, t, streams)
        W = step(W, step_size(schedule, t), G)

        i = ck_index.get(t)
        if i is not None:
            if not problem.domain.contains(W, tol=1e-12):
                raise SolverError(f"iterate left the domain at round {t}")
            if track:
                ck_dist[:, i] = d2
            for s in schemes:
                if s.kind == SUFFIX and t != T:
                    continue
                pts = current(s, W)
                for r in range(R):
                    ck_gaps[s.label][r, i] = problem.gap(pts[r])

    results = []
    for r in range(R):
        outputs = {s.label: np.array(current(s, W)[r]) for s in schemes}
        results.append(RunResult(
            schemes=tuple(s.label for s in schemes),
            outputs=outputs,
            final_gaps={k: problem.gap(v) for k, v in outputs.items()},
            checkpoints=checkpoints,
            checkpoint_gaps={k: v[r].copy() for k, v in ck_gaps.items()},
            checkpoint_dist_sq=ck_dist[r].copy(),
            max_scaled_distance=float(max_scaled[r]) if track else float("nan"),
            seed=(streams[r].seed, streams[r].index),
            oracle_calls=T,
            raw_objective=problem.f_min is None,
        ))
    return results


def run_sgd(config: RunConfig) -> RunResult:
    """Projected SGD ``w_{t+1} = Proj(w_t - eta_t g_t)`` for exactly ``horizon`` oracle calls.

    ``last`` returns ``w_{T+1}``; the averages run over ``w_1 .. w_T``.
    """
    return run_sgd_batch(
        config.problem,
        config.horizon,
        config.schedule,
        [config.rng],
        schemes=config.schemes,
        initial_point=config.initial_point,
        checkpoints=config.checkpoints,
        allow_schedule_override=config.allow_schedule_override,
    )[0]


def suffix_index_start(T: int, alpha: float) -> int:
    return suffix_start(T, alpha)


@dataclass(frozen=True)
class EpochGdConfig:
    """Epoch-GD schedule: epoch ``k`` (from 0) runs ``first_epoch * growth^k``
    rounds at constant step ``first_step / decay^k``; the last epoch is cut
    short so the whole run spends exactly ``horizon`` oracle calls.
    ``first_step=None`` means ``1 / lam``."""

    horizon: int
    first_epoch: int = 8
    first_step: float | None = None
    growth: float = 2.0
    decay: float = 2.0

    def __post_init__(self):
        if self.first_epoch < 1:
            raise ValueError("first epoch needs at least one round")
        if not (self.growth > 1 and self.decay > 1):
            raise ValueError("epoch growth and step decay must both exceed 1")
        if self.horizon < self.first_epoch:
            raise ValueError(f"horizon {self.horizon} is shorter than the first epoch {self.first_epoch}")
        if self.first_step is not None and not self.first_step > 0:
            raise ValueError("first step must be positive")

    def epoch_lengths(self) -> list[int]:
        lengths = []
        remaining = self.horizon
        k = 0
        while remaining > 0:
            n = max(1, round(self.first_epoch * self.growth**k))
            lengths.append(min(n, remaining))
            remaining -= lengths[-1]
            k += 1
        return lengths


def run_epoch_gd_batch(
    problem: Problem,
    config: EpochGdConfig,
    streams: Sequence[RngStream],
    initial_point: InitialPoint = "origin",
) -> list[RunResult]:
    R = len(streams)
    W = initial_points(problem, initial_point, streams)
    noise = _draw_noise(problem, streams, config.horizon)
    step = _Stepper(problem)
    first_step = 1.0 / problem.lam if config.first_step is None else config.first_step

    opt = problem.optimum
    track = opt is not None
    max_scaled = np.zeros(R)
    t = 0
    for k, length in enumerate(config.epoch_lengths()):
        eta = first_step / config.decay**k
        acc = RunningMean()
        for _ in range(length):
            t += 1
            acc.update(W)
            if track:
                np.maximum(max_scaled, t * _row_sq_dist(W, opt), out=max_scaled)
            G = problem.gradient(W, noise[t - 1])
            _check_finite(G, t, streams)
            W = step(W, eta, G)
        # the epoch average seeds the next epoch; projecting only undoes rounding
        W = project(problem.domain, acc.mean)

    results = []
    for r in range(R):
        out = np.array(W[r])
        results.append(RunResult(
            schemes=(EPOCH_GD,),
            outputs={EPOCH_GD: out},
            final_gaps={EPOCH_GD: problem.gap(out)},
            max_scaled_distance=float(max_scaled[r]) if track else float("nan"),
            seed=(streams[r].seed, streams[r].index),
            oracle_calls=t,
            raw_objective=problem.f_min is None,
        ))
    return results


def run_epoch_gd(problem: Problem, config: EpochGdConfig, rng: RngStream,
                 initial_point: InitialPoint = "origin") -> RunResult:
    """Epoch-GD: SGD with averaging on each epoch, restarting from the epoch average."""
    return run_epoch_gd_batch(problem, config, [rng], initial_point)[0]


def track_distance(problem: Problem, w, t: int) -> float:
    """``||w_t - w*||^2``."""
    if problem.optimum is None:
        raise ValueError(f"{problem.name}: the optimum is unknown")
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    diff = np.asarray(w, dtype=float) - problem.optimum
    return float(np.dot(diff, diff))
