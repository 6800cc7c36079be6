"""Numeric building blocks: domains, step sizes, averaging accumulators, seeded streams.

Every accumulator here is shape-agnostic: it works on a single point of shape
``(d,)`` or on a batch of replicate points of shape ``(R, d)``.  All updates
are elementwise, so a batched run reproduces each single run bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BOX = "box"
BALL = "ball"
UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class Domain:
    """Feasible set: a hypercube ``[lower, upper]^d``, a centered ball, or all of R^d."""

    kind: str
    lower: float = -math.inf
    upper: float = math.inf
    radius: float = math.inf

    def __post_init__(self):
        if self.kind == BOX:
            if not self.lower < self.upper:
                raise ValueError(f"box needs lower < upper, got [{self.lower}, {self.upper}]")
        elif self.kind == BALL:
            if not self.radius > 0:
                raise ValueError(f"ball radius must be positive, got {self.radius}")
        elif self.kind != UNCONSTRAINED:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def box(cls, lower: float, upper: float) -> "Domain":
        return cls(BOX, lower=float(lower), upper=float(upper))

    @classmethod
    def ball(cls, radius: float) -> "Domain":
        return cls(BALL, radius=float(radius))

    @classmethod
    def unconstrained(cls) -> "Domain":
        return cls(UNCONSTRAINED)

    def project(self, v: np.ndarray) -> np.ndarray:
        return project(self, v)

    def contains(self, v: np.ndarray, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        if self.kind == BOX:
            return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))
        if self.kind == BALL:
            return bool(np.linalg.norm(v) <= self.radius * (1.0 + 1e-15) + tol)
        return bool(np.all(np.isfinite(v)))

    def sample(self, rng: "RngStream", dim: int, n: int | None = None) -> np.ndarray:
        """A point drawn uniformly from the domain, or ``n`` of them as an ``(n, dim)`` array."""
        shape = dim if n is None else (n, dim)
        if self.kind == BOX:
            return rng.uniform(self.lower, self.upper, size=shape)
        if self.kind == BALL:
            direction = rng.generator.standard_normal(shape)
            direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
            radius = self.radius * rng.random(None if n is None else (n, 1)) ** (1.0 / dim)
            return project(self, direction * radius)
        raise ValueError("cannot sample uniformly from an unconstrained domain")


def project(domain: Domain, v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``domain``.

    Accepts a point ``(d,)`` or a batch ``(R, d)``; for the ball each row is
    projected on its own.  The result is exactly idempotent.
    """
    v = np.asarray(v, dtype=float)
    if domain.kind == BOX:
        return np.minimum(np.maximum(v, domain.lower), domain.upper)
    if domain.kind == UNCONSTRAINED:
        return v.copy()
    if v.ndim == 2:
        return np.stack([_project_ball(row, domain.radius) for row in v])
    return _project_ball(v, domain.radius)


def _project_ball(v: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v.copy()
    out = v * (radius / norm)
    # rounding may leave the norm an ulp above the radius; shrink until a
    # second projection would be the identity
    while np.linalg.norm(out) > radius:
        out = np.nextafter(out, 0.0)
    return out


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``eta_t = c / (lam * t)``."""

    c: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.lam > 0):
            raise ValueError(f"step schedule needs c > 0 and lam > 0, got c={self.c}, lam={self.lam}")

    def __call__(self, t: int) -> float:
        return step_size(self, t)


def step_size(schedule: StepSchedule, t: int) -> float:
    if t < 1:
        raise ValueError(f"rounds are numbered from 1, got t={t}")
    return schedule.c / (schedule.lam * t)


LAST = "last"
AVERAGE = "average"
SUFFIX = "suffix"
EPOCH = "epoch"


@dataclass(frozen=True)
class AveragingScheme:
    """Which point SGD returns: last iterate, full average, alpha-suffix average,
    or the running average of the current exponentially growing epoch."""

    kind: str
    alpha: float = 1.0
    growth: float = 2.0

    def __post_init__(self):
        if self.kind == SUFFIX:
            if not 0.0 < self.alpha <= 1.0:
                raise ValueError(f"suffix fraction must lie in (0, 1], got {self.alpha}")
        elif self.kind == EPOCH:
            if not self.growth > 1.0:
                raise ValueError(f"epoch growth must exceed 1, got {self.growth}")
        elif self.kind not in (LAST, AVERAGE):
            raise ValueError(f"unknown averaging scheme {self.kind!r}")

    @classmethod
    def last(cls) -> "AveragingScheme":
        return cls(LAST)

    @classmethod
    def average(cls) -> "AveragingScheme":
        return cls(AVERAGE)

    @classmethod
    def suffix(cls, alpha: float) -> "AveragingScheme":
        return cls(SUFFIX, alpha=float(alpha))

    @classmethod
    def epoch(cls, growth: float = 2.0) -> "AveragingScheme":
        return cls(EPOCH, growth=float(growth))

    @property
    def label(self) -> str:
        if self.kind == SUFFIX:
            return f"suffix:{self.alpha:g}"
        if self.kind == EPOCH:
            return f"epoch:{self.growth:g}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "AveragingScheme":
        """Inverse of :attr:`label`, e.g. ``"suffix:0.5"`` or ``"epoch:2"``."""
        name, _, arg = text.strip().partition(":")
        if name == SUFFIX:
            return cls.suffix(float(arg) if arg else 0.5)
        if name == EPOCH:
            return cls.epoch(float(arg) if arg else 2.0)
        if arg:
            raise ValueError(f"scheme {name!r} takes no parameter")
        return cls(name)

    def __str__(self) -> str:
        return self.label


class RunningMean:
    """On-the-fly mean, updated as ``mean += (w - mean) / (count + 1)``.

    Points are accumulated left to right, so two accumulators fed the same
    points in the same order agree bitwise.
    """

    def __init__(self, mean=None, count: int = 0):
        if count < 0:
            raise ValueError("count must be nonnegative")
        self.mean = None if mean is None else np.array(mean, dtype=float)
        self.count = count

    def update(self, w) -> "RunningMean":
        w = np.asarray(w, dtype=float)
        if self.mean is None or self.count == 0:
            self.mean = w.copy()
            self.count = 1
            return self
        if w.shape != self.mean.shape:
            raise ValueError(f"dimension mismatch: mean {self.mean.shape} vs point {w.shape}")
        self.count += 1
        self.mean += (w - self.mean) / self.count
        return self

    def reset(self) -> None:
        self.mean = None
        self.count = 0


def running_average_update(state: tuple, w) -> tuple:
    """Functional form of :class:`RunningMean`: ``(mean, count) -> (mean', count + 1)``."""
    mean, count = state
    acc = RunningMean(mean, count)
    acc.update(w)
    return acc.mean, acc.count


def suffix_start(horizon: int, alpha: float) -> int:
    """First round (1-based) of the last ``ceil(alpha * horizon)`` rounds."""
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"suffix fraction must lie in (0, 1], got {alpha}")
    return horizon - math.ceil(alpha * horizon) + 1


def suffix_average(points: Sequence, alpha: float) -> np.ndarray:
    """Mean of the last ``ceil(alpha * T)`` of ``points``, accumulated like :class:`RunningMean`."""
    if len(points) < 1:
        raise ValueError("need at least one point")
    start = suffix_start(len(points), alpha)
    acc = RunningMean()
    for w in points[start - 1:]:
        acc.update(w)
    return acc.mean


def epoch_boundaries(growth: float, upto: int) -> list[int]:
    """Rounds after which an epoch ends: ``1, ceil(g), ceil(g^2), ...`` up to ``upto``,
    with repeated values (empty epochs) dropped."""
    if not growth > 1.0:
        raise ValueError(f"epoch growth must exceed 1, got {growth}")
    bounds = [1]
    k = 1
    while bounds[-1] < upto:
        end = math.ceil(growth**k)
        if end > bounds[-1]:  # epochs with ceil(g^(k-1)) == ceil(g^k) are empty
            bounds.append(end)
        k += 1
    return bounds


class EpochAverager:
    """Average of the current epoch, where epoch k spans rounds
    ``(ceil(g^(k-1)), ceil(g^k)]`` and round 1 is an epoch of its own.

    Feed one point per round; :attr:`mean` is the current epoch's average.
    """

    def __init__(self, growth: float = 2.0):
        if not growth > 1.0:
            raise ValueError(f"epoch growth must exceed 1, got {growth}")
        self.growth = growth
        self.t = 0
        self._epoch_end = 0
        self._k = 0
        self._acc = RunningMean()

    def update(self, w) -> "EpochAverager":
        self.t += 1
        if self.t > self._epoch_end:
            self._acc.reset()
            if self._k == 0:
                self._epoch_end, self._k = 1, 1
            else:
                while math.ceil(self.growth**self._k) <= self._epoch_end:
                    self._k += 1
                self._epoch_end = math.ceil(self.growth**self._k)
                self._k += 1
        self._acc.update(w)
        return self

    @property
    def mean(self) -> np.ndarray:
        return self._acc.mean

    @property
    def epoch_start(self) -> int:
        return self.t - self._acc.count + 1


def epoch_suffix_state(t: int, growth: float, state: EpochAverager | None, w) -> EpochAverager:
    """Feed round ``t``'s point into the epoch accumulator (created on ``t == 1``)."""
    if state is None:
        state = EpochAverager(growth)
    if t != state.t + 1:
        raise ValueError(f"rounds must be fed in order: expected {state.t + 1}, got {t}")
    return state.update(w)


@dataclass
class RngStream:
    """Seeded PCG64 stream.  ``(seed, index)`` fully determines the output."""

    seed: int
    index: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.index = tuple(int(i) for i in self.index)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.index)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def fresh(self) -> "RngStream":
        """A new stream positioned at the start of the same sequence."""
        return RngStream(self.seed, self.index)

    def random(self, size=None):
        return self.generator.random(size)

    def uniform(self, lo: float, hi: float, size=None):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi})")
        u = self.generator.random(size)
        return lo + (hi - lo) * u

    def integers(self, n: int, size=None):
        return self.generator.integers(0, n, size=size)


def rng_uniform(stream: RngStream, lo: float, hi: float) -> float:
    return float(stream.uniform(lo, hi))


def derive_replicate_stream(base_seed: int, replicate_index: int) -> RngStream:
    """Stream for one replicate: PCG64 seeded by ``SeedSequence(base_seed, spawn_key=(index,))``."""
    if replicate_index < 0:
        raise ValueError(f"replicate index must be nonnegative, got {replicate_index}")
    return RngStream(int(base_seed), (int(replicate_index),))
