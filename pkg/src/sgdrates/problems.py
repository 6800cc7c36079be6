"""Stochastic problems: objective, analytic subgradient and noisy gradient oracle.

Oracles are split in two so runs can pre-draw their randomness in one block:
``draw_noise(rng, n)`` consumes the stream, ``gradient(W, noise)`` is a
deterministic function of the query point(s) and the injected draw(s).
``oracle(w, rng)`` composes the two for a single call.

``gradient`` accepts a point ``(d,)`` with one draw, or a batch ``(n, d)``
with ``n`` draws, and treats rows independently.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .core import Domain, RngStream

DOMAIN_TOL = 1e-12


class Problem:
    """Base class.  Subclasses set the attributes below and implement
    :meth:`value`, :meth:`subgradient`, :meth:`draw_noise` and :meth:`gradient`."""

    name: str
    dim: int
    domain: Domain
    lam: float
    mu: float | None = None
    g_sq_bound: float
    optimum: np.ndarray | None = None
    f_min: float | None = None

    def _validate(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not self.lam > 0:
            raise ValueError("strong convexity modulus must be positive")
        if self.mu is not None and self.mu < self.lam:
            raise ValueError("smoothness modulus must be at least the strong convexity modulus")
        if not self.g_sq_bound > 0:
            raise ValueError("gradient second-moment bound must be positive")
        if self.optimum is not None and not self.domain.contains(self.optimum):
            raise ValueError("optimum lies outside the domain")

    @property
    def smooth(self) -> bool:
        return self.mu is not None

    def value(self, w) -> float:
        raise NotImplementedError

    def subgradient(self, w) -> np.ndarray:
        raise NotImplementedError

    def draw_noise(self, rng: RngStream, n: int) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, w, noise) -> np.ndarray:
        raise NotImplementedError

    def oracle(self, w, rng: RngStream) -> np.ndarray:
        return self.gradient(w, self.draw_noise(rng, 1)[0])

    def gap(self, w) -> float:
        """``F(w) - F(w*)``, or the raw objective when the optimum is unknown.

        Rounding can make a gap slightly negative; values above ``-1e-12`` are
        clamped to zero, anything lower means ``f_min`` is wrong.
        """
        f = self.value(w)
        if self.f_min is None:
            return f
        g = f - self.f_min
        if g < 0:
            if g < -1e-12:
                raise ArithmeticError(f"{self.name}: negative gap {g!r}; the declared optimum is wrong")
            g = 0.0
        return g

    def _check_dim(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected dimension {self.dim}, got {w.shape[-1]}")
        return w

    def _check_member(self, w) -> np.ndarray:
        w = self._check_dim(w)
        if not self.domain.contains(w, tol=DOMAIN_TOL):
            raise ValueError(f"{self.name}: point outside the domain")
        return w


class SmoothQuadratic(Problem):
    """``F(w) = ||w||^2 / 2`` on ``[-1, 1]^d`` with oracle ``w + z``, ``z ~ U[-noise, noise]^d``.

    ``noise=0`` gives the exact gradient.  ``g_sq_bound`` is the worst case of
    ``E||w + z||^2`` over the box: ``d + d * noise^2 / 3``.
    """

    def __init__(self, dim: int = 5, noise: float = 1.0):
        self.name = "smooth"
        self.dim = dim
        self.noise = float(noise)
        self.domain = Domain.box(-1.0, 1.0)
        self.lam = 1.0
        self.mu = 1.0
        self.g_sq_bound = dim + dim * self.noise**2 / 3.0
        self.optimum = np.zeros(dim)
        self.f_min = 0.0
        self._validate()

    def value(self, w) -> float:
        w = self._check_dim(w)
        return 0.5 * float(np.dot(w, w))

    def subgradient(self, w) -> np.ndarray:
        return np.array(self._check_dim(w), dtype=float)

    def draw_noise(self, rng, n):
        if self.noise == 0.0:
            return np.zeros((n, self.dim))
        return rng.uniform(-self.noise, self.noise, size=(n, self.dim))

    def gradient(self, w, noise):
        return np.asarray(w, dtype=float) + noise


class _FirstCoordinateProblem(Problem):
    """Shared machinery: noise is one scalar ``Z ~ U[-1, 3]`` per call, acting on coordinate 1."""

    Z_LOW = -1.0
    Z_HIGH = 3.0

    def draw_noise(self, rng, n):
        return rng.uniform(self.Z_LOW, self.Z_HIGH, size=n)


class CornerProblem(_FirstCoordinateProblem):
    """``F(w) = ||w||^2 / 2 + w_1`` on ``[0, 1]^d``; optimum at the corner ``0``.

    Oracle ``w + (Z, 0, ..., 0)`` with ``Z ~ U[-1, 3]``, so ``E||g||^2 <= d + 5``.
    """

    def __init__(self, dim: int = 5):
        self.name = "corner"
        self.dim = dim
        self.domain = Domain.box(0.0, 1.0)
        self.lam = 1.0
        self.g_sq_bound = dim + 5.0
        self.optimum = np.zeros(dim)
        self.f_min = 0.0
        self._validate()

    def value(self, w) -> float:
        w = self._check_member(w)
        return 0.5 * float(np.dot(w, w)) + float(w[0])

    def subgradient(self, w) -> np.ndarray:
        g = np.array(self._check_dim(w), dtype=float)
        g[0] += 1.0
        return g

    def gradient(self, w, noise):
        g = np.array(w, dtype=float)
        g[..., 0] += noise
        return g


class InteriorProblem(_FirstCoordinateProblem):
    """``F(w) = ||w||^2 / 2 + (w_1 if w_1 >= 0 else -7 w_1)`` on ``[-1, 1]^d``.

    Oracle adds ``(Z, 0, ..., 0)`` when ``w_1 >= 0`` and ``(-7, 0, ..., 0)``
    otherwise; ``E||g||^2 <= d + 63``.  A draw is consumed either way.
    """

    NEGATIVE_SLOPE = -7.0

    def __init__(self, dim: int = 5):
        self.name = "interior"
        self.dim = dim
        self.domain = Domain.box(-1.0, 1.0)
        self.lam = 1.0
        self.g_sq_bound = dim + 63.0
        self.optimum = np.zeros(dim)
        self.f_min = 0.0
        self._validate()

    def value(self, w) -> float:
        w = self._check_member(w)
        w1 = float(w[0])
        return 0.5 * float(np.dot(w, w)) + (w1 if w1 >= 0 else self.NEGATIVE_SLOPE * w1)

    def subgradient(self, w) -> np.ndarray:
        g = np.array(self._check_dim(w), dtype=float)
        g[0] += 1.0 if g[0] >= 0 else self.NEGATIVE_SLOPE
        return g

    def gradient(self, w, noise):
        g = np.array(w, dtype=float)
        g[..., 0] += np.where(g[..., 0] >= 0, noise, self.NEGATIVE_SLOPE)
        return g


def smooth_quadratic_eval(w) -> float:
    return SmoothQuadratic(len(w)).value(w)


def smooth_quadratic_oracle(w, rng: RngStream) -> np.ndarray:
    return SmoothQuadratic(len(w)).oracle(w, rng)


def corner_problem_eval(w) -> float:
    return CornerProblem(len(w)).value(w)


def corner_problem_oracle(w, rng: RngStream) -> np.ndarray:
    return CornerProblem(len(w)).oracle(w, rng)


def interior_problem_eval(w) -> float:
    return InteriorProblem(len(w)).value(w)


def interior_problem_oracle(w, rng: RngStream) -> np.ndarray:
    return InteriorProblem(len(w)).oracle(w, rng)


# --------------------------------------------------------------------------
# sparse data and the SVM objective


class SvmlightFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SparseExample:
    label: int
    features: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")
        prev = 0
        for idx, val in self.features:
            if idx <= prev:
                raise ValueError("feature indices must be strictly increasing and >= 1")
            if not math.isfinite(val):
                raise ValueError("feature values must be finite")
            prev = idx


@dataclass
class Dataset:
    examples: list[SparseExample]
    name: str = ""
    max_index: int = field(default=-1)

    def __post_init__(self):
        inferred = max((ex.features[-1][0] for ex in self.examples if ex.features), default=0)
        if self.max_index < 0:
            self.max_index = inferred
        elif self.max_index < inferred:
            raise ValueError(f"max_index {self.max_index} is below the largest feature index {inferred}")

    def __len__(self) -> int:
        return len(self.examples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.examples == other.examples and self.max_index == other.max_index

    @property
    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=float)

    def to_csr(self, n_cols: int | None = None) -> sp.csr_matrix:
        """Feature matrix with 0-based columns (index ``i`` maps to column ``i - 1``)."""
        n_cols = self.max_index if n_cols is None else n_cols
        if n_cols < self.max_index:
            raise ValueError(f"{n_cols} columns cannot hold feature index {self.max_index}")
        indptr = [0]
        indices, data = [], []
        for ex in self.examples:
            for idx, val in ex.features:
                indices.append(idx - 1)
                data.append(val)
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(len(self.examples), n_cols),
        )


_LABELS = {"+1": 1, "1": 1, "-1": -1}


def parse_svmlight(source, name: str = "") -> Dataset:
    """Parse ``label idx:val idx:val ...`` lines.

    ``source`` is a string or an iterable of lines.  Blank lines and lines
    starting with ``#`` are skipped; text after ``#`` is ignored.  Labels are
    ``+1``, ``1`` or ``-1``; indices are 1-based and strictly increasing.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    examples = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _LABELS.get(tokens[0])
        if label is None:
            raise SvmlightFormatError(lineno, f"label must be +1, 1 or -1, got {tokens[0]!r}")
        features = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise SvmlightFormatError(lineno, f"malformed token {tok!r}") from None
            if not math.isfinite(val):
                raise SvmlightFormatError(lineno, f"non-finite value in {tok!r}")
            if idx < 1:
                raise SvmlightFormatError(lineno, f"feature index must be >= 1, got {idx}")
            if idx <= prev:
                raise SvmlightFormatError(lineno, f"feature index {idx} does not follow {prev} in ascending order")
            features.append((idx, val))
            prev = idx
        examples.append(SparseExample(label, tuple(features)))
    return Dataset(examples, name=name)


def load_svmlight(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_svmlight(fh, name=os.path.basename(str(path)))


def serialize_svmlight(dataset: Dataset) -> str:
    lines = []
    for ex in dataset.examples:
        parts = ["+1" if ex.label == 1 else "-1"]
        parts.extend(f"{idx}:{val!r}" for idx, val in ex.features)
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def svm_objective(dataset: Dataset, w, lam: float) -> float:
    """``(lam / 2) ||w||^2 + mean_i max(0, 1 - y_i <x_i, w>)``."""
    if len(dataset) == 0:
        raise ValueError("svm objective of an empty dataset")
    if lam < 0:
        raise ValueError("regularization must be nonnegative")
    w = np.asarray(w, dtype=float)
    X = dataset.to_csr(len(w))
    margins = dataset.labels * (X @ w)
    return 0.5 * lam * float(np.dot(w, w)) + float(np.mean(np.maximum(0.0, 1.0 - margins)))


class SvmProblem(Problem):
    """Regularized hinge loss over a dataset, sampled one example per oracle call.

    Unconstrained and without a known optimum, so :meth:`gap` returns the raw
    objective.  ``g_sq_bound`` is ``(sqrt(lam) + max ||x||)^2``, valid on the
    ball of radius ``1 / sqrt(lam)`` that contains the minimizer.
    """

    def __init__(self, dataset: Dataset, lam: float = 1e-4, dim: int | None = None):
        if len(dataset) == 0:
            raise ValueError("svm problem needs a nonempty dataset")
        self.name = "svm"
        self.dataset = dataset
        self.dim = dataset.max_index if dim is None else dim
        self.domain = Domain.unconstrained()
        self.lam = float(lam)
        self.X = dataset.to_csr(self.dim)
        self.y = dataset.labels
        max_norm = float(np.sqrt(self.X.multiply(self.X).sum(axis=1).max()))
        self.g_sq_bound = (math.sqrt(self.lam) + max_norm) ** 2
        self._validate()

    def value(self, w) -> float:
        w = self._check_dim(w)
        margins = self.y * (self.X @ w)
        return 0.5 * self.lam * float(np.dot(w, w)) + float(np.mean(np.maximum(0.0, 1.0 - margins)))

    def subgradient(self, w) -> np.ndarray:
        w = self._check_dim(w)
        active = (self.y * (self.X @ w) <= 1.0) * self.y
        return self.lam * w - (self.X.T @ active) / len(self.y)

    def draw_noise(self, rng, n):
        return rng.integers(len(self.y), size=n)

    def gradient(self, w, noise):
        return svm_gradient(self.X, self.y, self.lam, w, noise)


def svm_gradient(X: sp.csr_matrix, y: np.ndarray, lam: float, w, idx) -> np.ndarray:
    """``lam w - 1[y_i <x_i, w> <= 1] y_i x_i`` for example ``idx``; batched over rows of ``w``."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    W = w[None, :] if single else w
    idx = np.atleast_1d(idx)
    rows = X[idx]
    counts = np.diff(rows.indptr)
    owner = np.repeat(np.arange(len(idx)), counts)
    prods = rows.data * W[owner, rows.indices]
    margins = np.zeros(len(idx))
    nonempty = counts > 0
    if prods.size:
        margins[nonempty] = np.add.reduceat(prods, rows.indptr[:-1][nonempty])
    yi = y[idx]
    coef = np.where(yi * margins <= 1.0, yi, 0.0)
    G = lam * W
    G[owner, rows.indices] -= coef[owner] * rows.data
    return G[0] if single else G


def svm_oracle(dataset: Dataset, w, lam: float, rng: RngStream) -> np.ndarray:
    """One stochastic subgradient from a uniformly drawn example (``lam = 0`` allowed)."""
    if len(dataset) == 0:
        raise ValueError("svm oracle of an empty dataset")
    w = np.asarray(w, dtype=float)
    return svm_gradient(dataset.to_csr(len(w)), dataset.labels, lam, w, rng.integers(len(dataset)))


def build_problem(name: str, dim: int = 5) -> Problem:
    if name == "smooth":
        return SmoothQuadratic(dim)
    if name == "corner":
        return CornerProblem(dim)
    if name == "interior":
        return InteriorProblem(dim)
    raise ValueError(f"unknown synthetic problem {name!r} (expected smooth, corner or interior)")


class OracleMoments(NamedTuple):
    mean: np.ndarray
    second_moment: float
    std: np.ndarray
    second_moment_std: float


def estimate_oracle_moments(problem: Problem, w, n: int, rng: RngStream, chunk: int = 1 << 18) -> OracleMoments:
    """Monte-Carlo mean of the oracle and of its squared norm over ``n`` calls at a fixed ``w``.

    Also returns the per-coordinate sample standard deviation and the sample
    standard deviation of ``||g||^2``, for building confidence bands.
    """
    if n < 1:
        raise ValueError("need at least one oracle call")
    w = np.asarray(w, dtype=float)
    total = np.zeros(problem.dim)
    total_sq = np.zeros(problem.dim)
    norm_sq = 0.0
    norm_quad = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        G = problem.gradient(np.broadcast_to(w, (m, problem.dim)), problem.draw_noise(rng, m))
        total += G.sum(axis=0)
        total_sq += (G * G).sum(axis=0)
        sq = np.einsum("ij,ij->i", G, G)
        norm_sq += float(sq.sum())
        norm_quad += float((sq * sq).sum())
        done += m
    mean = total / n
    second = norm_sq / n
    bessel = n / (n - 1) if n > 1 else 0.0
    var = np.maximum(total_sq / n - mean**2, 0.0) * bessel
    second_var = max(norm_quad / n - second**2, 0.0) * bessel
    return OracleMoments(mean, second, np.sqrt(var), math.sqrt(second_var))
