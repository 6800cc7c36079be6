"""Closed-form convergence bounds for SGD on strongly convex problems.

Upper bounds assume steps ``1 / (lam * t)``; lower bounds are for the corner
and interior constructions run with steps ``c / t``.  Logarithms are natural
and harmonic sums are summed term by term.
"""
from __future__ import annotations

import math


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


def _round(t):
    if t < 1:
        raise ValueError(f"round index must be at least 1, got {t}")


def harmonic_sum(first: int, last: int) -> float:
    """``sum_{t=first}^{last} 1/t`` (zero when the range is empty)."""
    return math.fsum(1.0 / t for t in range(first, last + 1))


def lemma1_bound(g_sq: float, lam: float, t: int) -> float:
    """Expected squared distance to the optimum: ``4 G^2 / (lam^2 t)``."""
    _positive(g_sq=g_sq, lam=lam)
    _round(t)
    return 4.0 * g_sq / (lam * lam * t)


def thm1_bound(mu: float, g_sq: float, lam: float, t: int) -> float:
    """Last iterate on a smooth problem: ``2 mu G^2 / (lam^2 t)``."""
    _positive(mu=mu, g_sq=g_sq, lam=lam)
    _round(t)
    if mu < lam:
        raise ValueError(f"smoothness mu={mu} cannot be below strong convexity lam={lam}")
    return 2.0 * mu * g_sq / (lam * lam * t)


def thm2_bound(mu: float, g_sq: float, lam: float, t: int) -> float:
    """Full average on a smooth problem: ``16 mu G^2 / (lam^2 t)``."""
    return 8.0 * thm1_bound(mu, g_sq, lam, t)


MIN_ALPHA = 1e-6


def thm5_bound(alpha: float, g_sq: float, lam: float, t: int) -> float:
    """alpha-suffix average, any strongly convex problem:
    ``(2 + 2.5 ln(1 / (1 - alpha))) / alpha * G^2 / (lam t)``."""
    if not MIN_ALPHA <= alpha < 1.0:
        raise ValueError(f"suffix fraction must lie in [{MIN_ALPHA}, 1), got {alpha}")
    _positive(g_sq=g_sq, lam=lam)
    _round(t)
    return (2.0 + 2.5 * math.log(1.0 / (1.0 - alpha))) / alpha * g_sq / (lam * t)


def thm3_threshold(c: float) -> int:
    _positive(c=c)
    return max(2, math.ceil(c / 2.0))


def thm3_lower(c: float, T: int) -> float:
    """Full average on the corner problem: ``(c / 16T) sum_{t=T0}^{T-1} 1/t``, ``T0 = max(2, ceil(c/2))``."""
    t0 = thm3_threshold(c)
    if T < t0 + 1:
        raise ValueError(f"needs T >= {t0 + 1}, got {T}")
    return c / (16.0 * T) * harmonic_sum(t0, T - 1)


def thm4_threshold(c: float) -> int:
    _positive(c=c)
    return max(2, math.ceil(6.0 * c + 1.0))


def thm4_lower(c: float, T: int) -> float:
    """Full average on the interior problem:
    ``(3c / 16T) sum_{t=T0+2}^{T} 1/t - T0/T``, ``T0 = max(2, ceil(6c + 1))``.
    Negative (vacuous) until T is very large."""
    t0 = thm4_threshold(c)
    if T < t0 + 2:
        raise ValueError(f"needs T >= {t0 + 2}, got {T}")
    return 3.0 * c / (16.0 * T) * harmonic_sum(t0 + 2, T) - t0 / T


def prop1_bound(g: float, lam: float, t: int, T: int, delta: float) -> float:
    """With probability ``1 - delta``, for all ``t <= T``:
    ``||w_t - w*||^2 <= (624 ln(ln(T) / delta) + 1) G^2 / (lam^2 t)``."""
    _positive(g=g, lam=lam)
    if not 0.0 < delta < 1.0 / math.e:
        raise ValueError(f"delta must lie in (0, 1/e), got {delta}")
    if T < 4:
        raise ValueError(f"needs T >= 4, got {T}")
    if not 1 <= t <= T:
        raise ValueError(f"round {t} outside [1, {T}]")
    return (624.0 * math.log(math.log(T) / delta) + 1.0) * g * g / (lam * lam * t)


def appendixA_deterministic_iterate(c: float, T: int) -> float:
    """``w_T = prod_{t=1}^{T-1} (1 - c/t)`` for ``F(w) = w^2 / 2``, exact gradients, ``w_1 = 1``."""
    if not 0.0 < c <= 1.0:
        raise ValueError(f"closed form is restricted to 0 < c <= 1, got {c}")
    if T < 2:
        raise ValueError(f"needs T >= 2, got {T}")
    w = 1.0
    for t in range(1, T):
        w *= 1.0 - c / t
    return w
