"""Exact divergences between discrete distributions.

All functions accept either two :class:`DenseDistribution` objects with the
same scope and sizes, or two plain probability vectors of equal length.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bn_core import DenseDistribution
from .errors import DegenerateQ, OutOfDomain, ScopeMismatch


class DivergenceKind(str, enum.Enum):
    HELLINGER_SQ = "HellingerSq"
    TV = "TV"
    KL = "KL"
    CHI_SQ = "ChiSq"


@dataclass(frozen=True)
class DivergenceValue:
    kind: DivergenceKind
    value: float


def _vectors(p, q) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, DenseDistribution) or isinstance(q, DenseDistribution):
        if not (isinstance(p, DenseDistribution) and isinstance(q, DenseDistribution)):
            raise ScopeMismatch("cannot compare a DenseDistribution with a raw vector")
        if p.scope != q.scope or p.sizes != q.sizes:
            raise ScopeMismatch(f"scopes differ: {p.scope}/{p.sizes} vs {q.scope}/{q.sizes}")
        return p.probs, q.probs
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ScopeMismatch(f"vector lengths differ: {p.size} vs {q.size}")
    return p, q


def hellinger_sq(p, q) -> float:
    """Squared Hellinger distance ``1 - sum_k sqrt(p_k q_k)``, clamped to [0, 1].

    Evaluated as ``sum_k (sqrt(p_k) - sqrt(q_k))^2 / 2``, which agrees for
    normalized inputs and avoids the cancellation near ``p == q``.
    """
    p, q = _vectors(p, q)
    value = 0.5 * float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return min(1.0, max(0.0, value))


def hellinger(p, q) -> float:
    return math.sqrt(hellinger_sq(p, q))


def total_variation(p, q) -> float:
    p, q = _vectors(p, q)
    return min(1.0, 0.5 * float(np.sum(np.abs(p - q))))


def kl(p, q) -> float:
    """KL(p || q) in nats; ``inf`` when p puts mass where q has none."""
    p, q = _vectors(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    ps, qs = p[support], q[support]
    return max(0.0, float(np.sum(ps * (np.log(ps) - np.log(qs)))))


def chi_square(p, q) -> float:
    """``sum_k (p_k - q_k)^2 / q_k``; cells with ``p_k = q_k = 0`` contribute 0."""
    p, q = _vectors(p, q)
    diff = p - q
    if np.any((q == 0) & (diff != 0)):
        return math.inf
    mask = q > 0
    return float(np.sum(diff[mask] ** 2 / q[mask]))


def all_divergences(p, q) -> dict[DivergenceKind, DivergenceValue]:
    fns = {
        DivergenceKind.HELLINGER_SQ: hellinger_sq,
        DivergenceKind.TV: total_variation,
        DivergenceKind.KL: kl,
        DivergenceKind.CHI_SQ: chi_square,
    }
    return {kind: DivergenceValue(kind, fn(p, q)) for kind, fn in fns.items()}


def bernoulli_hellinger_sq(p, q):
    """Vectorized squared Hellinger distance between Bernoulli(p) and Bernoulli(q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    value = 0.5 * ((np.sqrt(p) - np.sqrt(q)) ** 2 + (np.sqrt(1.0 - p) - np.sqrt(1.0 - q)) ** 2)
    return np.clip(value, 0.0, 1.0)


def bernoulli_hellinger_bound(p, q):
    """Upper bound ``(p - q)^2 / 2 * (1/q + 1/(1-q))`` on the Bernoulli H^2.

    Works elementwise on arrays. ``q`` must lie strictly inside (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if np.any((q_arr <= 0) | (q_arr >= 1)):
        raise DegenerateQ("q must lie strictly between 0 and 1")
    if np.any((p_arr < 0) | (p_arr > 1)):
        raise OutOfDomain("p must lie in [0, 1]")
    value = (p_arr - q_arr) ** 2 / 2.0 * (1.0 / q_arr + 1.0 / (1.0 - q_arr))
    return float(value) if value.ndim == 0 else value


def sqrt_lower_bound_check(t):
    """Whether ``sqrt(1 + t) >= 1 + t/2 - t^2/2``; elementwise for arrays."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1):
        raise OutOfDomain("t must be >= -1")
    ok = np.sqrt(1.0 + t_arr) >= 1.0 + t_arr / 2.0 - t_arr**2 / 2.0
    return bool(ok) if ok.ndim == 0 else ok
