"""Goodness-of-fit for product distributions over {0,1}^n against a known model.

Pipeline: flip coordinates whose model mean exceeds 1/2, mix tiny model
means with XOR noise so every mean is at least ``eps / (c n)``, draw
Poissonized per-coordinate counts, and compare

    Z = sum_i ((N_i - m q_i)^2 - N_i) / (m q_i)

against a threshold between ``E[Z] = 0`` (equality) and
``E[Z] >= m eps'^2 / 2`` (``eps'``-far after preprocessing).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bn_core import SampleSet
from .errors import DomainTooLarge, InsufficientSamples, InvalidConfig, OutOfDomain, ZeroQ
from .seeding import derive_rng
from .subtest import Decision

ORACLE_POINT_CAP = 5_000_000


class ThresholdMode(str, enum.Enum):
    CHEBYSHEV = "chebyshev"
    MONTE_CARLO_NULL = "monte-carlo-null"


@dataclass(frozen=True)
class ProductModel:
    """Independent bits with ``P(X_i = 1) = q[i]``."""

    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        if q.size == 0 or np.any((q < 0) | (q > 1)) or not np.all(np.isfinite(q)):
            raise OutOfDomain("product model means must lie in [0, 1]")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class GofConfig:
    """Settings of :func:`gof_product`.

    ``m`` is derived from the original ``eps``; the test is then run at the
    degraded separation ``eps' = (1 - 2/c) eps`` that survives the XOR noise.
    """

    eps: float
    c: float = 10.0
    c_prime: float = 15.0
    seed: int = 0
    threshold_mode: ThresholdMode = ThresholdMode.MONTE_CARLO_NULL
    null_replicas: int = 500

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise InvalidConfig(f"eps must be in (0, 1], got {self.eps}")
        if self.c <= 2:
            raise InvalidConfig("c must exceed 2")
        if self.c_prime <= 0 or self.null_replicas < 1:
            raise InvalidConfig("c_prime and null_replicas must be positive")
        object.__setattr__(self, "threshold_mode", ThresholdMode(self.threshold_mode))

    def m(self, n: int) -> int:
        return max(1, math.ceil(self.c_prime * math.sqrt(n) / self.eps**2))

    @property
    def eps_prime(self) -> float:
        return (1.0 - 2.0 / self.c) * self.eps

    def rows_needed(self, n: int) -> int:
        return math.ceil(2 * math.e * self.m(n))


def preprocess_flip(q: ProductModel) -> tuple[ProductModel, np.ndarray]:
    """Complement every coordinate with mean strictly above 1/2."""
    mask = q.q > 0.5
    return ProductModel(np.where(mask, 1.0 - q.q, q.q)), mask


def flip_samples(data: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask[None, :], 1 - data, data)


def preprocess_xor_noise(q: ProductModel, eps: float, c: float) -> tuple[ProductModel, np.ndarray]:
    """Raise means below ``eps/(c n)`` by XOR-ing with Bernoulli(``eps/(c n)``) noise.

    Returns the model of the noisy bits and the per-coordinate noise rates
    (zero where no noise is added).
    """
    if np.any(q.q > 0.5):
        raise InvalidConfig("apply preprocess_flip first: some means exceed 1/2")
    floor = eps / (c * q.n)
    if 2 * floor > 1:
        raise InvalidConfig(f"noise rate {floor} is too large (2 eps / (c n) > 1)")
    rates = np.where(q.q < floor, floor, 0.0)
    return ProductModel(noisy_means(q.q, rates)), rates


def noisy_means(p: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Means of ``X_i xor Z_i`` with ``X_i ~ Bern(p_i)``, ``Z_i ~ Bern(rates_i)``."""
    p = np.asarray(p, dtype=float)
    return p * (1.0 - rates) + (1.0 - p) * rates


def xor_noise_samples(data: np.ndarray, rates: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noise = rng.random(data.shape) < rates[None, :]
    return np.bitwise_xor(data, noise.astype(data.dtype))


@dataclass(frozen=True)
class PoissonizedCounts:
    ones: np.ndarray
    draws: np.ndarray
    truncated: bool


def poissonized_counts(data: np.ndarray, m: int, rng: np.random.Generator) -> PoissonizedCounts:
    """Count ones among the first ``M_i ~ Poisson(m)`` rows of each column.

    Needs at least ``ceil(2 e m)`` rows. When some ``M_i`` exceeds ``2 e m``
    the result is flagged ``truncated`` (counts then use the available rows)
    and callers are expected to fall back to a random verdict.
    """
    if m < 1:
        raise InvalidConfig("m must be at least 1")
    data = np.asarray(data)
    rows, n = data.shape
    cap = 2 * math.e * m
    if rows < math.ceil(cap):
        raise InsufficientSamples(f"{rows} rows supplied, {math.ceil(cap)} required")
    draws = rng.poisson(m, size=n)
    truncated = bool(draws.max(initial=0) > cap)
    used = np.minimum(draws, rows)
    prefix = np.vstack([np.zeros((1, n), dtype=np.int64), np.cumsum(data, axis=0, dtype=np.int64)])
    ones = prefix[used, np.arange(n)]
    return PoissonizedCounts(ones, draws, truncated)


def z_statistic(counts, m: float, q: ProductModel) -> float:
    n_arr = np.asarray(counts, dtype=float)
    if n_arr.shape != q.q.shape:
        raise InvalidConfig(f"{n_arr.size} counts for a model over {q.n} coordinates")
    if np.any(q.q <= 0):
        raise ZeroQ("every model mean must be positive")
    expected = m * q.q
    return float(np.sum(((n_arr - expected) ** 2 - n_arr) / expected))


def z_statistic_batch(counts: np.ndarray, m: float, q: np.ndarray) -> np.ndarray:
    expected = m * q
    return np.sum(((counts - expected) ** 2 - counts) / expected, axis=-1)


def chebyshev_threshold(m: int, eps_prime: float) -> float:
    return m * eps_prime**2 / 4.0


def null_threshold(q: np.ndarray, m: int, eps_prime: float, replicates: int, rng: np.random.Generator) -> float:
    """Simulated 2/3-quantile of Z under the model, moved halfway toward ``m eps'^2 / 2``.

    Never returns less than the simulated quantile itself.
    """
    null_counts = rng.poisson(m * q, size=(replicates, q.size))
    z = z_statistic_batch(null_counts, m, q)
    base = float(np.quantile(z, 2.0 / 3.0))
    target = m * eps_prime**2 / 2.0
    return base + max(0.0, (target - base) / 2.0)


@dataclass(frozen=True)
class GofVerdict:
    decision: Decision
    statistic: float
    threshold: float
    m: int
    eps_prime: float
    truncated: bool
    flipped: tuple[int, ...]
    noise_rates: np.ndarray = field(repr=False)
    samples_used: int = 0
    mode: ThresholdMode = ThresholdMode.MONTE_CARLO_NULL


def gof_product(samples: SampleSet, q: ProductModel, config: GofConfig) -> GofVerdict:
    """Test ``P == Q`` against ``TV(P, Q) >= eps`` for a product ``P`` seen through samples."""
    if samples.cols != q.n:
        raise InvalidConfig(f"samples have {samples.cols} columns, model has {q.n}")
    if any(k != 2 for k in samples.arities):
        raise InvalidConfig("product goodness-of-fit needs binary columns")
    n = q.n
    m = config.m(n)
    flipped_q, mask = preprocess_flip(q)
    final_q, rates = preprocess_xor_noise(flipped_q, config.eps, config.c)
    data = flip_samples(samples.data, mask)
    data = xor_noise_samples(data, rates, derive_rng(config.seed, "gof", "xor-noise"))
    counts = poissonized_counts(data, m, derive_rng(config.seed, "gof", "poisson"))
    z = z_statistic(counts.ones, m, final_q)
    if config.threshold_mode is ThresholdMode.CHEBYSHEV:
        tau = chebyshev_threshold(m, config.eps_prime)
    else:
        tau = null_threshold(
            final_q.q, m, config.eps_prime, config.null_replicas, derive_rng(config.seed, "gof", "null")
        )
    if counts.truncated:
        guess = derive_rng(config.seed, "gof", "guess").random() < 0.5
        decision = Decision.FAR if guess else Decision.EQUAL
    else:
        decision = Decision.FAR if z > tau else Decision.EQUAL
    return GofVerdict(
        decision=decision,
        statistic=z,
        threshold=tau,
        m=m,
        eps_prime=config.eps_prime,
        truncated=counts.truncated,
        flipped=tuple(int(i) for i in np.flatnonzero(mask)),
        noise_rates=rates,
        samples_used=int(min(counts.draws.max(initial=0), samples.rows)),
        mode=config.threshold_mode,
    )


def product_hellinger_sq(p, q) -> float:
    """Exact H^2 between two product Bernoulli distributions."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    affinity = np.prod(np.sqrt(p * q) + np.sqrt((1 - p) * (1 - q)))
    return float(min(1.0, max(0.0, 1.0 - affinity)))


def product_total_variation(p, q, cap: int = ORACLE_POINT_CAP) -> float:
    """Exact TV between two product Bernoulli distributions.

    Coordinates with equal means are dropped; the rest are grouped by their
    ``(p_i, q_i)`` pair, and since the likelihood ratio depends only on the
    number of ones per group, the sum runs over per-group count vectors
    weighted by binomial probabilities.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise InvalidConfig("mean vectors differ in length")
    keep = p != q
    groups: dict[tuple[float, float], int] = {}
    for a, b in zip(p[keep], q[keep]):
        groups[(float(a), float(b))] = groups.get((float(a), float(b)), 0) + 1
    points = math.prod(s + 1 for s in groups.values())
    if points > cap:
        raise DomainTooLarge(f"product TV oracle needs {points} points, cap is {cap}")
    mass_p = np.ones(1)
    mass_q = np.ones(1)
    for (a, b), s in sorted(groups.items()):
        k = np.arange(s + 1)
        mass_p = np.outer(mass_p, stats.binom.pmf(k, s, a)).ravel()
        mass_q = np.outer(mass_q, stats.binom.pmf(k, s, b)).ravel()
    return float(min(1.0, 0.5 * np.abs(mass_p - mass_q).sum()))
