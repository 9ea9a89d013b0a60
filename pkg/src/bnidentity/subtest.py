"""Two-sample closeness test on a small domain, calibrated by permutation.

The statistic is ``T = sum_x ((A_x - B_x)^2 - A_x - B_x) / (A_x + B_x)``.
Its null distribution is obtained by re-splitting the pooled sample at
random, which for count tables is a multivariate hypergeometric draw; the
test is therefore level-exact under exchangeability whatever the domain.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, InsufficientSamplesWarning, InvalidConfig
from .seeding import derive_rng

DEFAULT_CONSTANT = 20.0


class Decision(str, enum.Enum):
    EQUAL = "Equal"
    FAR = "Far"


@dataclass(frozen=True)
class SubtestConfig:
    """Parameters of one subtest.

    Attributes:
        eps_sq: squared-Hellinger separation the test must detect.
        eta: allowed error probability.
        permutations: number of random re-splits used to calibrate.
        sample_budget: explicit per-side sample size; when set, the
            recommended size from :func:`required_samples` is not enforced.
        calibration_seed: root seed of the re-split generator.
        constant: leading constant of :func:`required_samples`.
    """

    eps_sq: float
    eta: float = 1.0 / 3.0
    permutations: int = 200
    sample_budget: int | None = None
    calibration_seed: int = 0
    constant: float = DEFAULT_CONSTANT

    def __post_init__(self):
        if not 0 < self.eps_sq <= 1:
            raise InvalidConfig(f"eps_sq must be in (0, 1], got {self.eps_sq}")
        if not 0 < self.eta < 1:
            raise InvalidConfig(f"eta must be in (0, 1), got {self.eta}")
        if self.permutations < 1:
            raise InvalidConfig("need at least one permutation")
        if self.sample_budget is not None and self.sample_budget < 0:
            raise InvalidConfig("sample_budget must be nonnegative")
        if self.constant <= 0:
            raise InvalidConfig("constant must be positive")


@dataclass(frozen=True)
class SubtestVerdict:
    decision: Decision
    statistic: float
    threshold: float
    pvalue: float
    samples_a: int
    samples_b: int
    recommended: int
    permutations: int

    @property
    def undersampled(self) -> bool:
        return min(self.samples_a, self.samples_b) < self.recommended


def required_samples(domain_size: int, eps_sq: float, eta: float, constant: float = DEFAULT_CONSTANT) -> int:
    """Per-side sample size ``C * min(D^(2/3)/eps^(8/3), D^(3/4)/eps^2) * log(1/eta) * (1 + log D)``.

    ``eps = sqrt(eps_sq)``; the ``1 + log D`` factor stands in for the
    logarithms the asymptotic rate leaves unspecified.
    """
    if domain_size < 1:
        raise InvalidConfig("domain size must be positive")
    if not 0 < eps_sq <= 1 or not 0 < eta < 1 or constant <= 0:
        raise InvalidConfig(f"invalid parameters eps_sq={eps_sq}, eta={eta}, constant={constant}")
    d = float(domain_size)
    rate = min(d ** (2 / 3) / eps_sq ** (4 / 3), d**0.75 / eps_sq)
    return max(1, math.ceil(constant * rate * math.log(1.0 / eta) * (1.0 + math.log(d))))


def _statistic_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    total = a + b
    num = (a - b) ** 2 - total
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(total > 0, num / np.where(total > 0, total, 1), 0.0)
    return terms.sum(axis=-1)


def closeness_statistic(counts_a, counts_b) -> float:
    a = np.asarray(counts_a, dtype=float).ravel()
    b = np.asarray(counts_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DomainMismatch(f"count tables have {a.size} and {b.size} cells")
    return float(_statistic_rows(a, b))


def counts_from_symbols(symbols, domain_size: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64).ravel()
    if symbols.size and (symbols.min() < 0 or symbols.max() >= domain_size):
        raise DomainMismatch(f"symbols fall outside 0..{domain_size - 1}")
    return np.bincount(symbols, minlength=domain_size)


def permutation_threshold(replicates: np.ndarray, eta: float) -> float:
    """The ``ceil((1 - eta)(R + 1))``-th smallest replicate (capped at the largest).

    With the observed statistic exchangeable with the ``R`` replicates, the
    probability that it strictly exceeds this order statistic is at most
    ``eta`` whenever ``R >= 1/eta - 1``.
    """
    r = replicates.size
    # the small slack keeps exact products such as (2/3) * 201 from rounding up
    k = min(r, math.ceil((1.0 - eta) * (r + 1) - 1e-9))
    return float(np.partition(replicates, k - 1)[k - 1])


def hellinger_subtest(counts_a, counts_b, config: SubtestConfig) -> SubtestVerdict:
    """Decide ``A == B`` against ``H^2(A, B) >= eps_sq`` from two count tables.

    Raw symbol lists can be converted first with :func:`counts_from_symbols`.
    Runs below the recommended sample size emit
    :class:`InsufficientSamplesWarning` and still return a verdict.
    """
    a = np.asarray(counts_a, dtype=np.int64).ravel()
    b = np.asarray(counts_b, dtype=np.int64).ravel()
    if a.shape != b.shape:
        raise DomainMismatch(f"count tables have {a.size} and {b.size} cells")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainMismatch("counts must be nonnegative")
    n_a, n_b = int(a.sum()), int(b.sum())
    recommended = (
        config.sample_budget
        if config.sample_budget is not None
        else required_samples(a.size, config.eps_sq, config.eta, config.constant)
    )
    if min(n_a, n_b) < recommended:
        warnings.warn(
            f"subtest on domain {a.size} has {min(n_a, n_b)} samples, {recommended} recommended",
            InsufficientSamplesWarning,
            stacklevel=2,
        )
    observed = float(_statistic_rows(a.astype(float), b.astype(float)))
    pooled = a + b
    r = config.permutations
    if pooled.sum() == 0:
        replicates = np.zeros(r)
    else:
        rng = derive_rng(config.calibration_seed, "subtest-permutation")
        resampled_a = rng.multivariate_hypergeometric(pooled, n_a, size=r).astype(float)
        replicates = _statistic_rows(resampled_a, pooled[None, :] - resampled_a)
    threshold = permutation_threshold(replicates, config.eta)
    pvalue = (1.0 + float(np.sum(replicates >= observed))) / (r + 1.0)
    decision = Decision.FAR if observed > threshold else Decision.EQUAL
    return SubtestVerdict(decision, observed, threshold, pvalue, n_a, n_b, recommended, r)
