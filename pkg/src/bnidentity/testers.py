"""Composite identity testers built from localized Hellinger subtests.

Each tester runs one subtest per candidate variable set with separation
``eps^2 / (2n)`` and declares ``Far`` as soon as any subtest does. The three
testers differ only in which sets they examine:

* known DAG: every node together with its parents;
* unknown DAG of in-degree at most ``d``: every set of ``d + 1`` variables;
* two unknown trees: every set of at most six variables.

All subtests project the same two sample sets, so the sample cost of a run
is the number of rows supplied, not a sum over subtests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .bn_core import Dag, DenseDistribution, SampleSet, empirical_counts, marginal, topological_order
from .divergences import hellinger_sq
from .errors import BudgetExceeded, InvalidConfig, ShapeMismatch
from .seeding import derive_int_seed
from .subtest import (
    DEFAULT_CONSTANT,
    Decision,
    SubtestConfig,
    SubtestVerdict,
    hellinger_subtest,
    required_samples,
)

TREE_BLOCK_LIMIT = 6

SubtestFn = Callable[[tuple[int, ...], float, float], SubtestVerdict]


@dataclass(frozen=True)
class TesterConfig:
    """Settings shared by the composite testers.

    ``permutations`` is a floor: each subtest uses at least ``ceil(2 / eta)``
    re-splits so that its permutation threshold can actually reach level
    ``eta``. ``max_subtests`` bounds the enumeration; beyond it the tester
    raises :class:`BudgetExceeded`, or with ``truncate=True`` runs the first
    ``max_subtests`` sets and reports ``complete=False``.
    """

    __test__ = False

    permutations: int = 200
    constant: float = DEFAULT_CONSTANT
    seed: int = 0
    sample_budget: int | None = None
    max_subtests: int = 1_000_000
    truncate: bool = False

    def __post_init__(self):
        if self.permutations < 1 or self.max_subtests < 1 or self.constant <= 0:
            raise InvalidConfig("permutations, max_subtests and constant must be positive")


@dataclass(frozen=True)
class SubtestRecord:
    subset: tuple[int, ...]
    domain_size: int
    statistic: float
    threshold: float
    pvalue: float
    decision: Decision
    undersampled: bool
    exact_h_sq: float | None = None

    def indeterminate(self, eps_sq: float) -> bool | None:
        """Whether the exact marginal distance falls strictly inside ``(0, eps_sq)``."""
        if self.exact_h_sq is None:
            return None
        return 0.0 < self.exact_h_sq < eps_sq


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    witness: tuple[int, ...] | None
    subtest_log: tuple[SubtestRecord, ...] = field(repr=False)
    samples_used: int
    eps_sq: float
    eta: float
    planned_subtests: int
    complete: bool = True


def _validate_samples(samples_p: SampleSet | None, samples_q: SampleSet | None, n: int | None) -> int:
    if samples_p is None or samples_q is None:
        if n is None:
            raise ShapeMismatch("without sample sets the variable count n must be given")
        return n
    if samples_p.arities != samples_q.arities:
        raise ShapeMismatch(f"sample sets disagree on arities: {samples_p.arities} vs {samples_q.arities}")
    if n is not None and samples_p.cols != n:
        raise ShapeMismatch(f"samples have {samples_p.cols} columns, expected {n}")
    return samples_p.cols


def sample_subtest(samples_p: SampleSet, samples_q: SampleSet, config: TesterConfig) -> SubtestFn:
    """Subtest backed by the permutation-calibrated closeness test on projected counts."""

    def run(subset: tuple[int, ...], eps_sq: float, eta: float) -> SubtestVerdict:
        sub_config = SubtestConfig(
            eps_sq=eps_sq,
            eta=eta,
            permutations=max(config.permutations, math.ceil(2.0 / eta)),
            sample_budget=config.sample_budget,
            calibration_seed=derive_int_seed(config.seed, "subtest", *subset),
            constant=config.constant,
        )
        return hellinger_subtest(
            empirical_counts(samples_p, subset), empirical_counts(samples_q, subset), sub_config
        )

    return run


def exact_subtest(p: DenseDistribution, q: DenseDistribution) -> SubtestFn:
    """Noise-free stand-in: ``Far`` iff the exact marginal H^2 reaches ``eps_sq``.

    Used to check the composition logic independently of sampling error.
    """

    def run(subset: tuple[int, ...], eps_sq: float, eta: float) -> SubtestVerdict:
        h = hellinger_sq(marginal(p, subset), marginal(q, subset))
        decision = Decision.FAR if h >= eps_sq else Decision.EQUAL
        return SubtestVerdict(decision, h, eps_sq, math.nan, 0, 0, 0, 0)

    return run


def _compose(
    subsets: Sequence[tuple[int, ...]],
    total: int,
    eps_sq: float,
    eta: float,
    run: SubtestFn,
    arities: Sequence[int] | None,
    samples_used: int,
    complete: bool,
    exact: tuple[DenseDistribution, DenseDistribution] | None = None,
) -> Verdict:
    log = []
    witness = None
    for subset in subsets:
        result = run(subset, eps_sq, eta)
        exact_h = None
        if exact is not None:
            exact_h = hellinger_sq(marginal(exact[0], subset), marginal(exact[1], subset))
        domain = math.prod(arities[v] for v in subset) if arities is not None else -1
        log.append(
            SubtestRecord(
                subset=subset,
                domain_size=domain,
                statistic=result.statistic,
                threshold=result.threshold,
                pvalue=result.pvalue,
                decision=result.decision,
                undersampled=result.undersampled,
                exact_h_sq=exact_h,
            )
        )
        if witness is None and result.decision is Decision.FAR:
            witness = subset
    decision = Decision.FAR if witness is not None else Decision.EQUAL
    return Verdict(decision, witness, tuple(log), samples_used, eps_sq, eta, total, complete)


def _budgeted(subsets: Iterable[tuple[int, ...]], total: int, config: TesterConfig):
    if total <= config.max_subtests:
        return list(subsets), True
    if not config.truncate:
        raise BudgetExceeded(f"{total} subtests exceed the budget of {config.max_subtests}")
    return list(itertools.islice(subsets, config.max_subtests)), False


def _runner(samples_p, samples_q, config, subtest):
    if subtest is not None:
        return subtest
    if samples_p is None or samples_q is None:
        raise ShapeMismatch("sample sets are required unless a subtest is supplied")
    return sample_subtest(samples_p, samples_q, config)


def _rows(samples_p, samples_q) -> int:
    if samples_p is None or samples_q is None:
        return 0
    return max(samples_p.rows, samples_q.rows)


def _arities(samples_p, exact, n):
    if samples_p is not None:
        return samples_p.arities
    if exact is not None:
        return exact[0].sizes
    return None


def known_structure_subsets(dag: Dag) -> list[tuple[int, ...]]:
    return [tuple(sorted((v,) + dag.parents[v])) for v in topological_order(dag)]


def test_known_structure(
    samples_p: SampleSet | None,
    samples_q: SampleSet | None,
    dag: Dag,
    eps: float,
    config: TesterConfig = TesterConfig(),
    subtest: SubtestFn | None = None,
    exact: tuple[DenseDistribution, DenseDistribution] | None = None,
) -> Verdict:
    """Identity test for two Bayes nets on a known common DAG.

    One subtest per node on the node and its parents, at ``eps_sq = eps^2/(2n)``
    and ``eta = 1/(3n)``. Passing ``exact`` joints only adds the true marginal
    distances to the log.
    """
    if not 0 < eps <= 1:
        raise InvalidConfig(f"eps must be in (0, 1], got {eps}")
    n = _validate_samples(samples_p, samples_q, dag.n)
    run = _runner(samples_p, samples_q, config, subtest)
    subsets = known_structure_subsets(dag)
    return _compose(
        subsets, len(subsets), eps * eps / (2 * n), 1.0 / (3 * n), run,
        _arities(samples_p, exact, n), _rows(samples_p, samples_q), True, exact,
    )


def test_unknown_structure(
    samples_p: SampleSet | None,
    samples_q: SampleSet | None,
    max_in_degree: int,
    eps: float,
    config: TesterConfig = TesterConfig(),
    subtest: SubtestFn | None = None,
    n: int | None = None,
    exact: tuple[DenseDistribution, DenseDistribution] | None = None,
) -> Verdict:
    """Identity test for two Bayes nets on a shared unknown DAG of bounded in-degree.

    Subtests every ``(d + 1)``-subset in lexicographic order with per-subtest
    error ``1 / (3 * C(n, d + 1))``.
    """
    if not 0 < eps <= 1:
        raise InvalidConfig(f"eps must be in (0, 1], got {eps}")
    n = _validate_samples(samples_p, samples_q, n)
    size = max_in_degree + 1
    if max_in_degree < 0 or size > n:
        raise InvalidConfig(f"need 0 <= d and d + 1 <= n, got d={max_in_degree}, n={n}")
    total = math.comb(n, size)
    subsets, complete = _budgeted(itertools.combinations(range(n), size), total, config)
    run = _runner(samples_p, samples_q, config, subtest)
    return _compose(
        subsets, total, eps * eps / (2 * n), 1.0 / (3 * total), run,
        _arities(samples_p, exact, n), _rows(samples_p, samples_q), complete, exact,
    )


def _small_subsets(n: int, limit: int):
    for k in range(1, min(limit, n) + 1):
        yield from itertools.combinations(range(n), k)


def test_two_trees(
    samples_p: SampleSet | None,
    samples_q: SampleSet | None,
    eps: float,
    config: TesterConfig = TesterConfig(),
    subtest: SubtestFn | None = None,
    n: int | None = None,
    exact: tuple[DenseDistribution, DenseDistribution] | None = None,
) -> Verdict:
    """Identity test for two tree-structured Bayes nets on possibly different unknown trees.

    Subtests every set of at most six variables (sizes ascending, each size
    in lexicographic order). Tree structure of the sources is assumed, not
    checked.
    """
    if not 0 < eps <= 1:
        raise InvalidConfig(f"eps must be in (0, 1], got {eps}")
    n = _validate_samples(samples_p, samples_q, n)
    total = sum(math.comb(n, k) for k in range(1, min(TREE_BLOCK_LIMIT, n) + 1))
    subsets, complete = _budgeted(_small_subsets(n, TREE_BLOCK_LIMIT), total, config)
    run = _runner(samples_p, samples_q, config, subtest)
    return _compose(
        subsets, total, eps * eps / (2 * n), 1.0 / (3 * total), run,
        _arities(samples_p, exact, n), _rows(samples_p, samples_q), complete, exact,
    )


def recommended_samples(
    arities: Sequence[int],
    eps: float,
    subsets: Sequence[tuple[int, ...]] | None = None,
    subset_size: int | None = None,
    subtest_count: int | None = None,
    constant: float = DEFAULT_CONSTANT,
) -> int:
    """Rows each sample set should hold so that every subtest meets its recommended size.

    Give either explicit ``subsets`` or a ``subset_size`` (the largest
    subsets by domain are then assumed) together with ``subtest_count``.
    """
    n = len(arities)
    eps_sq = eps * eps / (2 * n)
    if subsets is not None:
        count = len(subsets) if subtest_count is None else subtest_count
        domain = max(math.prod(arities[v] for v in s) for s in subsets)
    else:
        if subset_size is None or subtest_count is None:
            raise InvalidConfig("give subsets, or subset_size together with subtest_count")
        count = subtest_count
        domain = math.prod(sorted(arities, reverse=True)[: min(subset_size, n)])
    return required_samples(domain, eps_sq, 1.0 / (3 * count), constant)


def known_structure_budget(dag: Dag, arities: Sequence[int], eps: float, constant: float = DEFAULT_CONSTANT) -> int:
    return recommended_samples(arities, eps, subsets=known_structure_subsets(dag), constant=constant)


def unknown_structure_budget(arities: Sequence[int], max_in_degree: int, eps: float, constant: float = DEFAULT_CONSTANT) -> int:
    n = len(arities)
    return recommended_samples(
        arities, eps, subset_size=max_in_degree + 1,
        subtest_count=math.comb(n, max_in_degree + 1), constant=constant,
    )


def two_trees_budget(arities: Sequence[int], eps: float, constant: float = DEFAULT_CONSTANT) -> int:
    n = len(arities)
    count = sum(math.comb(n, k) for k in range(1, min(TREE_BLOCK_LIMIT, n) + 1))
    return recommended_samples(
        arities, eps, subset_size=TREE_BLOCK_LIMIT, subtest_count=count, constant=constant
    )


# Keep pytest from collecting the public testers when they are imported into test modules.
for _fn in (test_known_structure, test_unknown_structure, test_two_trees):
    _fn.__test__ = False
