"""Size and power experiments with exact-oracle gating.

An experiment draws one instance pair per trial from a generator family,
optionally certifies the TV distance between the pair by exact
enumeration, samples both sides, runs a tester and writes one CSV row per
trial followed by a summary row with the empirical rejection rate and its
Wilson 95% interval.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .bn_core import BayesNet, Dag, joint_distribution, sample
from .divergences import total_variation
from .errors import DomainTooLarge, InvalidConfig
from .gof_product import GofConfig, ProductModel, gof_product, product_total_variation
from .fileio import csv_text
from .seeding import derive_int_seed, derive_rng
from .subtest import Decision
from .testers import (
    TesterConfig,
    known_structure_budget,
    test_known_structure,
    test_two_trees,
    test_unknown_structure,
    two_trees_budget,
    unknown_structure_budget,
)

FAMILIES = ("chain", "tree", "star", "random-dag", "product")
TESTERS = ("known", "unknown", "trees", "gof-product")
SCENARIOS = ("size", "power")
ORACLE_CAP = 2**20

REPORT_HEADER = (
    "trial",
    "instance_hash",
    "exact_tv",
    "included",
    "decision",
    "witness",
    "statistic",
    "threshold",
    "samples_used",
    "wall_time_s",
    "far_rate",
    "ci_low",
    "ci_high",
    "excluded",
)
TIMING_COLUMN = "wall_time_s"


@dataclass(frozen=True)
class GeneratorSpec:
    """Instance family.

    ``perturbation`` moves that much probability mass inside one CPT row of
    one node of Q (for ``product``: raises the mean of the first half of the
    coordinates by that amount). ``alpha`` is the Dirichlet concentration of
    the random CPT rows.
    """

    family: str = "chain"
    n: int = 5
    k: int = 2
    d: int = 2
    perturbation: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfig(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1 or self.k < 2 or self.d < 0 or self.alpha <= 0:
            raise InvalidConfig("need n >= 1, k >= 2, d >= 0, alpha > 0")
        if not 0 <= self.perturbation <= 1:
            raise InvalidConfig("perturbation must be in [0, 1]")
        if self.family == "product" and self.k != 2:
            raise InvalidConfig("the product family is binary")


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    generator: GeneratorSpec
    tester: str
    eps: float
    trials: int = 1
    seed: int = 0
    samples: int | None = None
    output: str | None = None
    permutations: int = 200
    constant: float = 20.0
    max_in_degree: int | None = None
    gof_c: float = 10.0
    gof_c_prime: float = 15.0
    gof_mode: str = "monte-carlo-null"
    oracle_cap: int = ORACLE_CAP

    def __post_init__(self):
        if isinstance(self.generator, dict):
            object.__setattr__(self, "generator", GeneratorSpec(**self.generator))
        if self.scenario not in SCENARIOS:
            raise InvalidConfig(f"scenario must be one of {SCENARIOS}")
        if self.tester not in TESTERS:
            raise InvalidConfig(f"tester must be one of {TESTERS}")
        if self.trials < 1:
            raise InvalidConfig("trials must be at least 1")
        if not 0 < self.eps <= 1:
            raise InvalidConfig("eps must be in (0, 1]")
        if self.scenario == "size" and self.generator.perturbation != 0:
            raise InvalidConfig("size experiments need perturbation 0 (P = Q)")
        if self.tester == "gof-product" and self.generator.family != "product":
            raise InvalidConfig("gof-product runs on the product family")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _random_dag(gen: GeneratorSpec, rng: np.random.Generator) -> Dag:
    n = gen.n
    if gen.family == "chain":
        return Dag.chain(n)
    if gen.family == "star":
        return Dag.star(n)
    if gen.family == "product":
        return Dag.empty(n)
    if gen.family == "tree":
        return Dag(n, tuple(() if v == 0 else (int(rng.integers(0, v)),) for v in range(n)))
    parents = []
    for v in range(n):
        k = int(rng.integers(0, min(gen.d, v) + 1))
        parents.append(tuple(int(u) for u in rng.choice(v, size=k, replace=False)) if k else ())
    return Dag(n, tuple(parents))


def random_cpts(dag: Dag, arities: Sequence[int], rng: np.random.Generator, alpha: float = 1.0):
    cpts = []
    for v in range(dag.n):
        rows = math.prod(arities[u] for u in dag.parents[v])
        cpts.append(rng.dirichlet(np.full(arities[v], alpha), size=rows))
    return tuple(cpts)


def perturb_row(row: np.ndarray, amount: float) -> np.ndarray:
    """Move up to ``amount`` mass from the likeliest symbol to the least likely one."""
    row = row.copy()
    hi, lo = int(np.argmax(row)), int(np.argmin(row))
    if hi == lo:
        lo = (hi + 1) % row.size
    moved = min(amount, row[hi])
    row[hi] -= moved
    row[lo] += moved
    return row


def generate_instance(spec: ExperimentSpec, trial: int) -> tuple[BayesNet, BayesNet, float | None]:
    """Instance pair for one trial; deterministic in ``(spec.seed, trial)``."""
    gen = spec.generator
    rng = derive_rng(spec.seed, "instance", trial)
    dag = _random_dag(gen, rng)
    arities = (gen.k,) * gen.n
    cpts_p = random_cpts(dag, arities, rng, gen.alpha)
    net_p = BayesNet(dag, arities, cpts_p)
    cpts_q = [c.copy() for c in cpts_p]
    if gen.perturbation > 0:
        if gen.family == "product":
            for v in range(math.ceil(gen.n / 2)):
                mean = min(1.0, cpts_q[v][0, 1] + gen.perturbation)
                cpts_q[v] = np.array([[1.0 - mean, mean]])
        else:
            v = int(rng.integers(0, gen.n))
            r = int(rng.integers(0, cpts_q[v].shape[0]))
            cpts_q[v][r] = perturb_row(cpts_q[v][r], gen.perturbation)
    net_q = BayesNet(dag, arities, tuple(cpts_q))
    exact_tv = _exact_tv(net_p, net_q, spec.oracle_cap, gen.family == "product")
    if exact_tv is None and spec.scenario == "power":
        raise DomainTooLarge("power experiments need the exact TV oracle; shrink the instance")
    return net_p, net_q, exact_tv


def product_means(net: BayesNet) -> np.ndarray:
    return np.array([c[0, 1] for c in net.cpts])


def _exact_tv(net_p: BayesNet, net_q: BayesNet, cap: int, product: bool) -> float | None:
    try:
        if product:
            return product_total_variation(product_means(net_p), product_means(net_q), cap=cap)
        return total_variation(joint_distribution(net_p, cap), joint_distribution(net_q, cap))
    except DomainTooLarge:
        return None


def instance_hash(net_p: BayesNet, net_q: BayesNet) -> str:
    h = hashlib.sha256()
    for net in (net_p, net_q):
        h.update(repr((net.arities, net.dag.parents)).encode())
        for c in net.cpts:
            h.update(np.ascontiguousarray(c).tobytes())
    return h.hexdigest()[:16]


def sample_budget(spec: ExperimentSpec) -> int:
    if spec.samples is not None:
        return spec.samples
    gen = spec.generator
    arities = (gen.k,) * gen.n
    if spec.tester == "gof-product":
        return GofConfig(spec.eps, spec.gof_c, spec.gof_c_prime).rows_needed(gen.n)
    if spec.tester == "unknown":
        return unknown_structure_budget(arities, _max_in_degree(spec), spec.eps, spec.constant)
    if spec.tester == "trees":
        return two_trees_budget(arities, spec.eps, spec.constant)
    return -1  # known: depends on the drawn DAG


def _max_in_degree(spec: ExperimentSpec) -> int:
    if spec.max_in_degree is not None:
        return spec.max_in_degree
    gen = spec.generator
    if gen.family in ("chain", "tree", "star"):
        return 1
    if gen.family == "product":
        return 0
    return gen.d


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    instance_hash: str
    exact_tv: float | None
    included: bool
    decision: Decision | None
    witness: tuple[int, ...] | None
    statistic: float | None
    threshold: float | None
    samples_used: int
    wall_time_s: float


def run_trial(spec: ExperimentSpec, trial: int) -> TrialRecord:
    start = time.perf_counter()
    net_p, net_q, exact_tv = generate_instance(spec, trial)
    ident = instance_hash(net_p, net_q)
    included = spec.scenario == "size" or (exact_tv is not None and exact_tv >= spec.eps)
    if not included:
        return TrialRecord(trial, ident, exact_tv, False, None, None, None, None, 0, time.perf_counter() - start)
    rows = sample_budget(spec)
    if rows < 0:
        rows = known_structure_budget(net_p.dag, net_p.arities, spec.eps, spec.constant)
    samples_p = sample(net_p, rows, derive_int_seed(spec.seed, "samples-p", trial))
    if spec.tester == "gof-product":
        config = GofConfig(
            spec.eps, spec.gof_c, spec.gof_c_prime,
            seed=derive_int_seed(spec.seed, "gof", trial), threshold_mode=spec.gof_mode,
        )
        v = gof_product(samples_p, ProductModel(product_means(net_q)), config)
        return TrialRecord(
            trial, ident, exact_tv, True, v.decision, None, v.statistic, v.threshold,
            v.samples_used, time.perf_counter() - start,
        )
    samples_q = sample(net_q, rows, derive_int_seed(spec.seed, "samples-q", trial))
    config = TesterConfig(
        permutations=spec.permutations, constant=spec.constant,
        seed=derive_int_seed(spec.seed, "tester", trial),
    )
    if spec.tester == "known":
        verdict = test_known_structure(samples_p, samples_q, net_p.dag, spec.eps, config)
    elif spec.tester == "unknown":
        verdict = test_unknown_structure(samples_p, samples_q, _max_in_degree(spec), spec.eps, config)
    else:
        verdict = test_two_trees(samples_p, samples_q, spec.eps, config)
    top = max(verdict.subtest_log, key=lambda r: r.statistic - r.threshold)
    return TrialRecord(
        trial, ident, exact_tv, True, verdict.decision, verdict.witness, top.statistic,
        top.threshold, verdict.samples_used, time.perf_counter() - start,
    )


@dataclass(frozen=True)
class ExperimentSummary:
    included: int
    far: int
    excluded: int
    far_rate: float
    ci_low: float
    ci_high: float


def summarize(records: Sequence[TrialRecord]) -> ExperimentSummary:
    kept = [r for r in records if r.included]
    far = sum(r.decision is Decision.FAR for r in kept)
    if kept:
        ci = stats.binomtest(far, len(kept)).proportion_ci(confidence_level=0.95, method="wilson")
        rate, lo, hi = far / len(kept), float(ci.low), float(ci.high)
    else:
        rate = lo = hi = math.nan
    return ExperimentSummary(len(kept), far, len(records) - len(kept), rate, lo, hi)


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple[TrialRecord, ...] = field(repr=False)
    summary: ExperimentSummary

    def csv(self) -> str:
        rows = [
            (
                r.trial, r.instance_hash, r.exact_tv, r.included, r.decision, r.witness,
                r.statistic, r.threshold, r.samples_used, round(r.wall_time_s, 6),
                None, None, None, None,
            )
            for r in self.records
        ]
        s = self.summary
        rows.append(
            ("summary", "", None, s.included, "", "", None, None, None, None,
             s.far_rate, s.ci_low, s.ci_high, s.excluded)
        )
        return csv_text(REPORT_HEADER, rows)


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run every trial, write ``spec.output`` if set, and return the result.

    With ``workers > 1`` trials run in a process pool; rows keep trial order.
    """
    jobs = [(spec, t) for t in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial_star, jobs))
    else:
        records = [run_trial(*job) for job in jobs]
    result = ExperimentResult(spec, tuple(records), summarize(records))
    if spec.output:
        try:
            Path(spec.output).write_text(result.csv(), encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report {spec.output}: {exc}") from exc
    return result


def strip_timing(report: str) -> str:
    """Drop the wall-time column so reports can be compared byte for byte."""
    rows = list(csv.reader(report.splitlines()))
    idx = rows[0].index(TIMING_COLUMN)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(r[:idx] + r[idx + 1 :] for r in rows)
    return buf.getvalue()
