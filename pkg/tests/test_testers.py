import math

import numpy as np
import pytest

from bnidentity.bn_core import BayesNet, Dag, SampleSet, joint_distribution, sample
from bnidentity.errors import BudgetExceeded, InvalidConfig, ShapeMismatch
from bnidentity.subtest import Decision
from bnidentity.testers import (
    TesterConfig,
    exact_subtest,
    known_structure_budget,
    known_structure_subsets,
    test_known_structure as run_known,
    test_two_trees as run_trees,
    test_unknown_structure as run_unknown,
    two_trees_budget,
    unknown_structure_budget,
)
from bnidentity.tree_order import Tree

from conftest import random_net


def perturbed(net, node, amount):
    cpts = list(net.cpts)
    row = cpts[node][0].copy()
    shift = min(amount, row[0])
    row[0] -= shift
    row[1] += shift
    table = cpts[node].copy()
    table[0] = row
    cpts[node] = table
    return BayesNet(net.dag, net.arities, tuple(cpts))


class TestEnumeration:
    def test_known_subsets(self):
        assert known_structure_subsets(Dag.chain(3)) == [(0,), (0, 1), (1, 2)]

    def test_unknown_full_collapse(self):
        v = run_unknown(None, None, 3, 0.5, subtest=lambda s, e, h: _equal(), n=4)
        assert [r.subset for r in v.subtest_log] == [(0, 1, 2, 3)]
        assert v.eta == pytest.approx(1 / 3)

    def test_two_trees_includes_full_joint(self):
        v = run_trees(None, None, 0.5, subtest=lambda s, e, h: _equal(), n=6)
        assert v.planned_subtests == 63 and v.subtest_log[-1].subset == tuple(range(6))
        assert v.eta == pytest.approx(1 / (3 * 63))

    def test_parameters(self):
        v = run_known(None, None, Dag.chain(4), 0.4, subtest=lambda s, e, h: _equal())
        assert v.eps_sq == pytest.approx(0.16 / 8) and v.eta == pytest.approx(1 / 12)

    def test_budget_exceeded(self):
        with pytest.raises(BudgetExceeded):
            run_trees(None, None, 0.5, TesterConfig(max_subtests=10), subtest=lambda s, e, h: _equal(), n=6)

    def test_truncate(self):
        v = run_trees(None, None, 0.5, TesterConfig(max_subtests=10, truncate=True), subtest=lambda s, e, h: _equal(), n=6)
        assert not v.complete and len(v.subtest_log) == 10

    def test_invalid(self):
        with pytest.raises(InvalidConfig):
            run_unknown(None, None, 4, 0.5, subtest=lambda s, e, h: _equal(), n=4)
        with pytest.raises(ShapeMismatch):
            run_trees(None, None, 0.5, subtest=lambda s, e, h: _equal())


def _equal():
    from bnidentity.subtest import SubtestVerdict

    return SubtestVerdict(Decision.EQUAL, 0.0, 1.0, 1.0, 0, 0, 0, 0)


class TestExactComposition:
    def test_identical_is_equal(self, rng):
        dist = joint_distribution(random_net(Dag.chain(5), (2,) * 5, rng))
        v = run_known(None, None, Dag.chain(5), 0.3, subtest=exact_subtest(dist, dist))
        assert v.decision is Decision.EQUAL and v.witness is None

    def test_far_pair_detected(self, rng):
        net = random_net(Dag.chain(5), (2,) * 5, rng)
        p, q = joint_distribution(net), joint_distribution(perturbed(net, 2, 0.6))
        v = run_known(None, None, Dag.chain(5), 0.2, subtest=exact_subtest(p, q), exact=(p, q))
        assert v.decision is Decision.FAR and 2 in v.witness
        assert v.subtest_log[-1].exact_h_sq >= v.eps_sq


class TestWithSamples:
    def test_disjoint_columns_far(self):
        a = SampleSet(np.zeros((400, 3), dtype=int), (2, 2, 2))
        b = SampleSet(np.ones((400, 3), dtype=int), (2, 2, 2))
        v = run_known(a, b, Dag.chain(3), 0.5, TesterConfig(sample_budget=400))
        assert v.decision is Decision.FAR and v.witness == (0,)
        assert v.samples_used == 400

    def test_same_net_equal_and_perturbed_far(self, rng):
        dag = Dag.chain(4)
        net = random_net(dag, (2,) * 4, rng)
        cfg = TesterConfig(sample_budget=4000, seed=3)
        same = run_known(sample(net, 4000, 1), sample(net, 4000, 2), dag, 0.3, cfg)
        far = run_known(sample(net, 4000, 1), sample(perturbed(net, 3, 0.8), 4000, 2), dag, 0.3, cfg)
        assert same.decision is Decision.EQUAL
        assert far.decision is Decision.FAR and 3 in far.witness

    def test_unknown_structure_far(self, rng):
        n = 5
        net = random_net(Dag.chain(n), (2,) * n, rng)
        cfg = TesterConfig(sample_budget=3000)
        v = run_unknown(sample(net, 3000, 1), sample(perturbed(net, 1, 0.8), 3000, 2), 1, 0.3, cfg)
        assert v.decision is Decision.FAR

    def test_two_trees_far(self, rng):
        n = 5
        tp = Tree.path(n)
        tq = Tree.star(n)
        p = random_net(tp.to_dag(), (2,) * n, rng, alpha=0.3)
        q = random_net(tq.to_dag(), (2,) * n, rng, alpha=0.3)
        v = run_trees(sample(p, 3000, 1), sample(q, 3000, 2), 0.3, TesterConfig(sample_budget=3000))
        assert v.decision is Decision.FAR

    def test_arity_mismatch(self):
        a = SampleSet(np.zeros((3, 2), dtype=int), (2, 2))
        b = SampleSet(np.zeros((3, 2), dtype=int), (2, 3))
        with pytest.raises(ShapeMismatch):
            run_known(a, b, Dag.chain(2), 0.3)


class TestBudgets:
    def test_known_budget_uses_largest_domain(self):
        from bnidentity.subtest import required_samples

        budget = known_structure_budget(Dag.chain(10), (2,) * 10, 0.3)
        assert budget == required_samples(4, 0.09 / 20, 1 / 30)

    def test_unknown_and_trees(self):
        from bnidentity.subtest import required_samples

        assert unknown_structure_budget((2,) * 6, 2, 0.5) == required_samples(8, 0.25 / 12, 1 / (3 * math.comb(6, 3)))
        assert two_trees_budget((2,) * 7, 0.5) == required_samples(64, 0.25 / 14, 1 / (3 * 126))
