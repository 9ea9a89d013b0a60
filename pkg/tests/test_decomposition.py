import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnidentity.bn_core import BayesNet, Dag, DenseDistribution, joint_distribution
from bnidentity.decomposition import (
    Block,
    Factorization,
    conditional_factor_eval,
    decompose,
    factorized_probs,
    localize,
    neighborhood_factorization,
)
from bnidentity.errors import InvalidFactorization, ScopeMismatch

from conftest import random_net

# 1 - sqrt(0.45) - sqrt(0.05), evaluated in plain floats
H2_BERN_HALF_VS_09 = 0.10557280900008412


def bernoulli_pair(a, b):
    net = BayesNet(Dag.empty(2), (2, 2), (np.array([[1 - a, a]]), np.array([[1 - b, b]])))
    return joint_distribution(net)


class TestFactorization:
    def test_empty_graph(self):
        fact = neighborhood_factorization(Dag.empty(3))
        assert fact.blocks == (Block((0,)), Block((1,)), Block((2,)))

    def test_chain(self):
        fact = neighborhood_factorization(Dag.chain(3))
        assert fact.blocks == (Block((0,)), Block((1,), (0,)), Block((2,), (1,)))

    def test_star(self):
        fact = neighborhood_factorization(Dag.star(3))
        assert fact.blocks == (Block((0,)), Block((1,), (0,)), Block((2,), (0,)))

    def test_follows_topological_order(self):
        fact = neighborhood_factorization(Dag(3, ((1,), (2,), ())))
        assert [b.members for b in fact.blocks] == [(2,), (1,), (0,)]

    def test_overlap_rejected(self):
        with pytest.raises(InvalidFactorization):
            Factorization.from_pairs([((0, 1), ()), ((1,), (0,))])

    def test_conditioning_must_precede(self):
        with pytest.raises(InvalidFactorization):
            Factorization.from_pairs([((0,), ()), ((1,), (2,)), ((2,), ())])

    def test_coverage(self):
        fact = Factorization.from_pairs([((0,), ())])
        with pytest.raises(InvalidFactorization):
            fact.check_covers((0, 1))


class TestConditionalEval:
    def test_single_block(self, rng):
        dist = joint_distribution(random_net(Dag.chain(3), (2, 3, 2), rng))
        fact = Factorization.from_pairs([((0, 1, 2), ())])
        x = (1, 2, 0)
        assert conditional_factor_eval(dist, fact, x) == pytest.approx(dist[x])

    def test_product(self, rng):
        dist = joint_distribution(random_net(Dag.empty(3), (2, 2, 3), rng))
        fact = neighborhood_factorization(Dag.empty(3))
        for x in itertools.product(range(2), range(2), range(3)):
            assert conditional_factor_eval(dist, fact, x) == pytest.approx(dist[x], abs=1e-14)

    def test_random_dag_exhaustive(self, rng):
        dag = Dag.from_edges(5, [(0, 2), (1, 2), (2, 3), (1, 4), (3, 4)])
        net = random_net(dag, (2, 3, 2, 3, 2), rng)
        dist = joint_distribution(net)
        fact = neighborhood_factorization(dag)
        np.testing.assert_allclose(factorized_probs(dist, fact), dist.probs, atol=1e-14)

    def test_zero_mass_conditioning(self):
        cpts = (np.array([[1.0, 0.0]]), np.array([[0.3, 0.7], [0.5, 0.5]]))
        dist = joint_distribution(BayesNet(Dag.chain(2), (2, 2), cpts))
        fact = neighborhood_factorization(Dag.chain(2))
        assert conditional_factor_eval(dist, fact, (1, 0)) == 0.0


class TestDecompose:
    def test_identical(self, rng):
        dist = joint_distribution(random_net(Dag.chain(3), (2, 2, 2), rng))
        rep = decompose(dist, dist, neighborhood_factorization(Dag.chain(3)))
        assert rep.terms == (0.0, 0.0, 0.0) and rep.total_h_sq == 0.0 and rep.slack == 0.0

    def test_product_one_coordinate(self):
        p, q = bernoulli_pair(0.5, 0.5), bernoulli_pair(0.5, 0.9)
        rep = decompose(p, q, neighborhood_factorization(Dag.empty(2)))
        assert rep.terms[0] == pytest.approx(0.0, abs=1e-15)
        assert rep.terms[1] == pytest.approx(H2_BERN_HALF_VS_09, abs=1e-12)
        assert rep.total_h_sq == pytest.approx(H2_BERN_HALF_VS_09, abs=1e-12)
        assert rep.slack == pytest.approx(0.0, abs=1e-12)
        assert rep.argmax_block == 1

    def test_scope_mismatch(self):
        p = bernoulli_pair(0.5, 0.5)
        q = DenseDistribution((0,), (4,), np.full(4, 0.25))
        with pytest.raises(ScopeMismatch):
            decompose(p, q, neighborhood_factorization(Dag.empty(2)))

    def test_three_node_chain_slack(self, rng):
        dag = Dag.chain(3)
        fact = neighborhood_factorization(dag)
        for _ in range(300):
            p = joint_distribution(random_net(dag, (2, 2, 2), rng))
            q = joint_distribution(random_net(dag, (2, 2, 2), rng))
            assert decompose(p, q, fact).slack >= -1e-12

    def test_tv_bound_dominates(self, rng):
        dag = Dag.star(4)
        fact = neighborhood_factorization(dag)
        for _ in range(50):
            p = joint_distribution(random_net(dag, (3, 2, 2, 2), rng))
            q = joint_distribution(random_net(dag, (3, 2, 2, 2), rng))
            rep = decompose(p, q, fact)
            assert rep.total_tv <= rep.tv_bound + 1e-12


class TestLocalize:
    def test_identical(self):
        p = bernoulli_pair(0.5, 0.5)
        loc = localize(p, p, neighborhood_factorization(Dag.empty(2)), 0.1)
        assert not loc.premise_holds and loc.term == 0.0

    def test_bernoulli_example(self):
        loc = localize(bernoulli_pair(0.5, 0.5), bernoulli_pair(0.5, 0.9), neighborhood_factorization(Dag.empty(2)), 0.1)
        assert loc.block == 1 and loc.term == pytest.approx(0.1056, abs=1e-4)
        assert loc.threshold == pytest.approx(0.05) and loc.guaranteed

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6))
    def test_guarantee_on_chains(self, seed, n):
        rng = np.random.default_rng(seed)
        dag = Dag.chain(n)
        p = joint_distribution(random_net(dag, (2,) * n, rng, alpha=0.5))
        q = joint_distribution(random_net(dag, (2,) * n, rng, alpha=0.5))
        fact = neighborhood_factorization(dag)
        eps = max(1e-6, decompose(p, q, fact).total_h_sq * 0.9)
        loc = localize(p, q, fact, eps)
        assert loc.premise_holds and loc.term >= eps / n - 1e-15
