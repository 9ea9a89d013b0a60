import itertools

import numpy as np
import pytest

from bnidentity.bn_core import BayesNet, Dag


def random_cpts(dag, arities, rng, alpha=1.0):
    cpts = []
    for v in range(dag.n):
        rows = int(np.prod([arities[u] for u in dag.parents[v]], dtype=np.int64))
        cpts.append(rng.dirichlet(np.full(arities[v], alpha), size=rows))
    return tuple(cpts)


def random_net(dag, arities, rng, alpha=1.0):
    return BayesNet(dag, tuple(arities), random_cpts(dag, arities, rng, alpha))


def random_tree_edges(n, rng):
    """Uniform-ish random labelled tree: each node attaches to an earlier one after a shuffle."""
    perm = rng.permutation(n)
    return [(int(perm[i]), int(perm[rng.integers(i)])) for i in range(1, n)]


def brute_joint(net):
    """Joint probabilities by looping over every assignment (independent of the vectorized path)."""
    out = []
    for x in itertools.product(*(range(k) for k in net.arities)):
        prob = 1.0
        for v in range(net.n):
            row = 0
            for u in net.dag.parents[v]:
                row = row * net.arities[u] + x[u]
            prob *= net.cpts[v][row, x[v]]
        out.append(prob)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain3():
    return Dag.chain(3)


ACCEPTANCE_LINES = []


def record_criterion(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
