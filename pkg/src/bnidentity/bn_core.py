"""Discrete Bayesian networks: structure, CPTs, exact enumeration and sampling.

Assignments over a set of variables are encoded in mixed radix with the
smallest variable index as the most significant digit. This matches numpy's
C-order ravelling of an array whose axes follow ascending variable index, and
every module in the package relies on it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleDetected, DomainTooLarge, InvalidModel, UnknownVariable
from .seeding import derive_rng

CPT_TOL = 1e-12
JOINT_TOL = 1e-10
DEFAULT_DOMAIN_CAP = 2**24


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph given by per-node parent lists.

    Parent lists are stored sorted ascending; CPT rows are indexed by the
    parents' joint assignment in that order.
    """

    n: int
    parents: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 0 or len(self.parents) != self.n:
            raise InvalidModel(f"expected {self.n} parent lists, got {len(self.parents)}")
        normalized = []
        for v, pa in enumerate(self.parents):
            pa = tuple(int(u) for u in pa)
            if len(set(pa)) != len(pa):
                raise InvalidModel(f"node {v} has duplicate parents {pa}")
            if v in pa:
                raise InvalidModel(f"node {v} lists itself as a parent")
            if any(u < 0 or u >= self.n for u in pa):
                raise InvalidModel(f"node {v} has out-of-range parent in {pa}")
            normalized.append(tuple(sorted(pa)))
        object.__setattr__(self, "parents", tuple(normalized))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.n:
                raise InvalidModel("label count does not match node count")
            object.__setattr__(self, "labels", labels)
        topological_order(self)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], labels=None) -> "Dag":
        parents: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            parents[v].append(u)
        return cls(n, tuple(tuple(p) for p in parents), labels)

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls(n, tuple(() for _ in range(n)))

    @classmethod
    def chain(cls, n: int) -> "Dag":
        return cls(n, tuple(() if v == 0 else (v - 1,) for v in range(n)))

    @classmethod
    def star(cls, n: int, center: int = 0) -> "Dag":
        return cls(n, tuple(() if v == center else (center,) for v in range(n)))

    @property
    def max_in_degree(self) -> int:
        return max((len(p) for p in self.parents), default=0)

    def names(self) -> tuple[str, ...]:
        return self.labels if self.labels is not None else tuple(f"X{v}" for v in range(self.n))


def topological_order(dag: Dag) -> tuple[int, ...]:
    """Kahn's algorithm; among ready nodes the smallest index goes first."""
    children: list[list[int]] = [[] for _ in range(dag.n)]
    indeg = [len(p) for p in dag.parents]
    for v, pa in enumerate(dag.parents):
        for u in pa:
            children[u].append(v)
    ready = [v for v in range(dag.n) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != dag.n:
        stuck = sorted(set(range(dag.n)) - set(order))
        raise CycleDetected(f"no topological order exists; nodes on or after a cycle: {stuck}")
    return tuple(order)


@dataclass(frozen=True)
class BayesNet:
    """A DAG with one conditional probability table per node.

    ``cpts[v]`` has shape ``(prod(arities[u] for u in parents[v]), arities[v])``;
    row ``r`` is the distribution of ``X_v`` given the parent assignment whose
    mixed-radix code is ``r``.
    """

    dag: Dag
    arities: tuple[int, ...]
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        dag = self.dag
        arities = tuple(int(k) for k in self.arities)
        if len(arities) != dag.n or any(k < 1 for k in arities):
            raise InvalidModel(f"need {dag.n} positive arities, got {self.arities}")
        if len(self.cpts) != dag.n:
            raise InvalidModel(f"need {dag.n} CPTs, got {len(self.cpts)}")
        cpts = []
        for v, table in enumerate(self.cpts):
            table = np.array(table, dtype=float)
            rows = math.prod(arities[u] for u in dag.parents[v])
            if table.ndim == 1 and rows == 1:
                table = table[None, :]
            if table.shape != (rows, arities[v]):
                raise InvalidModel(
                    f"CPT of node {v} has shape {table.shape}, expected {(rows, arities[v])}"
                )
            if not np.all(np.isfinite(table)) or np.any(table < 0):
                raise InvalidModel(f"CPT of node {v} has negative or non-finite entries")
            sums = table.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > CPT_TOL):
                bad = int(np.argmax(np.abs(sums - 1.0)))
                raise InvalidModel(f"CPT row {bad} of node {v} sums to {sums[bad]!r}")
            cpts.append(_frozen(table))
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "cpts", tuple(cpts))

    @property
    def n(self) -> int:
        return self.dag.n

    def domain_size(self) -> int:
        return math.prod(self.arities)


@dataclass(frozen=True)
class DenseDistribution:
    """Explicit probability vector over the product domain of ``scope``.

    ``scope`` is kept in ascending order so that the flat index of an
    assignment is its mixed-radix code.
    """

    scope: tuple[int, ...]
    sizes: tuple[int, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        sizes = tuple(int(k) for k in self.sizes)
        if len(scope) != len(sizes):
            raise InvalidModel("scope and sizes differ in length")
        if len(set(scope)) != len(scope):
            raise InvalidModel(f"duplicate variables in scope {scope}")
        probs = np.array(self.probs, dtype=float).ravel()
        if probs.size != math.prod(sizes):
            raise InvalidModel(f"probability vector has length {probs.size}, expected {math.prod(sizes)}")
        if list(scope) != sorted(scope):
            perm = np.argsort(scope)
            table = probs.reshape(sizes).transpose(perm)
            scope = tuple(scope[i] for i in perm)
            sizes = tuple(sizes[i] for i in perm)
            probs = table.ravel()
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidModel("probabilities must be finite and nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > JOINT_TOL:
            raise InvalidModel(f"probabilities sum to {total!r}")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def table(self) -> np.ndarray:
        """Probabilities reshaped to one axis per scope variable."""
        return self.probs.reshape(self.sizes)

    def index_of(self, assignment: Sequence[int]) -> int:
        if len(assignment) != len(self.scope):
            raise InvalidModel("assignment length does not match scope")
        if not self.scope:
            return 0
        return int(np.ravel_multi_index(tuple(int(a) for a in assignment), self.sizes))

    def __getitem__(self, assignment: Sequence[int]) -> float:
        return float(self.probs[self.index_of(assignment)])


@dataclass(frozen=True)
class SampleSet:
    """I.i.d. draws, one row per sample and one column per variable."""

    data: np.ndarray = field(repr=False)
    arities: tuple[int, ...]

    def __post_init__(self):
        arities = tuple(int(k) for k in self.arities)
        data = np.asarray(self.data)
        if data.size == 0:
            data = data.reshape(0, len(arities))
        data = np.array(data, dtype=np.int64)
        if data.ndim != 2 or data.shape[1] != len(arities):
            raise InvalidModel(f"sample matrix of shape {data.shape} does not match {len(arities)} columns")
        if data.shape[0] and (np.any(data < 0) or np.any(data >= np.array(arities))):
            raise InvalidModel("sample entry outside its column's alphabet")
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "data", _frozen(data))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


def _check_subset(subset: Iterable[int], scope: Sequence[int]) -> tuple[int, ...]:
    subset = tuple(sorted(set(int(v) for v in subset)))
    missing = [v for v in subset if v not in scope]
    if missing:
        raise UnknownVariable(f"variables {missing} are not in scope {tuple(scope)}")
    return subset


def joint_distribution(net: BayesNet, cap: int = DEFAULT_DOMAIN_CAP) -> DenseDistribution:
    """Enumerate ``P(x) = prod_v P(x_v | x_parents)`` over the full domain."""
    size = net.domain_size()
    if size > cap:
        raise DomainTooLarge(f"joint domain has {size} cells, cap is {cap}")
    n = net.n
    table = np.ones(net.arities, dtype=float)
    for v in range(n):
        pa = net.dag.parents[v]
        axes = list(pa) + [v]
        factor = net.cpts[v].reshape([net.arities[u] for u in axes])
        perm = np.argsort(axes)
        factor = factor.transpose(perm)
        shape = [1] * n
        for u in axes:
            shape[u] = net.arities[u]
        table = table * factor.reshape(shape)
    return DenseDistribution(tuple(range(n)), net.arities, table.ravel())


def marginal(dist: DenseDistribution, subset: Iterable[int]) -> DenseDistribution:
    subset = _check_subset(subset, dist.scope)
    drop = tuple(i for i, v in enumerate(dist.scope) if v not in subset)
    summed = dist.table.sum(axis=drop) if drop else dist.table
    sizes = tuple(dist.sizes[i] for i, v in enumerate(dist.scope) if v in subset)
    return DenseDistribution(subset, sizes, np.atleast_1d(summed).ravel())


def sample(net: BayesNet, count: int, seed: int) -> SampleSet:
    """Ancestral sampling in topological order; reproducible given ``seed``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = derive_rng(seed, "bn-sample")
    data = np.zeros((count, net.n), dtype=np.int64)
    for v in topological_order(net.dag):
        pa = net.dag.parents[v]
        if pa:
            rows = np.ravel_multi_index(tuple(data[:, u] for u in pa), [net.arities[u] for u in pa])
        else:
            rows = np.zeros(count, dtype=np.int64)
        cum = np.cumsum(net.cpts[v], axis=1)[:, :-1]
        u = rng.random(count)
        data[:, v] = (cum[rows] <= u[:, None]).sum(axis=1)
    return SampleSet(data, net.arities)


def encode(data: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    """Mixed-radix codes of the rows of ``data`` (first column most significant)."""
    if data.shape[1] == 0:
        return np.zeros(data.shape[0], dtype=np.int64)
    return np.ravel_multi_index(tuple(data.T), tuple(sizes))


def empirical_counts(samples: SampleSet, subset: Iterable[int]) -> np.ndarray:
    subset = _check_subset(subset, range(samples.cols))
    sizes = [samples.arities[v] for v in subset]
    codes = encode(samples.data[:, list(subset)], sizes)
    return np.bincount(codes, minlength=math.prod(sizes)).astype(np.int64)
