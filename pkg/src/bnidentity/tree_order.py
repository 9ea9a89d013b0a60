"""Node orderings for a pair of trees with small dependent sets.

Given a tree ``T`` and an ordering of its nodes, the dependent set of the
``i``-th node is the set of earlier nodes whose tree path to it meets no other
earlier node. :func:`order_two_trees` builds one ordering that keeps the union
of the dependent sets in both trees at five nodes or fewer, by maintaining
that every component of ``T \\ prefix`` is adjacent to at most two picked
nodes, with a single component (over both trees) allowed three.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .bn_core import Dag
from .decomposition import Block, Factorization
from .errors import InvalidModel, InvariantViolation, NodeInPrefix, NodeSetMismatch

MAX_PI_SIZE = 5


@dataclass(frozen=True)
class Tree:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    root: int = 0

    def __post_init__(self):
        adj = tuple(tuple(sorted(int(u) for u in nbrs)) for nbrs in self.adjacency)
        if len(adj) != self.n or self.n < 1:
            raise InvalidModel(f"adjacency has {len(adj)} entries for {self.n} nodes")
        edges = 0
        for v, nbrs in enumerate(adj):
            if v in nbrs:
                raise InvalidModel(f"self-loop at node {v}")
            if len(set(nbrs)) != len(nbrs):
                raise InvalidModel(f"repeated edge at node {v}")
            for u in nbrs:
                if not 0 <= u < self.n or v not in adj[u]:
                    raise InvalidModel(f"edge {v}-{u} is out of range or not symmetric")
            edges += len(nbrs)
        if edges != 2 * (self.n - 1):
            raise InvalidModel(f"a tree on {self.n} nodes needs {self.n - 1} edges, got {edges // 2}")
        if not 0 <= self.root < self.n:
            raise InvalidModel(f"root {self.root} out of range")
        object.__setattr__(self, "adjacency", adj)
        if -1 in self.parent[: self.root] + self.parent[self.root + 1 :]:
            raise InvalidModel("tree is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], root: int = 0) -> "Tree":
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidModel(f"edge {u}-{v} out of range for {n} nodes")
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, tuple(tuple(a) for a in adj), root)

    @classmethod
    def path(cls, n: int) -> "Tree":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def star(cls, n: int, center: int = 0) -> "Tree":
        return cls.from_edges(n, [(center, v) for v in range(n) if v != center])

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    @cached_property
    def _bfs(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        parent = [-1] * self.n
        depth = [-1] * self.n
        depth[self.root] = 0
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
        return tuple(parent), tuple(depth)

    @property
    def parent(self) -> tuple[int, ...]:
        """Parent of each node when rooted at ``root`` (``-1`` for the root and unreachable nodes)."""
        return self._bfs[0]

    @property
    def depth(self) -> tuple[int, ...]:
        return self._bfs[1]

    def lca(self, a: int, b: int) -> int:
        parent, depth = self.parent, self.depth
        while depth[a] > depth[b]:
            a = parent[a]
        while depth[b] > depth[a]:
            b = parent[b]
        while a != b:
            a, b = parent[a], parent[b]
        return a

    def to_dag(self) -> Dag:
        """Orient every edge away from the root."""
        return Dag(self.n, tuple(() if p < 0 else (p,) for p in self.parent))


def dependent_set(tree: Tree, prefix: Sequence[int], v: int) -> frozenset[int]:
    """Prefix nodes reachable from ``v`` without crossing another prefix node."""
    prefix_set = set(prefix)
    if v in prefix_set:
        raise NodeInPrefix(f"node {v} is already in the prefix")
    found = set()
    seen = {v}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in tree.adjacency[u]:
            if w in seen:
                continue
            seen.add(w)
            if w in prefix_set:
                found.add(w)
            else:
                queue.append(w)
    return frozenset(found)


class _Components:
    """Components of ``tree`` minus the picked nodes, with their boundaries.

    Picking a node only re-labels the component that contained it.
    """

    def __init__(self, tree: Tree):
        self.tree = tree
        self.picked = [False] * tree.n
        self.comp = [0] * tree.n
        self.members: dict[int, list[int]] = {0: list(range(tree.n))}
        self.boundary: dict[int, frozenset[int]] = {0: frozenset()}
        self._next = 1

    def pick(self, x: int) -> frozenset[int]:
        """Remove ``x``; return the boundary of the component it was in."""
        cid = self.comp[x]
        old_boundary = self.boundary.pop(cid)
        self.members.pop(cid)
        self.picked[x] = True
        self.comp[x] = -1
        adj = self.tree.adjacency
        for start in adj[x]:
            if self.picked[start] or self.comp[start] != cid:
                continue
            new = self._next
            self._next += 1
            piece = [start]
            bnd = set()
            self.comp[start] = new
            i = 0
            while i < len(piece):
                u = piece[i]
                i += 1
                for w in adj[u]:
                    if self.picked[w]:
                        bnd.add(w)
                    elif self.comp[w] == cid:
                        self.comp[w] = new
                        piece.append(w)
            self.members[new] = piece
            self.boundary[new] = frozenset(bnd)
        return old_boundary

    def choose(self, cid: int) -> int:
        """Next node inside component ``cid`` per the child-boundary case analysis."""
        tree = self.tree
        parent, depth = tree.parent, tree.depth
        members = self.members[cid]
        top = min(members, key=lambda u: (depth[u], u))
        above = parent[top]
        below = sorted(b for b in self.boundary[cid] if b != above)
        for b in below:
            if self.comp[parent[b]] != cid:
                raise InvariantViolation(f"boundary node {b} does not hang below component {cid}")
        if len(below) == 0:
            return min(members)
        if len(below) == 1:
            return parent[below[0]]
        if len(below) == 2:
            return tree.lca(below[0], below[1])
        if len(below) == 3:
            a, b, c = below
            candidates = {tree.lca(a, b), tree.lca(a, c), tree.lca(b, c)}
            return min(candidates, key=lambda u: (-depth[u], u))
        raise InvariantViolation(f"component {cid} has {len(below)} boundary nodes below it")


def _components_from_scratch(tree: Tree, prefix: set[int]) -> list[tuple[frozenset[int], frozenset[int]]]:
    seen = set(prefix)
    out = []
    for s in range(tree.n):
        if s in seen:
            continue
        seen.add(s)
        piece, bnd = [s], set()
        i = 0
        while i < len(piece):
            u = piece[i]
            i += 1
            for w in tree.adjacency[u]:
                if w in prefix:
                    bnd.add(w)
                elif w not in seen:
                    seen.add(w)
                    piece.append(w)
        out.append((frozenset(piece), frozenset(bnd)))
    return out


def _check_invariant(trackers: Sequence[_Components], prefix: set[int]) -> None:
    large = 0
    for tracker in trackers:
        fresh = _components_from_scratch(tracker.tree, prefix)
        tracked = {(frozenset(m), tracker.boundary[c]) for c, m in tracker.members.items()}
        if set(fresh) != tracked:
            raise InvariantViolation("incremental component bookkeeping diverged from recomputation")
        for _, bnd in fresh:
            if len(bnd) > 3:
                raise InvariantViolation(f"component boundary of size {len(bnd)}")
            large += len(bnd) == 3
    if large > 1:
        raise InvariantViolation(f"{large} components have boundary size 3")


@dataclass(frozen=True)
class OrderingResult:
    order: tuple[int, ...]
    dep_sets_p: tuple[frozenset[int], ...]
    dep_sets_q: tuple[frozenset[int], ...]
    pi_sets: tuple[frozenset[int], ...]

    @property
    def max_pi_size(self) -> int:
        return max((len(s) for s in self.pi_sets), default=0)


def order_two_trees(tp: Tree, tq: Tree, check_invariant: bool = False) -> OrderingResult:
    """Order the shared nodes of two trees so each dependent-set union has size <= 5.

    At every step the next node is drawn from the component whose boundary
    may reach three (or, if there is none, the component of ``tp`` holding the
    smallest unpicked node). With ``check_invariant`` the boundary invariant
    and the incremental bookkeeping are re-verified from scratch after each
    pick.
    """
    if tp.n != tq.n:
        raise NodeSetMismatch(f"trees have {tp.n} and {tq.n} nodes")
    trackers = (_Components(tp), _Components(tq))
    order, dep_p, dep_q, pis = [], [], [], []
    prefix: set[int] = set()
    for _ in range(tp.n):
        special = [
            (t, cid)
            for t, tracker in enumerate(trackers)
            for cid, bnd in tracker.boundary.items()
            if len(bnd) >= 3
        ]
        if special:
            t, cid = special[0]
        else:
            t = 0
            cid = trackers[0].comp[min(v for v in range(tp.n) if v not in prefix)]
        x = trackers[t].choose(cid)
        dp = trackers[0].pick(x)
        dq = trackers[1].pick(x)
        prefix.add(x)
        order.append(x)
        dep_p.append(dp)
        dep_q.append(dq)
        pis.append(dp | dq)
        if check_invariant:
            _check_invariant(trackers, prefix)
    return OrderingResult(tuple(order), tuple(dep_p), tuple(dep_q), tuple(pis))


def two_tree_factorization(tp: Tree, tq: Tree) -> Factorization:
    """Singleton blocks in the two-tree order, each conditioned on its dependent-set union."""
    result = order_two_trees(tp, tq)
    return Factorization(
        tuple(Block((v,), tuple(sorted(pi))) for v, pi in zip(result.order, result.pi_sets))
    )
