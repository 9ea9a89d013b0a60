"""Common factorizations and the per-block squared-Hellinger decomposition.

A :class:`Factorization` is an ordered list of blocks ``(S_l, Pi_l)``: the
``S_l`` partition the variables and each conditioning set ``Pi_l`` lies
inside the union of the earlier blocks. For two distributions that both
factorize as ``P(x_S1) * prod_l P(x_Sl | x_Pil)`` the joint squared Hellinger
distance is at most the sum of the squared Hellinger distances between the
``S_l + Pi_l`` marginals. :func:`decompose` computes both sides exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bn_core import Dag, DenseDistribution, marginal, topological_order
from .divergences import hellinger_sq, total_variation
from .errors import InvalidFactorization, ScopeMismatch


@dataclass(frozen=True)
class Block:
    members: tuple[int, ...]
    conditioning: tuple[int, ...] = ()

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.members) | set(self.conditioning)))


@dataclass(frozen=True)
class Factorization:
    blocks: tuple[Block, ...]

    def __post_init__(self):
        blocks = []
        seen: set[int] = set()
        for i, blk in enumerate(self.blocks):
            if not isinstance(blk, Block):
                blk = Block(*blk)
            members = tuple(sorted(int(v) for v in blk.members))
            cond = tuple(sorted(int(v) for v in blk.conditioning))
            if not members:
                raise InvalidFactorization(f"block {i} is empty")
            if len(set(members)) != len(members) or seen & set(members):
                raise InvalidFactorization(f"block {i} overlaps an earlier block")
            if not set(cond) <= seen:
                raise InvalidFactorization(
                    f"conditioning set {cond} of block {i} is not covered by earlier blocks"
                )
            seen |= set(members)
            blocks.append(Block(members, cond))
        if blocks and blocks[0].conditioning:
            raise InvalidFactorization("the first block cannot have a conditioning set")
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Iterable[int], Iterable[int]]]) -> "Factorization":
        return cls(tuple(Block(tuple(s), tuple(c)) for s, c in pairs))

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(v for blk in self.blocks for v in blk.members))

    def __len__(self) -> int:
        return len(self.blocks)

    def check_covers(self, scope: Sequence[int]) -> None:
        if self.variables != tuple(sorted(scope)):
            raise InvalidFactorization(
                f"blocks cover {self.variables}, distribution scope is {tuple(scope)}"
            )


def neighborhood_factorization(dag: Dag) -> Factorization:
    """Singleton blocks in topological order, each conditioned on its parents."""
    order = topological_order(dag)
    return Factorization(tuple(Block((v,), dag.parents[v]) for v in order))


def _block_conditionals(dist: DenseDistribution, blk: Block) -> np.ndarray:
    """``P(x_S | x_Pi)`` as a full-rank array over ``blk.variables``; 0 where ``P(x_Pi) = 0``."""
    joint = marginal(dist, blk.variables).table
    if not blk.conditioning:
        return joint
    variables = blk.variables
    cond_axes = tuple(i for i, v in enumerate(variables) if v not in blk.conditioning)
    denom = joint.sum(axis=cond_axes, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(denom > 0, joint / np.where(denom > 0, denom, 1.0), 0.0)
    return ratio


def factorized_probs(dist: DenseDistribution, fact: Factorization) -> np.ndarray:
    """Evaluate the factorized product at every assignment of ``dist.scope``.

    Returns a flat vector aligned with ``dist.probs``.
    """
    fact.check_covers(dist.scope)
    pos = {v: i for i, v in enumerate(dist.scope)}
    n = len(dist.scope)
    out = np.ones(dist.sizes, dtype=float)
    for blk in fact.blocks:
        factor = _block_conditionals(dist, blk)
        shape = [1] * n
        for v in blk.variables:
            shape[pos[v]] = dist.sizes[pos[v]]
        out = out * factor.reshape(shape)
    return out.ravel()


def conditional_factor_eval(dist: DenseDistribution, fact: Factorization, x: Sequence[int]) -> float:
    """``P(x_S1) * prod_{l>=2} P(x_Sl | x_Pil)`` at one full assignment ``x``.

    ``x`` lists values in ``dist.scope`` order. A conditional whose
    conditioning event has probability zero contributes a factor of 0.
    """
    fact.check_covers(dist.scope)
    if len(x) != len(dist.scope):
        raise InvalidFactorization("assignment length does not match the scope")
    value = dict(zip(dist.scope, (int(a) for a in x)))
    result = 1.0
    for blk in fact.blocks:
        joint = marginal(dist, blk.variables)
        num = joint[[value[v] for v in blk.variables]]
        if blk.conditioning:
            den = marginal(dist, blk.conditioning)[[value[v] for v in blk.conditioning]]
            if den <= 0:
                return 0.0
            num /= den
        result *= num
    return result


@dataclass(frozen=True)
class DecompositionReport:
    terms: tuple[float, ...]
    total_h_sq: float
    slack: float
    argmax_block: int
    total_tv: float
    tv_bound: float

    @property
    def term_sum(self) -> float:
        return float(sum(self.terms))


def _check_pair(p: DenseDistribution, q: DenseDistribution) -> None:
    if p.scope != q.scope or p.sizes != q.sizes:
        raise ScopeMismatch(f"P has scope {p.scope}/{p.sizes}, Q has {q.scope}/{q.sizes}")


def decompose(p: DenseDistribution, q: DenseDistribution, fact: Factorization) -> DecompositionReport:
    """Per-block squared Hellinger terms next to the exact joint value.

    ``slack`` is signed and is not clamped: it goes negative when P or Q does
    not actually respect ``fact``. ``tv_bound`` is the neighborhood TV bound
    ``sum_l TV(S_l + Pi_l) + sum_l TV(Pi_l)``, reported for comparison only.
    """
    _check_pair(p, q)
    fact.check_covers(p.scope)
    terms = []
    tv_bound = 0.0
    for blk in fact.blocks:
        pm, qm = marginal(p, blk.variables), marginal(q, blk.variables)
        terms.append(hellinger_sq(pm, qm))
        tv_bound += total_variation(pm, qm)
        if blk.conditioning:
            tv_bound += total_variation(marginal(p, blk.conditioning), marginal(q, blk.conditioning))
    total = hellinger_sq(p, q)
    return DecompositionReport(
        terms=tuple(terms),
        total_h_sq=total,
        slack=float(sum(terms)) - total,
        argmax_block=int(np.argmax(terms)) if terms else -1,
        total_tv=total_variation(p, q),
        tv_bound=tv_bound,
    )


@dataclass(frozen=True)
class Localization:
    block: int
    term: float
    threshold: float
    premise_holds: bool

    @property
    def guaranteed(self) -> bool:
        """True when the returned block provably carries at least ``eps / L``."""
        return self.premise_holds and self.term >= self.threshold


def localize(p: DenseDistribution, q: DenseDistribution, fact: Factorization, eps: float) -> Localization:
    """Find a block whose marginal H^2 is at least ``eps / L``.

    ``eps`` is a threshold on the joint squared Hellinger distance. The
    largest term is always returned; ``premise_holds`` records whether
    ``H^2(P, Q) >= eps`` so callers can tell a guarantee from a best effort.
    """
    report = decompose(p, q, fact)
    k = report.argmax_block
    return Localization(
        block=k,
        term=report.terms[k],
        threshold=eps / len(fact),
        premise_holds=report.total_h_sq >= eps,
    )
