"""Abelian embeddings of support sets.

An embedding sends each label ``a`` of coordinate ``i`` to a group element
``sigma_i(a)`` so that every support tuple sums to zero.  The universal one
lives in the cokernel ``Z^N / L`` where ``L`` is the row lattice of the
relation matrix (one row per support tuple, one column per (coordinate,
label) pair).  Group elements are integer tuples: torsion coordinates first
(reduced modulo their factor) followed by free coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping

from .errors import InvalidInput
from .intlat import SNFDecomposition, lattice_membership, rational_nullspace, smith_normal_form
from .structure import BipartitionWitness, SupportSet, is_pairwise_connected, verify_bipartition


@dataclass(frozen=True)
class IntegerMatrix:
    rows: tuple[tuple[int, ...], ...]
    columns: tuple[tuple[int, Hashable], ...]

    def as_lists(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


@dataclass(frozen=True)
class AbelianGroupPresentation:
    free_rank: int
    torsion_factors: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.torsion_factors) + self.free_rank

    def reduce(self, v) -> tuple[int, ...]:
        t = len(self.torsion_factors)
        return tuple(x % d for x, d in zip(v[:t], self.torsion_factors)) + tuple(v[t:])

    def add(self, *vs) -> tuple[int, ...]:
        return self.reduce([sum(xs) for xs in zip(*vs)] if vs else [0] * self.dimension)

    def is_zero(self, v) -> bool:
        return not any(self.reduce(v))

    def describe(self) -> str:
        parts = [f"Z/{d}" for d in self.torsion_factors] + ["Z"] * self.free_rank
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class EmbeddingWitness:
    group: AbelianGroupPresentation
    sigma: tuple[Mapping[Hashable, tuple[int, ...]], ...]
    trivial: bool = False

    def as_dict(self) -> dict:
        return {
            "group": {"free_rank": self.group.free_rank, "torsion": list(self.group.torsion_factors)},
            "sigma": [[[a, list(v)] for a, v in m.items()] for m in self.sigma],
            "trivial": self.trivial,
        }


def relation_matrix(s: SupportSet) -> IntegerMatrix:
    columns = tuple((i, a) for i, A in enumerate(s.alphabets) for a in A)
    col = {c: t for t, c in enumerate(columns)}
    rows = []
    for tup in s.sorted_tuples():
        row = [0] * len(columns)
        for i, a in enumerate(tup):
            row[col[(i, a)]] = 1
        rows.append(tuple(row))
    return IntegerMatrix(tuple(rows), columns)


def verify_witness(s: SupportSet, w: EmbeddingWitness, require_nontrivial: bool = True) -> bool:
    g = w.group
    for tup in s.tuples:
        if not g.is_zero(g.add(*(w.sigma[i][a] for i, a in enumerate(tup)))):
            return False
    if not require_nontrivial:
        return True
    return any(len({g.reduce(m[a]) for a in s.alphabets[i]}) > 1 for i, m in enumerate(w.sigma))


def nontrivial_differences(s: SupportSet, m: IntegerMatrix | None = None) -> list[tuple[int, Hashable, Hashable]]:
    """Pairs (i, a, a') with e_(i,a) - e_(i,a') outside the row lattice."""
    m = m or relation_matrix(s)
    col = {c: t for t, c in enumerate(m.columns)}
    basis = m.as_lists()
    out = []
    for i, A in enumerate(s.alphabets):
        for a in A[1:]:
            v = [0] * len(m.columns)
            v[col[(i, A[0])]] = 1
            v[col[(i, a)]] = -1
            if not lattice_membership(basis, v):
                out.append((i, A[0], a))
    return out


def has_nontrivial_embedding(s: SupportSet) -> bool:
    return bool(nontrivial_differences(s))


def universal_embedding(s: SupportSet) -> EmbeddingWitness:
    """The universal embedding into Z^N / L, presented through Smith normal form.

    With ``U M V = D`` the change of basis ``x -> x V`` sends ``L`` onto the
    lattice spanned by ``d_t e_t``, so ``sigma_i(a)`` is row ``(i, a)`` of
    ``V`` with unit factors dropped.  Triviality is decided separately by the
    difference-vector criterion.
    """
    m = relation_matrix(s)
    snf: SNFDecomposition = smith_normal_form(m.as_lists())
    snf.check(m.as_lists())
    factors = snf.factors
    n = len(m.columns)
    keep = [t for t, d in enumerate(factors) if d > 1]
    free = list(range(len(factors), n))
    group = AbelianGroupPresentation(len(free), tuple(factors[t] for t in keep))
    vecs = [tuple(snf.V[c][t] for t in keep) + tuple(snf.V[c][t] for t in free) for c in range(n)]
    vecs = [group.reduce(v) for v in vecs]
    tors = len(keep)
    for f in range(len(free)):
        first = next((v[tors + f] for v in vecs if v[tors + f]), 0)
        if first < 0:
            vecs = [v[: tors + f] + (-v[tors + f],) + v[tors + f + 1 :] for v in vecs]
    sigma: list[dict] = [dict() for _ in s.alphabets]
    for (i, a), v in zip(m.columns, vecs):
        sigma[i][a] = v
    trivial = not nontrivial_differences(s, m)
    return EmbeddingWitness(group, tuple(sigma), trivial)


def has_Z_embedding(s: SupportSet) -> EmbeddingWitness | None:
    """A non-constant integer-valued embedding, if one exists.

    Solutions of ``M sigma = 0`` always contain the constant-per-block ones
    (``c_i`` on block ``i`` with ``sum c_i = 0``).  Imposing equal block sums
    removes exactly that subspace; anything left is a genuine witness.
    """
    m = relation_matrix(s)
    n = len(m.columns)
    blocks = [[t for t, (i, _) in enumerate(m.columns) if i == b] for b in range(s.k)]
    extra = []
    for b in range(1, s.k):
        row = [0] * n
        for t in blocks[0]:
            row[t] += 1
        for t in blocks[b]:
            row[t] -= 1
        extra.append(row)
    kernel = rational_nullspace(m.as_lists() + extra, n)
    if not kernel:
        return None
    vec = kernel[0]
    scale = math.lcm(*(x.denominator for x in vec))
    ints = [int(x * scale) for x in vec]
    g = math.gcd(*ints)
    ints = [x // g for x in ints]
    first_diff = next(
        (ints[blk[t]] - ints[blk[0]] for blk in blocks for t in range(1, len(blk)) if ints[blk[t]] != ints[blk[0]]),
        0,
    )
    if first_diff < 0:
        ints = [-x for x in ints]
    group = AbelianGroupPresentation(1, ())
    sigma: list[dict] = [dict() for _ in s.alphabets]
    for (i, a), x in zip(m.columns, ints):
        sigma[i][a] = (x,)
    w = EmbeddingWitness(group, tuple(sigma))
    assert verify_witness(s, w)
    return w


def bipartition_embedding_witness(s: SupportSet, i: int, j: int, partition) -> EmbeddingWitness:
    """A Z/2 witness from a disconnected (i, j)-projection."""
    left, right = (frozenset(p) for p in partition)
    w = BipartitionWitness(i, j, left, right)
    if not verify_bipartition(s, w):
        raise InvalidInput("partition does not certify a disconnected projection")
    group = AbelianGroupPresentation(0, (2,))
    sigma = []
    for c, A in enumerate(s.alphabets):
        part = left if c == i else right if c == j else frozenset()
        sigma.append({a: (int(a in part),) for a in A})
    wit = EmbeddingWitness(group, tuple(sigma))
    assert verify_witness(s, wit)
    return wit


def extend_from_marginal(s: SupportSet, coords: tuple[int, ...], w: EmbeddingWitness) -> EmbeddingWitness:
    """Zero-extend a witness for the projection onto ``coords`` to all of ``s``."""
    zero = (0,) * w.group.dimension
    pos = {c: t for t, c in enumerate(coords)}
    sigma = tuple(
        dict(w.sigma[pos[c]]) if c in pos else {a: zero for a in A} for c, A in enumerate(s.alphabets)
    )
    return EmbeddingWitness(w.group, sigma, w.trivial)


@dataclass(frozen=True)
class MarginalReport:
    pairwise_connected: bool
    marginal_free: tuple[bool, ...]
    holds: bool

    def as_dict(self) -> dict:
        return {
            "pairwise_connected": self.pairwise_connected,
            "marginal_without_embedding": list(self.marginal_free),
            "holds": self.holds,
        }


def check_marginal_condition(s: SupportSet) -> MarginalReport:
    pairwise, _ = is_pairwise_connected(s)
    free = tuple(not has_nontrivial_embedding(s.marginal(i)) for i in range(s.k))
    return MarginalReport(pairwise, free, pairwise and sum(free) >= 2)


def marginal_pairwise_scan(supports) -> list[SupportSet]:
    """Supports where three (k-1)-marginals lack embeddings yet pairwise connectivity fails."""
    bad = []
    for s in supports:
        free = [not has_nontrivial_embedding(s.marginal(i)) for i in range(s.k)]
        if sum(free) >= 3 and not is_pairwise_connected(s)[0]:
            bad.append(s)
    return bad
