"""Connectivity classifiers for support sets.

Vertex sets always include every alphabet label, so a label that never
occurs in the support is an isolated vertex and disconnects its graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import networkx as nx

from .errors import InvalidInput


@dataclass(frozen=True)
class SupportSet:
    alphabets: tuple[tuple[Hashable, ...], ...]
    tuples: frozenset

    def __post_init__(self):
        if not self.tuples:
            raise InvalidInput("support set is empty")
        k = len(self.alphabets)
        for t in self.tuples:
            if len(t) != k or any(x not in set(A) for x, A in zip(t, self.alphabets)):
                raise InvalidInput(f"tuple {t!r} is outside the declared alphabets")

    @classmethod
    def of(cls, tuples: Iterable[Sequence], alphabets: Sequence[Sequence] | None = None) -> "SupportSet":
        ts = frozenset(tuple(t) for t in tuples)
        if alphabets is None:
            if not ts:
                raise InvalidInput("support set is empty")
            k = len(next(iter(ts)))
            alphabets = [sorted({t[i] for t in ts}) for i in range(k)]
        return cls(tuple(tuple(A) for A in alphabets), ts)

    @property
    def k(self) -> int:
        return len(self.alphabets)

    def sorted_tuples(self) -> list[tuple]:
        pos = [{a: t for t, a in enumerate(A)} for A in self.alphabets]
        return sorted(self.tuples, key=lambda t: tuple(p[x] for p, x in zip(pos, t)))

    def project(self, coords: Sequence[int]) -> "SupportSet":
        return SupportSet(
            tuple(self.alphabets[c] for c in coords),
            frozenset(tuple(t[c] for c in coords) for t in self.tuples),
        )

    def marginal(self, i: int) -> "SupportSet":
        """The support projected away from coordinate ``i``."""
        return self.project([c for c in range(self.k) if c != i])


def support_of(game) -> SupportSet:
    return SupportSet(game.question_alphabets, frozenset(q for q, _ in game.support))


@dataclass(frozen=True)
class BipartiteProjectionGraph:
    left: tuple
    right: tuple
    edges: frozenset

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(("L", a) for a in self.left)
        g.add_nodes_from(("R", b) for b in self.right)
        g.add_edges_from((("L", a), ("R", b)) for a, b in self.edges)
        return g


@dataclass(frozen=True)
class BipartitionWitness:
    """Coordinates (i, j) and the first component's label sets on each side."""

    i: int
    j: int
    left_part: frozenset
    right_part: frozenset


def pairwise_projection(s: SupportSet, i: int, j: int) -> BipartiteProjectionGraph:
    if i == j or not (0 <= i < s.k and 0 <= j < s.k):
        raise InvalidInput(f"bad coordinate pair ({i}, {j})")
    return BipartiteProjectionGraph(s.alphabets[i], s.alphabets[j], frozenset((t[i], t[j]) for t in s.tuples))


def is_pairwise_connected(s: SupportSet) -> tuple[bool, BipartitionWitness | None]:
    for i, j in itertools.combinations(range(s.k), 2):
        proj = pairwise_projection(s, i, j)
        g = proj.graph()
        start = ("L", proj.left[0])
        comp = nx.node_connected_component(g, start)
        if len(comp) != g.number_of_nodes():
            return False, BipartitionWitness(
                i, j,
                frozenset(v for side, v in comp if side == "L"),
                frozenset(v for side, v in comp if side == "R"),
            )
    return True, None


def verify_bipartition(s: SupportSet, w: BipartitionWitness) -> bool:
    """Every (i, j)-projection lies in L1 x R1 or in L2 x R2, with a proper split."""
    Li, Rj = set(s.alphabets[w.i]), set(s.alphabets[w.j])
    if not (w.left_part <= Li and w.right_part <= Rj):
        return False
    if not w.left_part and not w.right_part:
        return False
    if w.left_part == Li and w.right_part == Rj:
        return False
    return all((t[w.i] in w.left_part) == (t[w.j] in w.right_part) for t in s.tuples)


def connection_graph(s: SupportSet) -> nx.Graph:
    g = nx.Graph()
    ts = s.sorted_tuples()
    g.add_nodes_from(ts)
    for a, b in itertools.combinations(ts, 2):
        if sum(x != y for x, y in zip(a, b)) == 1:
            g.add_edge(a, b)
    return g


def coordinate_graph(s: SupportSet, j: int) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(s.alphabets[j])
    by_rest: dict[tuple, list] = {}
    for t in s.tuples:
        by_rest.setdefault(t[:j] + t[j + 1 :], []).append(t[j])
    for labels in by_rest.values():
        g.add_edges_from(itertools.combinations(sorted(labels, key=repr), 2))
    return g


def full_projections(s: SupportSet) -> bool:
    return all({t[i] for t in s.tuples} == set(s.alphabets[i]) for i in range(s.k))


def is_connected(s: SupportSet) -> bool:
    """Connection graph connected, with every alphabet label in use."""
    return full_projections(s) and nx.is_connected(connection_graph(s))


def is_coordinatewise_connected(s: SupportSet) -> tuple[bool, tuple[bool, ...]]:
    flags = tuple(nx.is_connected(coordinate_graph(s, j)) for j in range(s.k))
    return all(flags), flags


@dataclass(frozen=True)
class StructureReport:
    connected: bool
    coordinatewise_connected: bool
    pairwise_connected: bool
    full_projections: bool
    coordinate_flags: tuple[bool, ...]
    bipartition: BipartitionWitness | None
    components: tuple[tuple[tuple, ...], ...]

    def as_dict(self) -> dict:
        out = {
            "connected": self.connected,
            "coordinatewise_connected": self.coordinatewise_connected,
            "pairwise_connected": self.pairwise_connected,
            "full_projections": self.full_projections,
            "coordinate_flags": list(self.coordinate_flags),
            "connection_components": len(self.components),
        }
        if self.bipartition is not None:
            w = self.bipartition
            out["bipartition"] = {
                "coordinates": [w.i, w.j],
                "left_part": sorted(w.left_part, key=repr),
                "right_part": sorted(w.right_part, key=repr),
            }
        return out


def classify(s: SupportSet) -> StructureReport:
    pairwise, witness = is_pairwise_connected(s)
    coordwise, flags = is_coordinatewise_connected(s)
    comps = tuple(
        tuple(sorted(c, key=repr)) for c in sorted(nx.connected_components(connection_graph(s)), key=lambda c: repr(min(c, key=repr)))
    )
    connected = is_connected(s)
    if connected and not coordwise:
        raise AssertionError("connected support must be coordinate-wise connected")
    return StructureReport(connected, coordwise, pairwise, full_projections(s), flags, witness, comps)
