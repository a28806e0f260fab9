"""Greedy hard-coordinate chain and the inductive repetition bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapExceeded, InvalidInput
from .game import Game, ProductStrategy, coordinate_question

DEFAULT_CAP = 10**6


@dataclass
class ChainNode:
    prefix: tuple  # ((coordinate, (question, answer)), ...)
    mass: Fraction
    next_coordinate: int | None
    win_probabilities: tuple[Fraction, ...]  # per coordinate, given the prefix


@dataclass
class HardCoordinateChain:
    n: int
    win_prefix: list[Fraction]  # Pr[W_{<=k}] for k = 0..n
    nodes: list[ChainNode]
    path: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "win_prefix": [str(p) for p in self.win_prefix],
            "path": self.path,
            "nodes": len(self.nodes),
        }


class _Table:
    def __init__(self, g_rep: Game, s: ProductStrategy, cap: int):
        if g_rep.base is None:
            raise InvalidInput("expected a repeated game")
        if s.arity != g_rep.repetitions or len(s.tables) != g_rep.num_players:
            raise InvalidInput("strategy arity does not match the game")
        if len(g_rep.support) > cap:
            raise CapExceeded("repeated support", len(g_rep.support), cap)
        self.n = g_rep.repetitions
        base = g_rep.base
        self.rows = []
        for q, p in g_rep.support:
            a = s.answers(q)
            zs = tuple((coordinate_question(q, c), coordinate_question(a, c)) for c in range(self.n))
            wins = tuple(bool(base.predicate(x, b)) for x, b in zs)
            self.rows.append((p, zs, wins))

    def wins_given(self, rows: list) -> tuple[Fraction, tuple[Fraction, ...]]:
        mass = sum((r[0] for r in rows), Fraction(0))
        return mass, tuple(sum((r[0] for r in rows if r[2][c]), Fraction(0)) / mass for c in range(self.n))


def greedy_hard_chain(g_rep: Game, s: ProductStrategy, cap: int = DEFAULT_CAP) -> HardCoordinateChain:
    """Exact chain: each realized winning prefix picks its hardest remaining coordinate.

    Ties go to the lowest coordinate.  Only prefixes on which every chosen
    coordinate was won are expanded, since W_{<=k} is determined by them.
    """
    tab = _Table(g_rep, s, cap)
    n = tab.n
    win = [Fraction(0)] * (n + 1)
    nodes: list[ChainNode] = []
    stack = [((), tab.rows, ())]
    while stack:
        prefix, rows, used = stack.pop()
        mass, probs = tab.wins_given(rows)
        win[len(used)] += mass
        if len(used) == n:
            nodes.append(ChainNode(prefix, mass, None, probs))
            continue
        J = min((c for c in range(n) if c not in used), key=lambda c: (probs[c], c))
        nodes.append(ChainNode(prefix, mass, J, probs))
        branches: dict = {}
        for r in rows:
            if r[2][J]:
                branches.setdefault(r[1][J], []).append(r)
        for z in sorted(branches, key=repr, reverse=True):
            stack.append((prefix + ((J, z),), branches[z], used + (J,)))
    nodes.sort(key=lambda nd: (len(nd.prefix), repr(nd.prefix)))
    path, node = [], nodes[0]
    while node.next_coordinate is not None:
        path.append(node.next_coordinate)
        children = [nd for nd in nodes if len(nd.prefix) == len(node.prefix) + 1 and nd.prefix[:-1] == node.prefix]
        if not children:
            break
        node = max(children, key=lambda nd: nd.mass)
    return HardCoordinateChain(n, win, nodes, path)


def parrep_bound_from_criterion(alpha: float, epsilon: float, qsize: int, asize: int) -> float:
    """(1 - epsilon/2) ** (log2(1/alpha) / (2 log2(4 qsize asize)))."""
    if not 0 < alpha <= 1 or not 0 < epsilon <= 1:
        raise InvalidInput("need alpha and epsilon in (0, 1]")
    if qsize < 1 or asize < 1:
        raise InvalidInput("alphabet sizes must be positive")
    return (1 - epsilon / 2) ** (math.log2(1 / alpha) / (2 * math.log2(4 * qsize * asize)))


def chain_length(alpha: float, qsize: int, asize: int) -> int:
    """floor(log2(1/alpha) / log2(4 qsize asize)), the depth the decay is claimed for."""
    return math.floor(math.log2(1 / alpha) / math.log2(4 * qsize * asize))


def game_sizes(base: Game) -> tuple[int, int]:
    return (
        math.prod(len(X) for X in base.question_alphabets),
        math.prod(len(A) for A in base.answer_alphabets),
    )


@dataclass
class ScanResult:
    family: str
    alpha: Fraction
    events: list[tuple[str, Fraction, Fraction, int]]  # (label, mass, min_i win, argmin i)
    worst: Fraction  # max over events of min_i Pr[Win_i | E]
    best: Fraction  # min over events of the same
    witness: str

    @property
    def certified_epsilon(self) -> Fraction:
        return 1 - self.worst

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": str(self.alpha),
            "events": len(self.events),
            "max_min_win": str(self.worst),
            "min_min_win": str(self.best),
            "certified_epsilon": str(self.certified_epsilon),
            "witness": self.witness,
        }


def criterion_hypothesis_scan(
    g_rep: Game,
    s: ProductStrategy,
    alpha,
    family: str = "tuple",
    max_depth: int | None = None,
    cap: int = DEFAULT_CAP,
) -> ScanResult:
    """Scan min_i Pr[Win_i | E] over an enumerable family of product events of mass >= alpha.

    Families: ``full`` (the whole space), ``single`` (one coordinate's
    question and answer fixed) and ``tuple`` (the realized winning prefixes
    of the greedy chain, up to ``max_depth`` chosen coordinates; by default
    m - 1 with m = chain_length, the depth the induction uses).  The
    hypothesis holds on the family with
    epsilon = 1 - max over events of min_i Pr[Win_i | E].
    """
    alpha = Fraction(alpha)
    if alpha > 1:
        raise InvalidInput("alpha > 1 leaves the family empty")
    tab = _Table(g_rep, s, cap)
    n = tab.n
    candidates: list[tuple[str, list]] = []
    if family == "full":
        candidates.append(("full", tab.rows))
    elif family == "single":
        groups: dict = {}
        for r in tab.rows:
            for c in range(n):
                groups.setdefault((c, r[1][c]), []).append(r)
        candidates.extend((f"coordinate {c} = {z!r}", rows) for (c, z), rows in sorted(groups.items(), key=repr))
    elif family == "tuple":
        chain = greedy_hard_chain(g_rep, s, cap)
        if max_depth is None:
            max_depth = max(0, chain_length(float(alpha), *game_sizes(g_rep.base)) - 1) if alpha > 0 else n - 1
        for node in chain.nodes:
            if len(node.prefix) > max_depth or node.next_coordinate is None:
                continue
            rows = [r for r in tab.rows if all(r[1][c] == z for c, z in node.prefix)]
            candidates.append((repr(node.prefix) if node.prefix else "full", rows))
    else:
        raise InvalidInput(f"unknown family {family!r}")
    events = []
    for label, rows in candidates:
        if not rows:
            continue
        mass, probs = tab.wins_given(rows)
        if mass < alpha:
            continue
        i = min(range(n), key=lambda c: (probs[c], c))
        events.append((label, mass, probs[i], i))
    if not events:
        raise InvalidInput("no event in the family has mass >= alpha")
    worst_ev = max(events, key=lambda ev: ev[2])
    return ScanResult(family, alpha, events, worst_ev[2], min(ev[2] for ev in events), worst_ev[0])


def criterion_decay_check(chain: HardCoordinateChain, scan: ScanResult, base: Game) -> tuple[bool, int]:
    """Whether Pr[W_{<=k}] <= (1 - eps/2)^k for k <= m, with eps certified by ``scan``."""
    eps = scan.certified_epsilon
    qs, as_ = game_sizes(base)
    m = min(chain.n, chain_length(float(scan.alpha), qs, as_)) if scan.alpha > 0 else chain.n
    ok = all(chain.win_prefix[k] <= (1 - eps / 2) ** k for k in range(1, m + 1))
    return ok, m
