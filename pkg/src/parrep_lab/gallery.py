"""Named example games addressable as ``gallery:<name>``."""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidInput
from .game import Game, TablePredicate


def ghz() -> Game:
    """Even-parity questions; win iff the answers' parity equals the OR of the questions."""
    support = [x for x in itertools.product((0, 1), repeat=3) if sum(x) % 2 == 0]
    return Game.build(
        [(0, 1)] * 3,
        [(0, 1)] * 3,
        {x: Fraction(1, 4) for x in support},
        lambda x, a: (a[0] ^ a[1] ^ a[2]) == (x[0] | x[1] | x[2]),
    )


def anticorr() -> Game:
    """Exactly one player gets a 1; win iff exactly one player answers 1 and that player got a 0."""
    support = [(0, 0, 1), (0, 1, 0), (1, 0, 0)]

    def win(x, a):
        ones = [j for j in range(3) if a[j] == 1]
        return len(ones) == 1 and x[ones[0]] == 0

    return Game.build([(0, 1)] * 3, [(0, 1)] * 3, {x: Fraction(1, 3) for x in support}, win)


def rectangle(k: int, s: int) -> Game:
    """Uniform questions on [s]^k; win iff the answers sum to the product of the questions mod s."""
    if k < 1 or s < 1:
        raise InvalidInput("rectangle needs k, s >= 1")
    w = Fraction(1, s**k)
    return Game.build(
        [tuple(range(s))] * k,
        [tuple(range(s))] * k,
        {x: w for x in itertools.product(range(s), repeat=k)},
        lambda x, a: sum(a) % s == math.prod(x) % s,
    )


def random_3cnf_clauses(m: int, d: int, seed) -> list[tuple[tuple[int, int, int], tuple[int, int, int]]]:
    """m clauses, each uniform among the 8 d^3 (variable triple, sign pattern) choices."""
    if m < 1 or d < 1:
        raise InvalidInput("need m, d >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(m):
        v = tuple(int(t) for t in rng.integers(d, size=3))
        neg = tuple(int(t) for t in rng.integers(2, size=3))
        out.append((v, neg))
    return out


def random_3cnf(m: int, d: int, seed) -> Game:
    """Player j receives the j-th variable of a uniformly chosen clause and answers its value.

    Clauses sharing a variable triple are indistinguishable to the players,
    so the predicate for that triple requires all of them to be satisfied.
    """
    clauses = random_3cnf_clauses(m, d, seed)
    dist: dict = {}
    signs: dict = {}
    for v, neg in clauses:
        dist[v] = dist.get(v, Fraction(0)) + Fraction(1, m)
        signs.setdefault(v, []).append(neg)
    rows = {}
    for v, negs in signs.items():
        for a in itertools.product((0, 1), repeat=3):
            rows[(v, a)] = all(any(a[j] != neg[j] for j in range(3)) for neg in negs)
    return Game(
        (tuple(range(d)),) * 3,
        ((0, 1),) * 3,
        dist,
        TablePredicate(rows),
    )


def random_binary3(seed) -> Game:
    """A random 3-player game with binary questions and answers and rational weights."""
    rng = np.random.default_rng(seed)
    qs = list(itertools.product((0, 1), repeat=3))
    while True:
        keep = [q for q in qs if rng.random() < 0.6]
        if keep:
            break
    weights = [int(rng.integers(1, 5)) for _ in keep]
    total = sum(weights)
    dist = {q: Fraction(w, total) for q, w in zip(keep, weights)}
    rows = {(q, a): bool(rng.random() < 0.5) for q in keep for a in itertools.product((0, 1), repeat=3)}
    return Game(((0, 1),) * 3, ((0, 1),) * 3, dist, TablePredicate(rows))


_PATTERNS: list[tuple[str, Callable]] = [
    (r"ghz", lambda: ghz()),
    (r"anticorr", lambda: anticorr()),
    (r"rect-(\d+)-(\d+)", lambda k, s: rectangle(int(k), int(s))),
    (r"3cnf-(\d+)-(\d+)-(\d+)", lambda m, d, seed: random_3cnf(int(m), int(d), int(seed))),
    (r"binary3-(\d+)", lambda seed: random_binary3(int(seed))),
]

NAMES = ("ghz", "anticorr", "rect-K-S", "3cnf-M-D-SEED", "binary3-SEED")


def gallery_game(name: str) -> Game:
    for pat, make in _PATTERNS:
        m = re.fullmatch(pat, name)
        if m:
            return make(*m.groups())
    raise InvalidInput(f"unknown gallery entry {name!r}; known: {', '.join(NAMES)}")
