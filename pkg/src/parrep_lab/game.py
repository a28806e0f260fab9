"""Finite k-player games with exact rational query distributions.

A game holds one question alphabet and one answer alphabet per player, a
query distribution (a mapping from question tuples to ``Fraction``) and a
winning predicate ``V(q, a) -> bool``.  Parallel repetition keeps a pointer to
the base game so coordinate-level questions can be recovered.

Everything here is exact: probabilities are ``Fraction`` and the brute-force
value search works with integer weights over a common denominator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, InvalidInput, ZeroMassEvent

DEFAULT_CAP = 10**8
_CHUNK = 1 << 15

Label = Hashable


# ---------------------------------------------------------------------------
# predicates


class TablePredicate:
    """Explicit predicate rows.

    With ``strict=False`` (the JSON convention) absent rows lose.  With
    ``strict=True`` the table is expected to be total and ``validate_game``
    reports any missing row.
    """

    def __init__(self, rows: Mapping[tuple[tuple, tuple], bool], strict: bool = False):
        self.rows = {(tuple(q), tuple(a)): bool(w) for (q, a), w in rows.items()}
        self.strict = strict

    def __call__(self, q: tuple, a: tuple) -> bool:
        return self.rows.get((q, a), False)


class FunctionPredicate:
    """Predicate backed by a Python callable; total by construction."""

    def __init__(self, fn: Callable[[tuple, tuple], bool]):
        self.fn = fn

    def __call__(self, q: tuple, a: tuple) -> bool:
        return bool(self.fn(q, a))


class RepeatedPredicate:
    """Conjunction of the base predicate over the coordinates."""

    def __init__(self, base: Callable[[tuple, tuple], bool], n: int):
        self.base = base
        self.n = n

    def __call__(self, q: tuple, a: tuple) -> bool:
        return all(
            self.base(tuple(qj[i] for qj in q), tuple(aj[i] for aj in a))
            for i in range(self.n)
        )


# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True, eq=False)
class Game:
    question_alphabets: tuple[tuple[Label, ...], ...]
    answer_alphabets: tuple[tuple[Label, ...], ...]
    distribution: Mapping[tuple, Fraction]
    predicate: Callable[[tuple, tuple], bool]
    base: "Game | None" = None
    repetitions: int = 1

    @property
    def num_players(self) -> int:
        return len(self.question_alphabets)

    @classmethod
    def build(
        cls,
        questions: Sequence[Sequence[Label]],
        answers: Sequence[Sequence[Label]],
        distribution: Mapping[tuple, Any],
        predicate: Callable[[tuple, tuple], bool] | Mapping | Iterable,
    ) -> "Game":
        """Convenience constructor.

        ``predicate`` may be a callable, a mapping ``(q, a) -> bool`` (strict
        table) or an iterable of winning ``(q, a)`` pairs.
        """
        if callable(predicate) and not isinstance(predicate, Mapping):
            pred = predicate if isinstance(predicate, (TablePredicate, FunctionPredicate, RepeatedPredicate)) else FunctionPredicate(predicate)
        elif isinstance(predicate, Mapping):
            pred = TablePredicate(predicate, strict=True)
        else:
            pred = TablePredicate({(tuple(q), tuple(a)): True for q, a in predicate})
        dist = {tuple(q): Fraction(p) for q, p in distribution.items()}
        return cls(
            tuple(tuple(x) for x in questions),
            tuple(tuple(a) for a in answers),
            dist,
            pred,
        )

    # -- indexing helpers (cached; the dataclass is immutable) --------------

    @cached_property
    def support(self) -> tuple[tuple[tuple, Fraction], ...]:
        """Question tuples of positive mass, ordered by alphabet position."""
        idx = self.question_index
        items = [(q, p) for q, p in self.distribution.items() if p > 0]
        items.sort(key=lambda qp: tuple(idx[j][x] for j, x in enumerate(qp[0])))
        return tuple(items)

    @cached_property
    def question_index(self) -> tuple[dict, ...]:
        return tuple({x: t for t, x in enumerate(X)} for X in self.question_alphabets)

    @cached_property
    def answer_index(self) -> tuple[dict, ...]:
        return tuple({a: t for t, a in enumerate(A)} for A in self.answer_alphabets)

    def win_array(self, q: tuple) -> np.ndarray:
        """Boolean array over answer-index tuples for question tuple ``q``."""
        shape = tuple(len(A) for A in self.answer_alphabets)
        out = np.zeros(shape, dtype=bool)
        for idx in np.ndindex(*shape):
            a = tuple(self.answer_alphabets[j][t] for j, t in enumerate(idx))
            out[idx] = self.predicate(q, a)
        return out

    def marginal(self, j: int) -> dict:
        """Marginal distribution of player ``j``'s question."""
        out = {x: Fraction(0) for x in self.question_alphabets[j]}
        for q, p in self.support:
            out[q[j]] += p
        return out


@dataclass(frozen=True, eq=False)
class ProductStrategy:
    """One deterministic table per player, question label -> answer label."""

    tables: tuple[Mapping[Label, Label], ...]
    arity: int = 1

    def answers(self, q: tuple) -> tuple:
        return tuple(t[x] for t, x in zip(self.tables, q))

    @classmethod
    def from_functions(cls, game: Game, fns: Sequence[Callable[[Label], Label]]) -> "ProductStrategy":
        return cls(
            tuple({x: fn(x) for x in X} for X, fn in zip(game.question_alphabets, fns)),
            game.repetitions,
        )

    @classmethod
    def coordinatewise(cls, game_rep: Game, single: "ProductStrategy") -> "ProductStrategy":
        """Play ``single`` independently on every coordinate of ``game_rep``."""
        return cls.from_functions(
            game_rep,
            [lambda x, t=t: tuple(t[xi] for xi in x) for t in single.tables],
        )


@dataclass(frozen=True, eq=False)
class ProductEvent:
    """E = E^1 x ... x E^k, each E^j an explicit set of player-j questions."""

    sets: tuple[frozenset, ...]
    arity: int = 1

    def __contains__(self, q: tuple) -> bool:
        return all(x in s for x, s in zip(q, self.sets))

    @classmethod
    def full(cls, game: Game) -> "ProductEvent":
        return cls(tuple(frozenset(X) for X in game.question_alphabets), game.repetitions)

    @classmethod
    def of(cls, game: Game, sets: Sequence[Iterable]) -> "ProductEvent":
        return cls(tuple(frozenset(s) for s in sets), game.repetitions)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# operations


def validate_game(g: Game, cap: int = DEFAULT_CAP) -> ValidationReport:
    rep = ValidationReport()
    k = g.num_players
    if k < 1:
        rep.violations.append("no players")
    if len(g.answer_alphabets) != k:
        rep.violations.append(f"{len(g.answer_alphabets)} answer alphabets for {k} players")
        return rep
    for j in range(k):
        for kind, alpha in (("question", g.question_alphabets[j]), ("answer", g.answer_alphabets[j])):
            if not alpha:
                rep.violations.append(f"empty {kind} alphabet for player {j}")
            if len(set(alpha)) != len(alpha):
                rep.violations.append(f"duplicate {kind} labels for player {j}")
    total = Fraction(0)
    for q, p in g.distribution.items():
        if not isinstance(p, (int, Fraction)):
            rep.violations.append(f"non-rational probability {p!r} at {q!r}")
            continue
        if p < 0:
            rep.violations.append(f"negative probability {p} at {q!r}")
        if len(q) != k:
            rep.violations.append(f"question tuple {q!r} has wrong length")
            continue
        for j, x in enumerate(q):
            if x not in g.question_index[j]:
                rep.violations.append(f"dangling question label {x!r} for player {j}")
        total += p
    if total != 1:
        rep.violations.append(f"mass {total} ≠ 1")
    pred = g.predicate
    if isinstance(pred, TablePredicate):
        for q, a in pred.rows:
            if len(q) != k or len(a) != k or any(
                x not in g.question_index[j] for j, x in enumerate(q)
            ) or any(b not in g.answer_index[j] for j, b in enumerate(a)):
                rep.violations.append(f"dangling predicate row {(q, a)!r}")
        if pred.strict:
            size = math.prod(len(X) * len(A) for X, A in zip(g.question_alphabets, g.answer_alphabets))
            if size > cap:
                rep.violations.append("predicate table too large to check totality")
            elif len(pred.rows) < size or any(
                (q, a) not in pred.rows
                for q in itertools.product(*g.question_alphabets)
                for a in itertools.product(*g.answer_alphabets)
            ):
                rep.violations.append("predicate not total")
    return rep


def _check_size(dimension: str, size: int, cap: int) -> None:
    if size > cap:
        raise CapExceeded(dimension, size, cap)


def repeat_game(g: Game, n: int, cap: int = DEFAULT_CAP) -> Game:
    """n-fold parallel repetition; player labels become n-tuples."""
    if n < 1:
        raise InvalidInput("repetition count must be positive")
    for j in range(g.num_players):
        _check_size(f"question alphabet of player {j} to the power {n}", len(g.question_alphabets[j]) ** n, cap)
        _check_size(f"answer alphabet of player {j} to the power {n}", len(g.answer_alphabets[j]) ** n, cap)
    _check_size(f"query support to the power {n}", len(g.support) ** n, cap)
    k = g.num_players
    questions = tuple(tuple(itertools.product(X, repeat=n)) for X in g.question_alphabets)
    answers = tuple(tuple(itertools.product(A, repeat=n)) for A in g.answer_alphabets)
    dist = {}
    for combo in itertools.product(g.support, repeat=n):
        q = tuple(tuple(c[0][j] for c in combo) for j in range(k))
        dist[q] = math.prod((c[1] for c in combo), start=Fraction(1))
    return Game(questions, answers, dist, RepeatedPredicate(g.predicate, n), base=g, repetitions=n)


def win_probability(g: Game, s: ProductStrategy) -> Fraction:
    if s.arity != g.repetitions or len(s.tables) != g.num_players:
        raise InvalidInput("strategy arity does not match the game")
    return sum((p for q, p in g.support if g.predicate(q, s.answers(q))), Fraction(0))


def strategy_space_size(g: Game) -> int:
    return math.prod(len(A) ** len(X) for X, A in zip(g.question_alphabets, g.answer_alphabets))


def value(g: Game, cap: int = DEFAULT_CAP) -> tuple[Fraction, ProductStrategy]:
    """Exact value by exhaustive search.

    The last player best-responds question by question, so only the other
    players' strategy tables are enumerated.  Among optimal strategies the
    lexicographically least one (players in order, each table in alphabet
    order, answers by alphabet position) is returned.
    """
    _check_size("strategy space", strategy_space_size(g), cap)
    k = g.num_players
    nq = [len(X) for X in g.question_alphabets]
    na = [len(A) for A in g.answer_alphabets]
    last = k - 1
    support = [(tuple(g.question_index[j][x] for j, x in enumerate(q)), p, g.win_array(q)) for q, p in g.support]
    denom = math.lcm(*(p.denominator for _, p, _ in support)) if support else 1
    big = denom > 2**52
    positions = [(j, x) for j in range(last) for x in range(nq[j])]
    pos_of = {jx: t for t, jx in enumerate(positions)}
    bases = np.array([na[j] for j, _ in positions], dtype=np.int64)
    n_outer = math.prod(int(b) for b in bases)

    best_score, best_t, best_inner = -1, 0, None
    for start in range(0, n_outer, _CHUNK):
        t = np.arange(start, min(n_outer, start + _CHUNK), dtype=np.int64)
        digits = _mixed_radix(t, bases)
        acc = np.zeros((len(t), nq[last], na[last]), dtype=object if big else np.int64)
        for qi, p, w in support:
            weight = int(p * denom)
            idx = tuple(digits[:, pos_of[(j, qi[j])]] for j in range(last))
            acc[:, qi[last], :] += weight * w[idx]
        scores = acc.max(axis=2).sum(axis=1)
        b = int(np.argmax(scores))
        if scores[b] > best_score:
            best_score, best_t, best_inner = int(scores[b]), start + b, acc[b].argmax(axis=1)
    digits = _mixed_radix(np.array([best_t], dtype=np.int64), bases)[0]
    tables = []
    for j in range(last):
        tables.append({x: g.answer_alphabets[j][int(digits[pos_of[(j, xi)]])] for xi, x in enumerate(g.question_alphabets[j])})
    tables.append({x: g.answer_alphabets[last][int(best_inner[xi])] for xi, x in enumerate(g.question_alphabets[last])})
    return Fraction(best_score, denom), ProductStrategy(tuple(tables), g.repetitions)


def _mixed_radix(t: np.ndarray, bases: np.ndarray) -> np.ndarray:
    digits = np.empty((len(t), len(bases)), dtype=np.int64)
    rem = t.copy()
    for p in range(len(bases) - 1, -1, -1):
        digits[:, p] = rem % bases[p]
        rem //= bases[p]
    return digits


def event_mass(g: Game, e: ProductEvent) -> Fraction:
    return sum((p for q, p in g.support if q in e), Fraction(0))


def condition(g: Game, e: ProductEvent) -> Game:
    """The same game with the query distribution conditioned on ``e``."""
    if e.arity != g.repetitions or len(e.sets) != g.num_players:
        raise InvalidInput("event arity does not match the game")
    mass = event_mass(g, e)
    if mass == 0:
        raise ZeroMassEvent("conditioning event has probability zero")
    dist = {q: p / mass for q, p in g.support if q in e}
    return Game(g.question_alphabets, g.answer_alphabets, dist, g.predicate, g.base, g.repetitions)


def value_conditioned(g: Game, e: ProductEvent, cap: int = DEFAULT_CAP) -> Fraction:
    return value(condition(g, e), cap)[0]


def coordinate_question(q: tuple, i: int) -> tuple:
    """The base question tuple sitting at coordinate ``i`` of a repeated question."""
    return tuple(qj[i] for qj in q)


def coordinate_win_probability(g_rep: Game, s: ProductStrategy, i: int, e: ProductEvent) -> Fraction:
    if g_rep.base is None:
        raise InvalidInput("coordinate win probability needs a repeated game")
    if not 0 <= i < g_rep.repetitions:
        raise InvalidInput(f"coordinate {i} out of range")
    mass = event_mass(g_rep, e)
    if mass == 0:
        raise ZeroMassEvent("conditioning event has probability zero")
    won = Fraction(0)
    for q, p in g_rep.support:
        if q in e:
            a = s.answers(q)
            if g_rep.base.predicate(coordinate_question(q, i), coordinate_question(a, i)):
                won += p
    return won / mass


# ---------------------------------------------------------------------------
# player reductions


def _drop(t: tuple, j: int) -> tuple:
    return t[:j] + t[j + 1 :]


def _insert(t: tuple, j: int, v: Any) -> tuple:
    return t[:j] + (v,) + t[j:]


def merge_players(g: Game, i: int, j: int, correspondence: Mapping[Label, Label]) -> Game:
    """Merge player ``j`` into player ``i`` when ``x_j`` is a bijective image of ``x_i``.

    The merged player sits at ``i``'s position (shifted if ``j < i``), keeps
    ``i``'s question alphabet and answers pairs ``(a_i, a_j)``.
    """
    k = g.num_players
    if i == j or not (0 <= i < k and 0 <= j < k):
        raise InvalidInput("merge needs two distinct valid players")
    Xi, Xj = g.question_alphabets[i], g.question_alphabets[j]
    corr = dict(correspondence)
    if set(corr) != set(Xi) or set(corr.values()) != set(Xj) or len(Xi) != len(Xj):
        raise InvalidInput("correspondence is not a bijection between the two question alphabets")
    for q, _ in g.support:
        if corr[q[i]] != q[j]:
            raise InvalidInput(f"support tuple {q!r} leaves the graph of the correspondence")
    pos = i if i < j else i - 1
    questions = _drop(g.question_alphabets, j)
    answers = list(_drop(g.answer_alphabets, j))
    answers[pos] = tuple(itertools.product(g.answer_alphabets[i], g.answer_alphabets[j]))
    dist = {_drop(q, j): p for q, p in g.support}
    pred = g.predicate

    def merged(q2: tuple, a2: tuple) -> bool:
        q = _insert(q2, j, corr[q2[pos]])
        ai, aj = a2[pos]
        a = list(_insert(a2, j, aj))
        a[i] = ai
        return pred(q, tuple(a))

    return Game(questions, tuple(answers), dist, FunctionPredicate(merged))


def deterministic_question(g: Game, j: int) -> Label | None:
    seen = {q[j] for q, _ in g.support}
    return next(iter(seen)) if len(seen) == 1 else None


def eliminate_deterministic_player(g: Game, j: int, cap: int = DEFAULT_CAP) -> Game:
    """Remove a player whose question is fixed on the support.

    Such a player effectively commits to a single answer.  That answer is
    chosen to maximise the value of the residual game (least answer on ties)
    and is folded into the predicate, so the value is preserved exactly.
    """
    k = g.num_players
    if not 0 <= j < k or k < 2:
        raise InvalidInput("cannot eliminate this player")
    x0 = deterministic_question(g, j)
    if x0 is None:
        raise InvalidInput(f"player {j} is not deterministic on the support")
    questions = _drop(g.question_alphabets, j)
    answers = _drop(g.answer_alphabets, j)
    dist = {_drop(q, j): p for q, p in g.support}
    pred = g.predicate
    best = None
    for aj in g.answer_alphabets[j]:
        cand = Game(questions, answers, dist, FunctionPredicate(
            lambda q2, a2, aj=aj: pred(_insert(q2, j, x0), _insert(a2, j, aj))
        ))
        v = value(cand, cap)[0]
        if best is None or v > best[0]:
            best = (v, cand)
    return best[1]


def binary_pair_reduction(g: Game, i: int, j: int, cap: int = DEFAULT_CAP) -> tuple[str, Game] | None:
    """Case analysis for a pair of binary-question players.

    If the (i, j)-projection of the support has at most two edges, either one
    of the players is deterministic or the two questions determine each other;
    return the corresponding reduced game, else ``None``.
    """
    edges = sorted({(q[i], q[j]) for q, _ in g.support}, key=repr)
    left = {a for a, _ in edges}
    right = {b for _, b in edges}
    if len(left) == 1:
        return (f"eliminate player {i}", eliminate_deterministic_player(g, i, cap))
    if len(right) == 1:
        return (f"eliminate player {j}", eliminate_deterministic_player(g, j, cap))
    if len(edges) == 2 and len(left) == 2 and len(right) == 2:
        corr = dict(edges)
        if set(corr) == set(g.question_alphabets[i]) and set(corr.values()) == set(g.question_alphabets[j]):
            return (f"merge players {i} and {j}", merge_players(g, i, j, corr))
    return None


# ---------------------------------------------------------------------------
# restricted games


def lift_question(rho, x_prime: tuple, base_support: Sequence[tuple]) -> tuple:
    """x'^(rho): the n-coordinate question induced by an m-coordinate one.

    ``x_prime`` is a tuple of per-player m-tuples; ``rho`` has ``classes``,
    ``fixed`` (coordinate -> index into ``base_support``) and ``n``.
    """
    k = len(x_prime)
    out = [[None] * rho.n for _ in range(k)]
    for t, cls in enumerate(rho.classes):
        for c in cls:
            for j in range(k):
                out[j][c] = x_prime[j][t]
    for c, z in rho.fixed.items():
        for j in range(k):
            out[j][c] = base_support[z][j]
    return tuple(tuple(o) for o in out)


def restrict_repeated_game(g_rep: Game, s: ProductStrategy, e: ProductEvent, rho, cap: int = DEFAULT_CAP):
    """Game, strategy and event induced on the free classes of ``rho``.

    The restricted strategy answers class ``t`` with the original answer at
    the least coordinate of that class.  Returns ``(game, strategy, event)``.
    """
    base = g_rep.base
    if base is None:
        raise InvalidInput("restriction needs a repeated game")
    n = g_rep.repetitions
    covered = sorted([c for cls in rho.classes for c in cls] + list(rho.fixed))
    if covered != list(range(n)) or any(not cls for cls in rho.classes):
        raise InvalidInput("classes and fixed set must partition the coordinates")
    m = len(rho.classes)
    if m == 0:
        raise InvalidInput("restriction leaves no free coordinate")
    symbols = [q for q, _ in base.support]
    if any(not 0 <= z < len(symbols) for z in rho.fixed.values()):
        raise InvalidInput("fixed value outside the query support")
    g_m = repeat_game(base, m, cap)
    reps = [min(cls) for cls in rho.classes]
    k = g_rep.num_players

    def lift_player(j: int, xj: tuple) -> tuple:
        out = [None] * n
        for t, cls in enumerate(rho.classes):
            for c in cls:
                out[c] = xj[t]
        for c, z in rho.fixed.items():
            out[c] = symbols[z][j]
        return tuple(out)

    tables, sets = [], []
    for j in range(k):
        table, members = {}, set()
        for xj in g_m.question_alphabets[j]:
            full = lift_player(j, xj)
            ans = s.tables[j][full]
            table[xj] = tuple(ans[r] for r in reps)
            if full in e.sets[j]:
                members.add(xj)
        tables.append(table)
        sets.append(frozenset(members))
    return g_m, ProductStrategy(tuple(tables), m), ProductEvent(tuple(sets), m)


# ---------------------------------------------------------------------------
# JSON


def _label(v: Any) -> Label:
    return tuple(_label(x) for x in v) if isinstance(v, list) else v


def _unlabel(v: Any) -> Any:
    return [_unlabel(x) for x in v] if isinstance(v, tuple) else v


def parse_rational(text: Any) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise InvalidInput(f"probability {text!r} must be an integer or a 'num/den' string")
    if isinstance(text, int):
        return Fraction(text)
    if "." in text or "e" in text.lower():
        raise InvalidInput(f"probability {text!r} is not decimal-free")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"bad probability {text!r}") from exc


def game_from_json(obj: Mapping) -> Game:
    try:
        k = obj["players"]
        questions = [tuple(_label(x) for x in X) for X in obj["questions"]]
        answers = [tuple(_label(a) for a in A) for A in obj["answers"]]
        dist: dict[tuple, Fraction] = {}
        for row in obj["distribution"]:
            q = tuple(_label(x) for x in row["q"])
            dist[q] = dist.get(q, Fraction(0)) + parse_rational(row["p"])
        rows = {}
        for row in obj.get("predicate", []):
            rows[(tuple(_label(x) for x in row["q"]), tuple(_label(a) for a in row["a"]))] = bool(row["win"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed game JSON: {exc}") from exc
    if not isinstance(k, int) or len(questions) != k or len(answers) != k:
        raise InvalidInput("'players' does not match the alphabet lists")
    return Game(tuple(questions), tuple(answers), dist, TablePredicate(rows))


def game_to_json(g: Game) -> dict:
    """Serialise a game; only winning predicate rows over the support are written."""
    rows = []
    for q, _ in g.support:
        for a in itertools.product(*g.answer_alphabets):
            if g.predicate(q, a):
                rows.append({"q": _unlabel(list(q)), "a": _unlabel(list(a)), "win": True})
    return {
        "players": g.num_players,
        "questions": [_unlabel(list(X)) for X in g.question_alphabets],
        "answers": [_unlabel(list(A)) for A in g.answer_alphabets],
        "distribution": [{"q": _unlabel(list(q)), "p": str(p)} for q, p in g.support],
        "predicate": rows,
    }


def strategy_to_json(s: ProductStrategy) -> list:
    return [[[_unlabel(x), _unlabel(a)] for x, a in t.items()] for t in s.tables]
