"""Single-copy embedding strategy and its companions for repeated games.

Questions of the repeated game are per-player n-tuples.  Throughout, a
"point" is a tuple of n base question tuples (coordinate-major), and the
product event E is tested player by player on the transposed vectors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .analysis import FunctionTable, ProbabilitySpace, expectation, product_pseudorandomness_estimate, stability
from .errors import CapExceeded, InvalidInput, PreconditionError, ZeroMassEvent
from .game import Game, ProductEvent, ProductStrategy, coordinate_question, coordinate_win_probability, event_mass
from .restrictions import (
    GeneralizedRandomRestriction,
    GeneralizedRestriction,
    conditional_grr,
    point_mass,
)

DEFAULT_CAP = 10**6


def _check_repeated(g_rep: Game, s: ProductStrategy | None, e: ProductEvent) -> None:
    if g_rep.base is None:
        raise InvalidInput("expected a repeated game")
    if e.arity != g_rep.repetitions or len(e.sets) != g_rep.num_players:
        raise InvalidInput("event arity does not match the game")
    if s is not None and (s.arity != g_rep.repetitions or len(s.tables) != g_rep.num_players):
        raise InvalidInput("strategy arity does not match the game")


def player_vector(point: Sequence[tuple], j: int) -> tuple:
    return tuple(q[j] for q in point)


def in_event(point: Sequence[tuple], e: ProductEvent) -> bool:
    return all(player_vector(point, j) in s for j, s in enumerate(e.sets))


def question_space(base: Game) -> ProbabilitySpace:
    """The base query distribution as a space whose symbols are support tuples."""
    return ProbabilitySpace(tuple(q for q, _ in base.support), tuple(p for _, p in base.support))


def player_space(base: Game, j: int) -> ProbabilitySpace:
    m = base.marginal(j)
    return ProbabilitySpace(tuple(base.question_alphabets[j]), tuple(m[x] for x in base.question_alphabets[j]))


# ---------------------------------------------------------------------------
# indicator functions


@dataclass
class IndicatorFamily:
    """Membership tables F[j][x] and answer tables f[j][(x, a)] on n - 1 coordinates.

    Tables are 0/1 integer arrays indexed by player-j question positions of
    the coordinates other than ``coordinate`` (in increasing order).
    """

    coordinate: int
    spaces: tuple[ProbabilitySpace, ...]
    membership: tuple[dict, ...]
    answer: tuple[dict, ...]

    @property
    def size(self) -> int:
        return sum(len(m) for m in self.membership) + sum(len(a) for a in self.answer)


def indicator_family(g_rep: Game, s: ProductStrategy, e: ProductEvent, i: int, cap: int = DEFAULT_CAP) -> IndicatorFamily:
    _check_repeated(g_rep, s, e)
    base, n = g_rep.base, g_rep.repetitions
    if not 0 <= i < n:
        raise InvalidInput(f"coordinate {i} out of range")
    spaces, members, answers = [], [], []
    for j in range(base.num_players):
        X, A = base.question_alphabets[j], base.answer_alphabets[j]
        if len(X) ** (n - 1) * len(X) > cap:
            raise CapExceeded(f"indicator tables of player {j}", len(X) ** n, cap)
        shape = (len(X),) * (n - 1)
        F = {x: np.zeros(shape, dtype=np.int64) for x in X}
        f = {(x, a): np.zeros(shape, dtype=np.int64) for x in X for a in A}
        for idx in itertools.product(range(len(X)), repeat=n - 1):
            rest = [X[t] for t in idx]
            for x in X:
                vec = tuple(rest[:i] + [x] + rest[i:])
                if vec in e.sets[j]:
                    F[x][idx] = 1
                    f[(x, s.tables[j][vec][i])][idx] = 1
        spaces.append(player_space(base, j))
        members.append(F)
        answers.append(f)
    return IndicatorFamily(i, tuple(spaces), tuple(members), tuple(answers))


# ---------------------------------------------------------------------------
# configuration and shared enumeration


@dataclass(frozen=True)
class EmbeddingConfig:
    delta: Fraction = Fraction(1, 2)
    T: int = 2
    trials: int = 2000
    seed: int = 0
    exact: bool = True
    variant: str = "restriction"  # or "pseudorandom"
    gamma: float = 0.5
    epsilon: float = 0.0  # only used in the reported analytic bound

    def __post_init__(self):
        if not 0 < self.delta < 1 or self.T < 1:
            raise InvalidInput("need delta in (0, 1) and T >= 1")
        if self.variant not in ("restriction", "pseudorandom"):
            raise InvalidInput(f"unknown variant {self.variant!r}")

    @classmethod
    def asymptotic(cls, n: int, **kw) -> "EmbeddingConfig":
        """delta = (log2 n)^(-1/3) capped at 1/2, T = ceil(1/delta^2)."""
        d = min(0.5, math.log2(max(n, 2)) ** (-1 / 3))
        delta = Fraction(d).limit_denominator(1000)
        return cls(delta=delta, T=math.ceil(1 / delta**2), **kw)

    @property
    def rates(self) -> list[Fraction]:
        return [Fraction(self.delta) ** t for t in range(self.T)]


class _Setup:
    """Enumerated joint distribution of the repeated game restricted to E."""

    def __init__(self, g_rep: Game, s: ProductStrategy | None, e: ProductEvent, cap: int):
        _check_repeated(g_rep, s, e)
        self.g, self.s, self.e = g_rep, s, e
        self.base = g_rep.base
        self.n = g_rep.repetitions
        self.k = self.base.num_players
        supp = self.base.support
        if len(supp) ** self.n > cap:
            raise CapExceeded("repeated support", len(supp) ** self.n, cap)
        self.Q = dict(supp)
        self.points = []
        for combo in itertools.product(supp, repeat=self.n):
            pt = tuple(q for q, _ in combo)
            if in_event(pt, e):
                self.points.append((pt, math.prod((p for _, p in combo), start=Fraction(1))))
        self.alpha = sum((p for _, p in self.points), Fraction(0))
        if self.alpha == 0:
            raise ZeroMassEvent("conditioning event has probability zero")
        self.players = []
        for j in range(self.k):
            m = self.base.marginal(j)
            rows = []
            for vec in e.sets[j]:
                w = math.prod((m.get(x, Fraction(0)) for x in vec), start=Fraction(1))
                if w > 0:
                    rows.append((vec, w, s.tables[j][vec] if s is not None else None))
            rows.sort(key=lambda r: tuple(self.base.question_index[j][x] for x in r[0]))
            self.players.append(rows)
        self._z: dict = {}
        self._ans: dict = {}
        self._xi: dict = {}

    def others(self, i: int) -> list[int]:
        return [c for c in range(self.n) if c != i]

    def fixed_sets(self, i: int, p: Fraction):
        """(I', weight) pairs: every other coordinate is kept alive with probability p."""
        rest = self.others(i)
        for size in range(len(rest) + 1):
            for alive in itertools.combinations(rest, size):
                w = p**size * (1 - p) ** (len(rest) - size)
                if w:
                    yield tuple(c for c in rest if c not in alive), w

    def z_distribution(self, fixed: tuple, question: tuple | None = None, i: int | None = None) -> dict:
        """P(X_fixed = Z | E), optionally also conditioned on X_i = question."""
        key = (fixed, question, i)
        if key not in self._z:
            out: dict = {}
            for pt, p in self.points:
                if question is not None and pt[i] != question:
                    continue
                z = tuple(pt[c] for c in fixed)
                out[z] = out.get(z, Fraction(0)) + p
            total = sum(out.values(), Fraction(0))
            if total == 0:
                raise ZeroMassEvent("conditioning on the planted question leaves no mass")
            self._z[key] = {z: p / total for z, p in out.items()}
        return self._z[key]

    def question_given(self, i: int, fixed: tuple, z: tuple) -> dict:
        """P(X_i | E, X_fixed = z)."""
        key = (i, fixed, z)
        if key not in self._xi:
            out: dict = {}
            for pt, p in self.points:
                if all(pt[c] == v for c, v in zip(fixed, z)):
                    out[pt[i]] = out.get(pt[i], Fraction(0)) + p
            total = sum(out.values(), Fraction(0))
            self._xi[key] = {x: p / total for x, p in out.items()}
        return self._xi[key]

    def private(self, j: int, i: int, fixed: tuple, zj: tuple, xj) -> list | None:
        """Consistent player-j vectors with their conditional weights, or None."""
        key = (j, i, fixed, zj, xj)
        if key not in self._ans:
            rows = [
                (vec, w, ans)
                for vec, w, ans in self.players[j]
                if vec[i] == xj and all(vec[c] == v for c, v in zip(fixed, zj))
            ]
            total = sum((w for _, w, _ in rows), Fraction(0))
            self._ans[key] = [(ans[i], w / total) for _, w, ans in rows] if total else None
        return self._ans[key]

    def answer_distribution(self, j: int, i: int, fixed: tuple, zj: tuple, xj) -> tuple[dict, bool]:
        rows = self.private(j, i, fixed, zj, xj)
        if rows is None:
            return {self.base.answer_alphabets[j][0]: Fraction(1)}, False
        out: dict = {}
        for a, w in rows:
            out[a] = out.get(a, Fraction(0)) + w
        return out, True


# ---------------------------------------------------------------------------
# embedding strategy


@dataclass
class SimulationReport:
    losing_probability: object
    losing_probability_joint: object | None
    radius: float
    target_losing: Fraction
    coordinate_win: list[Fraction]
    drift_term: object | None
    conditioned_term: object | None
    inconsistency_rate: object
    analytic_bound: float
    event_mass: Fraction
    exact: bool
    seed: int
    trials: int
    lambda_frequency: float | None = None

    @property
    def decomposition_holds(self) -> bool:
        return self.losing_probability_joint is None or self.losing_probability == self.losing_probability_joint

    def as_dict(self) -> dict:
        def r(v):
            return None if v is None else str(v) if isinstance(v, Fraction) else v

        return {
            "losing_probability": r(self.losing_probability),
            "losing_probability_joint": r(self.losing_probability_joint),
            "radius": self.radius,
            "target_losing": r(self.target_losing),
            "coordinate_win": [r(x) for x in self.coordinate_win],
            "drift_term": r(self.drift_term),
            "conditioned_term": r(self.conditioned_term),
            "inconsistency_rate": r(self.inconsistency_rate),
            "analytic_bound": self.analytic_bound,
            "event_mass": r(self.event_mass),
            "exact": self.exact,
            "seed": self.seed,
            "trials": self.trials,
            "lambda_frequency": self.lambda_frequency,
        }


def _lose_structured(st: _Setup, i, fixed, z, x) -> tuple[Fraction, bool]:
    dists, consistent = [], True
    for j in range(st.k):
        d, ok = st.answer_distribution(j, i, fixed, player_vector(z, j), x[j])
        dists.append(list(d.items()))
        consistent &= ok
    lose = Fraction(0)
    for combo in itertools.product(*dists):
        a = tuple(c[0] for c in combo)
        if not st.base.predicate(x, a):
            lose += math.prod((c[1] for c in combo), start=Fraction(1))
    return lose, consistent


def _lose_joint(st: _Setup, i, fixed, z, x) -> Fraction:
    """Enumerate every player's private draw jointly and evaluate the predicate."""
    draws = []
    for j in range(st.k):
        rows = st.private(j, i, fixed, player_vector(z, j), x[j])
        draws.append(rows if rows is not None else [(st.base.answer_alphabets[j][0], Fraction(1))])
    lose = Fraction(0)
    for combo in itertools.product(*draws):
        if not st.base.predicate(x, tuple(a for a, _ in combo)):
            lose += math.prod((w for _, w in combo), start=Fraction(1))
    return lose


def simulate_embedding_strategy(
    g_rep: Game, s: ProductStrategy, e: ProductEvent, cfg: EmbeddingConfig | None = None, cap: int = DEFAULT_CAP
) -> SimulationReport:
    """Losing probability of the single-copy strategy planted in a uniform coordinate.

    Exact mode sums over every (i, p, I, Z, X~) and reports two routes: one
    through per-player answer marginals and one through the joint private
    draws.  It also reports the drift term E||P(X_i | E, X_I' = Z) - Q||_1
    and the term with X~ drawn from that conditional instead of Q.
    """
    cfg = cfg or EmbeddingConfig()
    st = _Setup(g_rep, s, e, cap)
    n = st.n
    wins = [coordinate_win_probability(g_rep, s, c, e) for c in range(n)]
    target = 1 - sum(wins, Fraction(0)) / n
    base_q = list(st.base.support)
    sizeA = math.prod(len(A) for A in st.base.answer_alphabets)
    a = float(st.alpha)
    dl = float(cfg.delta)
    bound = (
        float(target)
        + 4 * sizeA / a * (st.k / (dl * cfg.T) + cfg.epsilon)
        + math.sqrt(2 / (dl ** cfg.T * n) * math.log2(1 / a))
    )
    if not cfg.exact:
        return _simulate_mc(st, cfg, wins, target, bound)
    lose = joint = drift = cond = incons = Fraction(0)
    for i in range(n):
        for p in cfg.rates:
            for fixed, wI in st.fixed_sets(i, p):
                for z, pz in st.z_distribution(fixed).items():
                    w = Fraction(1, n) * Fraction(1, cfg.T) * wI * pz
                    xi = st.question_given(i, fixed, z)
                    drift += w * sum((abs(xi.get(x, 0) - q) for x, q in base_q), Fraction(0))
                    for x, q in base_q:
                        l1, ok = _lose_structured(st, i, fixed, z, x)
                        lose += w * q * l1
                        joint += w * q * _lose_joint(st, i, fixed, z, x)
                        cond += w * xi.get(x, Fraction(0)) * l1
                        if not ok:
                            incons += w * q
    return SimulationReport(lose, joint, 0.0, target, wins, drift, cond, incons, bound, st.alpha, True, cfg.seed, 0)


def _simulate_mc(st: _Setup, cfg, wins, target, bound) -> SimulationReport:
    rng = np.random.default_rng(cfg.seed)
    n = st.n
    supp = list(st.base.support)
    qw = np.array([float(p) for _, p in supp])
    losses = incons = 0
    for _ in range(cfg.trials):
        x = supp[rng.choice(len(supp), p=qw)][0]
        i = int(rng.integers(n))
        p = float(cfg.delta) ** int(rng.integers(cfg.T))
        fixed = tuple(c for c in st.others(i) if rng.random() >= p)
        zd = st.z_distribution(fixed)
        zs = list(zd)
        z = zs[rng.choice(len(zs), p=np.array([float(zd[v]) for v in zs]))]
        ans, ok_all = [], True
        for j in range(st.k):
            d, ok = st.answer_distribution(j, i, fixed, player_vector(z, j), x[j])
            keys = list(d)
            ans.append(keys[rng.choice(len(keys), p=np.array([float(d[v]) for v in keys]))])
            ok_all &= ok
        losses += not st.base.predicate(x, tuple(ans))
        incons += not ok_all
    est = losses / cfg.trials
    rad = 3 * math.sqrt(max(est * (1 - est), 1 / cfg.trials) / cfg.trials)
    return SimulationReport(
        est, None, rad, target, wins, None, None, incons / cfg.trials, bound, st.alpha, False, cfg.seed, cfg.trials
    )


# ---------------------------------------------------------------------------
# good-restriction event


@dataclass
class LambdaReport:
    frequency: object
    failure: object
    bound: float | None
    functions: int
    exact: bool
    radius: float
    conditioning_mass: Fraction

    def as_dict(self) -> dict:
        f = lambda v: str(v) if isinstance(v, Fraction) else v  # noqa: E731
        return {
            "frequency": f(self.frequency),
            "failure": f(self.failure),
            "bound": self.bound,
            "functions": self.functions,
            "exact": self.exact,
            "radius": self.radius,
            "conditioning_mass": f(self.conditioning_mass),
        }


def _select_functions(fam: IndicatorFamily, question, answer) -> list[tuple[int, np.ndarray]]:
    out = []
    for j in range(len(fam.spaces)):
        for x, tab in fam.membership[j].items():
            if question is None or x == question[j]:
                out.append((j, tab))
        for (x, a), tab in fam.answer[j].items():
            if (question is None or x == question[j]) and (answer is None or a == answer[j]):
                out.append((j, tab))
    return out


def lambda_event_probability(
    g_rep: Game,
    s: ProductStrategy,
    e: ProductEvent,
    i: int,
    cfg: EmbeddingConfig | None = None,
    question: tuple | None = None,
    answer: tuple | None = None,
    cap: int = DEFAULT_CAP,
) -> LambdaReport:
    """How often the restriction (p, I, Z) makes every indicator function quiet.

    Quiet means the centred restriction has Stab_{1-delta} < delta (the
    default variant) or passes the (sqrt m, gamma) product-pseudorandomness
    test.  With ``question`` set, Z is drawn given X_i = question and only
    that question's functions are tested; the reported bound is then
    2 * (#functions) / (delta T Pr[E | X_i = question]).
    """
    cfg = cfg or EmbeddingConfig()
    st = _Setup(g_rep, s, e, cap)
    fam = indicator_family(g_rep, s, e, i, cap)
    fns = _select_functions(fam, question, answer)
    rest = st.others(i)
    pos = {c: t for t, c in enumerate(rest)}
    delta = Fraction(cfg.delta)
    if question is not None:
        num = sum(p for pt, p in st.points if pt[i] == question)
        mass = num / st.Q[question] if st.Q.get(question) else Fraction(0)
        if mass == 0:
            raise ZeroMassEvent("planted question is inconsistent with the event")
    else:
        mass = st.alpha
    memo: dict = {}

    def quiet(fixed: tuple, z: tuple) -> bool:
        for t, (j, tab) in enumerate(fns):
            zj = player_vector(z, j)
            key = (t, fixed, zj)
            if key not in memo:
                idx = [slice(None)] * (st.n - 1)
                for c, v in zip(fixed, zj):
                    idx[pos[c]] = st.base.question_index[j][v]
                sub = tab[tuple(idx)]
                space = fam.spaces[j]
                if cfg.variant == "restriction":
                    h = FunctionTable(space, np.asarray(sub).astype(object))
                    c = FunctionTable(space, h.values - expectation(h))
                    memo[key] = stability(c, 1 - delta) < delta
                else:
                    h = FunctionTable(space, sub.astype(complex))
                    c = FunctionTable(space, h.values - expectation(h))
                    if sub.ndim == 0 or np.allclose(c.values, 0):
                        memo[key] = True
                    else:
                        est = product_pseudorandomness_estimate(
                            c, math.sqrt(sub.ndim), cfg.gamma, seed=cfg.seed, stop_at_failure=True
                        )
                        memo[key] = not est.not_pseudorandom
            if not memo[key]:
                return False
        return True

    bound = 2 * len(fns) / (float(delta) * cfg.T * float(mass)) if cfg.variant == "restriction" else None
    if cfg.exact:
        freq = Fraction(0)
        for p in cfg.rates:
            for fixed, wI in st.fixed_sets(i, p):
                for z, pz in st.z_distribution(fixed, question, i if question is not None else None).items():
                    if quiet(fixed, z):
                        freq += Fraction(1, cfg.T) * wI * pz
        return LambdaReport(freq, 1 - freq, bound, len(fns), True, 0.0, mass)
    rng = np.random.default_rng(cfg.seed)
    hits = 0
    for _ in range(cfg.trials):
        p = float(delta) ** int(rng.integers(cfg.T))
        fixed = tuple(c for c in rest if rng.random() >= p)
        zd = st.z_distribution(fixed, question, i if question is not None else None)
        zs = list(zd)
        z = zs[rng.choice(len(zs), p=np.array([float(zd[v]) for v in zs]))]
        hits += quiet(fixed, z)
    est = hits / cfg.trials
    rad = 3 * math.sqrt(max(est * (1 - est), 1 / cfg.trials) / cfg.trials)
    return LambdaReport(est, 1 - est, bound, len(fns), False, rad, mass)


# ---------------------------------------------------------------------------
# information increment


def lift_restriction(rho: GeneralizedRestriction, i: int, value: int | None = None) -> GeneralizedRestriction:
    """Insert coordinate ``i`` into a restriction on the other n - 1 coordinates.

    It becomes a free singleton class (placed first) or, with ``value``,
    a coordinate fixed to that symbol index.
    """
    shift = lambda c: c if c < i else c + 1  # noqa: E731
    classes = tuple(tuple(shift(c) for c in T) for T in rho.classes)
    fixed = tuple((shift(c), v) for c, v in rho.fixed_items)
    if value is None:
        classes = ((i,),) + classes
    else:
        fixed = fixed + ((i, value),)
    return GeneralizedRestriction(rho.n + 1, classes, fixed)


@dataclass
class InformationIncrement:
    beta: Fraction
    alpha: Fraction
    epsilon: Fraction
    before: Fraction
    after: Fraction
    rhs: Fraction
    epsilon_extended: Fraction

    @property
    def holds(self) -> bool:
        return self.after >= self.rhs

    def as_dict(self) -> dict:
        return {k: str(v) for k, v in self.__dict__.items()} | {"holds": self.holds}


def information_increment_check(
    g_rep: Game, e: ProductEvent, grr_i: GeneralizedRandomRestriction, i: int
) -> InformationIncrement:
    """Exact check that fixing coordinate i after ``grr_i`` raises E[Pr[E | E_rho']^2].

    ``grr_i`` acts on the other n - 1 coordinates over ``question_space``;
    beta is measured under its conditional version given E, and the
    extended restriction fixes coordinate i to x~ drawn from Q.
    """
    _check_repeated(g_rep, None, e)
    base, n = g_rep.base, g_rep.repetitions
    space = question_space(base)
    if grr_i.n != n - 1 or tuple(grr_i.space.symbols) != space.symbols:
        raise InvalidInput("restriction must act on the other coordinates over the support space")
    sym = space.symbols
    member = lambda x: in_event(tuple(sym[v] for v in x), e)  # noqa: E731
    alpha = sum(
        (point_mass(space, x) for x in itertools.product(range(space.size), repeat=n) if member(x)), Fraction(0)
    )
    if alpha == 0:
        raise ZeroMassEvent("event has probability zero")
    eps = grr_i.epsilon
    if eps >= alpha:
        raise PreconditionError(f"epsilon {eps} is not below Pr[E] = {alpha}")
    lifted = GeneralizedRandomRestriction(space, n, tuple((lift_restriction(r, i), w) for r, w in grr_i.entries))
    cond = conditional_grr(lifted, member)
    Q = space.weights
    beta = Fraction(0)
    for (rho, _), cw in zip(lifted.entries, cond.weights):
        if cw == 0:
            continue
        dist = [Fraction(0)] * space.size
        for x in rho.members(space.size):
            if member(x):
                dist[x[i]] += point_mass(space, x)
        tot = sum(dist)
        beta += cw * sum(abs(d / tot - q) for d, q in zip(dist, Q))
    after = Fraction(0)
    extended = []
    for rho, w in grr_i.entries:
        for v, q in enumerate(Q):
            r2 = lift_restriction(rho, i, v)
            extended.append((r2, w * q))
            num = den = Fraction(0)
            for x in r2.members(space.size):
                pm = point_mass(space, x)
                den += pm
                if member(x):
                    num += pm
            after += w * q * (num / den) ** 2
    eps_ext = GeneralizedRandomRestriction(space, n, tuple(extended)).epsilon
    rhs = alpha**2 * (1 + beta**2 - 6 * eps / alpha)
    return InformationIncrement(beta, alpha, eps, alpha**2, after, rhs, eps_ext)
