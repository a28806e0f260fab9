"""Restrictions, generalized restrictions and distributions over them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .analysis import (
    FunctionTable,
    ProbabilitySpace,
    centered_stability_batch,
    product_weights,
    restrict_values,
    restriction_batch,
    stability,
)
from .errors import CapExceeded, InvalidInput, PreconditionError, ZeroMassEvent

DEFAULT_CAP = 10**7


# ---------------------------------------------------------------------------
# plain restrictions


@dataclass(frozen=True)
class Restriction:
    fixed: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "Restriction":
        return cls(tuple(sorted(mapping.items())))

    @property
    def as_dict(self) -> dict[int, int]:
        return dict(self.fixed)


def apply_restriction(f: FunctionTable, rho: Restriction) -> FunctionTable:
    fixed = rho.as_dict
    if any(not 0 <= c < f.n for c in fixed):
        raise InvalidInput("restriction fixes a coordinate outside the domain")
    return FunctionTable(f.space, np.asarray(restrict_values(f.values, fixed)))


def sample_p_random_restriction(space: ProbabilitySpace, n: int, p: float, seed) -> Restriction:
    """Keep each coordinate alive with probability ``p``; fix the rest from the measure."""
    if not 0 <= p <= 1:
        raise InvalidInput("keep-alive rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    alive = rng.random(n) < p
    vals = rng.choice(space.size, size=n, p=space.nu)
    return Restriction(tuple((c, int(vals[c])) for c in range(n) if not alive[c]))


def merge_coordinates(f: FunctionTable, T: Iterable[int]) -> FunctionTable:
    """f_{=T}(y, z): the merged coordinate comes first, the others follow in order."""
    T = sorted(set(T))
    if not T or any(not 0 <= c < f.n for c in T):
        raise InvalidInput("merge set must be a nonempty set of coordinates")
    rest = [c for c in range(f.n) if c not in T]
    rho = GeneralizedRestriction(f.n, (tuple(T),) + tuple((c,) for c in rest), ())
    return apply_generalized(f, rho)


# ---------------------------------------------------------------------------
# generalized restrictions


@dataclass(frozen=True)
class GeneralizedRestriction:
    """Merge classes T_1..T_m (ordered) plus fixed coordinates with symbol indices."""

    n: int
    classes: tuple[tuple[int, ...], ...]
    fixed_items: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(tuple(sorted(c)) for c in self.classes))
        object.__setattr__(self, "fixed_items", tuple(sorted(self.fixed_items)))
        seen = [c for cls in self.classes for c in cls] + [c for c, _ in self.fixed_items]
        if sorted(seen) != list(range(self.n)):
            raise InvalidInput("classes and fixed set must partition the coordinates")
        if any(not cls for cls in self.classes):
            raise InvalidInput("merge classes must be nonempty")

    @classmethod
    def build(cls, n: int, classes: Sequence[Iterable[int]], fixed: Mapping[int, int] | None = None):
        return cls(n, tuple(tuple(c) for c in classes), tuple((fixed or {}).items()))

    @classmethod
    def identity(cls, n: int) -> "GeneralizedRestriction":
        return cls(n, tuple((c,) for c in range(n)), ())

    @property
    def fixed(self) -> dict[int, int]:
        return dict(self.fixed_items)

    @property
    def m(self) -> int:
        return len(self.classes)

    def lift(self, y: Sequence[int]) -> tuple[int, ...]:
        """The point of E_rho whose class values are ``y``."""
        x = [0] * self.n
        for t, cls in enumerate(self.classes):
            for c in cls:
                x[c] = y[t]
        for c, v in self.fixed_items:
            x[c] = v
        return tuple(x)

    def members(self, s: int) -> Iterable[tuple[int, ...]]:
        for y in itertools.product(range(s), repeat=self.m):
            yield self.lift(y)

    def as_dict(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "fixed": [c for c, _ in self.fixed_items],
            "values": [v for _, v in self.fixed_items],
        }


def apply_generalized(f: FunctionTable, rho: GeneralizedRestriction) -> FunctionTable:
    if rho.n != f.n:
        raise InvalidInput("restriction arity does not match the function")
    s = f.space.size
    if any(not 0 <= v < s for _, v in rho.fixed_items):
        raise InvalidInput("fixed value outside the alphabet")
    grid = np.indices((s,) * rho.m, dtype=np.intp) if rho.m else np.zeros((0,), dtype=np.intp)
    shape = (s,) * rho.m
    coords: list = [None] * f.n
    for t, cls in enumerate(rho.classes):
        for c in cls:
            coords[c] = grid[t]
    for c, v in rho.fixed_items:
        coords[c] = np.full(shape, v, dtype=np.intp)
    vals = f.values[tuple(coords)] if f.n else f.values
    return FunctionTable(f.space, np.asarray(vals))


def compose(outer: GeneralizedRestriction, inner: GeneralizedRestriction) -> GeneralizedRestriction:
    """outer o inner: apply ``inner`` first, then ``outer`` to its free classes."""
    if outer.n != inner.m:
        raise InvalidInput("outer restriction must act on the inner one's free classes")
    classes = [tuple(sorted(c for j in S for c in inner.classes[j])) for S in outer.classes]
    fixed = dict(inner.fixed_items)
    for j, w in outer.fixed_items:
        for c in inner.classes[j]:
            fixed[c] = w
    return GeneralizedRestriction(inner.n, tuple(classes), tuple(fixed.items()))


def event_mask(rho: GeneralizedRestriction, s: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    if s**rho.n > cap:
        raise CapExceeded("event table", s**rho.n, cap)
    mask = np.zeros((s,) * rho.n, dtype=bool)
    for x in rho.members(s):
        mask[x] = True
    return mask


def event_of(rho: GeneralizedRestriction, s: int, cap: int = DEFAULT_CAP) -> frozenset:
    if s**rho.m > cap:
        raise CapExceeded("event size", s**rho.m, cap)
    return frozenset(rho.members(s))


# ---------------------------------------------------------------------------
# generalized random restrictions


def point_mass(space: ProbabilitySpace, x: Sequence[int]) -> Fraction:
    return math.prod((space.weights[v] for v in x), start=Fraction(1))


def _membership(event, n: int) -> Callable[[tuple], bool]:
    if event is None:
        return lambda x: True
    if callable(event):
        return lambda x: bool(event(x))
    if isinstance(event, np.ndarray):
        return lambda x: bool(event[x])
    members = frozenset(tuple(x) for x in event)
    return lambda x: x in members


@dataclass(frozen=True, eq=False)
class GeneralizedRandomRestriction:
    """Finitely supported distribution over generalized restrictions.

    ``declared`` optionally records the claimed ``(m, epsilon)``; both are
    re-derivable from the weighted support via ``min_free`` and ``epsilon``.
    """

    space: ProbabilitySpace
    n: int
    entries: tuple[tuple[GeneralizedRestriction, Fraction], ...]
    declared: tuple[int, Fraction] | None = None

    def __post_init__(self):
        if not self.entries:
            raise InvalidInput("a random restriction needs at least one entry")
        if any(r.n != self.n for r, _ in self.entries):
            raise InvalidInput("entries act on different numbers of coordinates")
        if any(w <= 0 for _, w in self.entries) or sum(w for _, w in self.entries) != 1:
            raise InvalidInput("weights must be positive and sum to 1")
        for r, _ in self.entries:
            if point_mass(self.space, [v for _, v in r.fixed_items]) == 0:
                raise ZeroMassEvent("a restriction event has zero mass")

    @property
    def min_free(self) -> int:
        return min(r.m for r, _ in self.entries)

    @cached_property
    def epsilon(self) -> Fraction:
        return grr_distribution_error(self)

    def verify_declaration(self) -> bool:
        return self.declared is None or (self.declared[0] == self.min_free and self.declared[1] == self.epsilon)

    def to_json(self) -> list:
        return [dict(r.as_dict(), weight=str(w)) for r, w in self.entries]

    @classmethod
    def from_json(cls, space: ProbabilitySpace, n: int, rows: Sequence[Mapping]) -> "GeneralizedRandomRestriction":
        entries = []
        for row in rows:
            rho = GeneralizedRestriction.build(n, row["classes"], dict(zip(row["fixed"], row["values"])))
            entries.append((rho, Fraction(row["weight"])))
        return cls(space, n, tuple(entries))


def identity_grr(space: ProbabilitySpace, n: int) -> GeneralizedRandomRestriction:
    return GeneralizedRandomRestriction(space, n, ((GeneralizedRestriction.identity(n), Fraction(1)),))


def p_random_grr(space: ProbabilitySpace, n: int, p: Fraction) -> GeneralizedRandomRestriction:
    """Plain p-random restrictions (keep-alive rate p) as an explicit list."""
    p = Fraction(p)
    entries = []
    for size in range(n + 1):
        for I in itertools.combinations(range(n), size):
            pI = (1 - p) ** size * p ** (n - size)
            if pI == 0:
                continue
            alive = tuple((c,) for c in range(n) if c not in I)
            for z in itertools.product(range(space.size), repeat=size):
                w = pI * point_mass(space, z)
                if w > 0:
                    entries.append((GeneralizedRestriction(n, alive, tuple(zip(I, z))), w))
    return GeneralizedRandomRestriction(space, n, tuple(entries))


def pairing_grr(space: ProbabilitySpace, n: int, S: Sequence[int], k: int) -> GeneralizedRandomRestriction:
    """Uniform k-subset T of S forced equal; every other coordinate stays free."""
    S = sorted(S)
    subsets = list(itertools.combinations(S, k))
    w = Fraction(1, len(subsets))
    entries = []
    for T in subsets:
        classes = (T,) + tuple((c,) for c in range(n) if c not in T)
        entries.append((GeneralizedRestriction(n, classes, ()), w))
    return GeneralizedRandomRestriction(space, n, tuple(entries))


def mixture(grr: GeneralizedRandomRestriction, event=None) -> tuple[dict, Fraction]:
    """Sparse table of E_rho[mu^n | E_rho (and E)] plus the total mass it covers.

    With an event, each restriction is weighted by its conditional-GRR weight
    and the inner conditioning includes the event.
    """
    space, s = grr.space, grr.space.size
    inside = _membership(event, grr.n)
    out: dict[tuple, Fraction] = {}
    if event is None:
        weights = [w for _, w in grr.entries]
    else:
        weights = conditional_grr(grr, event).weights
    for (rho, _), w in zip(grr.entries, weights):
        if w == 0:
            continue
        pts = [(x, point_mass(space, x)) for x in rho.members(s)]
        pts = [(x, p) for x, p in pts if p > 0 and inside(x)]
        mass = sum((p for _, p in pts), Fraction(0))
        if mass == 0:
            raise ZeroMassEvent("conditioned restriction event has zero mass")
        for x, p in pts:
            out[x] = out.get(x, Fraction(0)) + w * p / mass
    return out, sum(out.values(), Fraction(0))


def grr_distribution_error(grr: GeneralizedRandomRestriction) -> Fraction:
    """Exact ||E_rho[mu^n | E_rho] - mu^n||_1, summing only over the mixture's support."""
    mix, _ = mixture(grr)
    covered = Fraction(0)
    total = Fraction(0)
    for x, v in mix.items():
        p = point_mass(grr.space, x)
        covered += p
        total += abs(v - p)
    return total + (1 - covered)


def grr_distribution_error_dense(grr: GeneralizedRandomRestriction, cap: int = DEFAULT_CAP) -> float:
    """The same quantity by a dense float computation (independent route)."""
    s, n = grr.space.size, grr.n
    if s**n > cap:
        raise CapExceeded("dense table", s**n, cap)
    mu = product_weights(grr.space, n)
    mix = np.zeros_like(mu)
    for rho, w in grr.entries:
        mask = event_mask(rho, s, cap)
        mix += float(w) * np.where(mask, mu, 0.0) / mu[mask].sum()
    return float(np.abs(mix - mu).sum())


# -- equality forcing on a uniformly random subset -------------------------------


def pairing_error_exact(space: ProbabilitySpace, size: int, k: int) -> Fraction:
    """Exact l1 distance for forcing a uniform k-subset of ``size`` coordinates equal.

    The mixture's density relative to mu^n at x is the fraction of k-subsets
    on which x is constant, divided by sum_a mu(a)^k, so the distance is an
    expectation over the multinomial count vector of x.
    """
    s = space.size
    mu = space.weights
    pk = sum((w**k for w in mu), Fraction(0))
    total_sets = math.comb(size, k)
    total = Fraction(0)
    for counts in _compositions(size, s):
        prob = Fraction(math.factorial(size)) * math.prod((mu[a] ** c / math.factorial(c) for a, c in enumerate(counts)), start=Fraction(1))
        if prob == 0:
            continue
        ratio = Fraction(sum(math.comb(c, k) for c in counts), total_sets) / pk
        total += prob * abs(ratio - 1)
    return total


def pairing_error_monte_carlo(space: ProbabilitySpace, size: int, k: int, samples: int, seed) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of the same distance."""
    rng = np.random.default_rng(seed)
    mu = space.nu
    pk = float(np.sum(mu**k))
    x = rng.choice(space.size, size=(samples, size), p=mu)
    counts = np.stack([(x == a).sum(axis=1) for a in range(space.size)], axis=1)
    numer = np.zeros(samples)
    for a in range(space.size):
        numer += np.array([math.comb(int(c), k) for c in counts[:, a]], dtype=float)
    vals = np.abs(numer / math.comb(size, k) / pk - 1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# stability under random restrictions


def restriction_stability_identity_check(f: FunctionTable, p, delta, cap: int = DEFAULT_CAP):
    """Both sides of the random-restriction stability identity.

    The left side averages, over every fixed set I (each coordinate fixed
    with probability 1 - p) and every z, the (1 - delta)-stability of the
    centred restriction.  The right side is Stab_{1-p delta} - Stab_{1-p}.
    Exact when ``f`` is exact and p, delta are fractions.
    """
    n, s = f.n, f.space.size
    if (s + 1) ** n > cap:
        raise CapExceeded("restriction enumeration", (s + 1) ** n, cap)
    exact = f.exact
    w = f.space.vector(exact)
    one = Fraction(1) if exact else 1.0
    p = Fraction(p) if exact else float(p)
    delta = Fraction(delta) if exact else float(delta)
    lhs = Fraction(0) if exact else 0.0
    for size in range(n + 1):
        for I in itertools.combinations(range(n), size):
            pI = (one - p) ** size * p ** (n - size)
            if pI == 0:
                continue
            batch = restriction_batch(f.values, I)
            stabs = centered_stability_batch(batch, w, one - delta)
            zw = product_weights(f.space, size, exact).reshape(-1)
            lhs += pI * (zw * stabs).sum()
    rhs = stability(f, one - p * delta) - stability(f, one - p)
    return lhs, rhs


@dataclass
class ScheduleReport:
    exceedance: float
    bound: float
    radius: float
    trials: int
    seed: int

    @property
    def within_bound(self) -> bool:
        return self.exceedance <= self.bound + self.radius


def random_restriction_degree_schedule(
    f: FunctionTable, delta: float, T: int, eta: float, trials: int, seed, cap: int = DEFAULT_CAP
) -> ScheduleReport:
    """Frequency with which a scheduled random restriction keeps high stability.

    The keep-alive rate is uniform on {1, delta, ..., delta^(T-1)}.  The
    event is Stab_{1-delta}[centred restriction] >= eta * Var[f]; a constant
    ``f`` never fires.  Stabilities are precomputed for every (I, z) and the
    trials only index into that table.  ``radius`` is three binomial
    standard deviations at the bound's rate.
    """
    n, s = f.n, f.space.size
    if not 0 < delta < 1 or T < 1:
        raise InvalidInput("need delta in (0, 1) and T >= 1")
    if 2**n * s**n > cap:
        raise CapExceeded("restriction table", 2**n * s**n, cap)
    g = f.numeric()
    var = float(np.real(stability(g, 1.0))) - abs(complex((product_weights(g.space, n) * g.values).sum())) ** 2
    bound = 1.0 / (eta * T)
    q = min(bound, 1.0)
    radius = 3 * math.sqrt(q * (1 - q) / trials)
    if var <= 1e-14:
        return ScheduleReport(0.0, bound, radius, trials, seed)
    w = g.space.nu
    table = {}
    for size in range(n + 1):
        for I in itertools.combinations(range(n), size):
            table[I] = centered_stability_batch(restriction_batch(g.values, I), w, 1 - delta)
    rng = np.random.default_rng(seed)
    ps = delta ** rng.integers(0, T, size=trials)
    alive = rng.random((trials, n)) < ps[:, None]
    zs = rng.choice(s, size=(trials, n), p=w)
    hits = 0
    for t in range(trials):
        I = tuple(c for c in range(n) if not alive[t, c])
        flat = 0
        for c in I:
            flat = flat * s + int(zs[t, c])
        if table[I][flat] >= eta * var:
            hits += 1
    return ScheduleReport(hits / trials, bound, radius, trials, seed)


# ---------------------------------------------------------------------------
# conditioning on an event


def event_probability(space: ProbabilitySpace, n: int, event) -> Fraction:
    inside = _membership(event, n)
    return sum(
        (point_mass(space, x) for x in itertools.product(range(space.size), repeat=n) if inside(x)), Fraction(0)
    )


def conditional_event_probability(space: ProbabilitySpace, rho: GeneralizedRestriction, event) -> Fraction:
    inside = _membership(event, rho.n)
    total = hit = Fraction(0)
    for x in rho.members(space.size):
        p = point_mass(space, x)
        total += p
        if inside(x):
            hit += p
    if total == 0:
        raise ZeroMassEvent("restriction event has zero mass")
    return hit / total


@dataclass(frozen=True, eq=False)
class ConditionalGRR:
    base: GeneralizedRandomRestriction
    pr_event: Fraction
    pr_given: tuple[Fraction, ...]
    weights: tuple[Fraction, ...]


def conditional_grr(grr: GeneralizedRandomRestriction, event) -> ConditionalGRR:
    """Bayes reweighting by Pr[E | E_rho]; needs Pr[E] > epsilon."""
    pr = event_probability(grr.space, grr.n, event)
    if pr <= grr.epsilon:
        raise PreconditionError(f"Pr[E] = {pr} is not above epsilon = {grr.epsilon}")
    given = tuple(conditional_event_probability(grr.space, r, event) for r, _ in grr.entries)
    denom = sum((g * w for g, (_, w) in zip(given, grr.entries)), Fraction(0))
    weights = tuple(g * w / denom for g, (_, w) in zip(given, grr.entries))
    return ConditionalGRR(grr, pr, given, weights)


def conditional_grr_property_check(grr: GeneralizedRandomRestriction, event) -> dict:
    """Check both averaging bounds for the conditional random restriction, exactly."""
    cond = conditional_grr(grr, event)
    eps, pr = grr.epsilon, cond.pr_event
    per_rho_ok = True
    worst = Fraction(0)
    for (_, w), g, cw in zip(grr.entries, cond.pr_given, cond.weights):
        dev = abs(cw - g * w / pr)
        allowed = cw * eps / pr
        worst = max(worst, dev - allowed)
        per_rho_ok &= dev <= allowed
    mix, _ = mixture(grr, event)
    inside = _membership(event, grr.n)
    target = {
        x: point_mass(grr.space, x) / pr
        for x in itertools.product(range(grr.space.size), repeat=grr.n)
        if inside(x) and point_mass(grr.space, x) > 0
    }
    l1 = sum((abs(mix.get(x, Fraction(0)) - target.get(x, Fraction(0))) for x in set(mix) | set(target)), Fraction(0))
    bound = 2 * eps / pr
    return {
        "epsilon": eps,
        "pr_event": pr,
        "per_rho_ok": per_rho_ok,
        "per_rho_worst_excess": worst,
        "l1": l1,
        "l1_bound": bound,
        "l1_ok": l1 <= bound,
    }
