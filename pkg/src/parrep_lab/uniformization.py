"""Increment step and the uniformization loop built on it."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .analysis import (
    FunctionTable,
    _CorrCache,
    delta_grid,
    expectation,
    product_pseudorandomness_estimate,
    restrict_values,
)
from .errors import CapExceeded, ConvergenceError, InvalidInput, NoCertificate
from .restrictions import (
    GeneralizedRandomRestriction,
    GeneralizedRestriction,
    apply_generalized,
    compose,
    identity_grr,
    point_mass,
)

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class IncrementConfig:
    """Knobs of the increment construction; ``None`` means the asymptotic default.

    Defaults, for ``m`` live coordinates over an alphabet of size ``s``:
    cell width ``m^(-1/(2s))``, ``ceil(m^(1/(16 s^2)))`` groups of size
    ``ceil(sqrt(m)/2)``, multipliers up to ``floor(m^(1/(4s)))`` and
    multiplier tolerance ``m^(-1/(8 s^2))``.
    """

    cell_width: float | None = None
    num_groups: int | None = None
    group_size: int | None = None
    max_multiplier: int | None = None
    multiplier_tolerance: float | None = None
    fixed_samples: int = 16
    grid_points: int = 8
    restarts: int = 8
    iterations: int = 200
    cap: int = DEFAULT_CAP

    @classmethod
    def desk(cls, s: int, **kw) -> "IncrementConfig":
        """Parameters that still merge at small sizes: fine cells, multipliers up to 2s."""
        return cls(cell_width=1e-6, max_multiplier=2 * s, multiplier_tolerance=1e-6, **kw)

    def resolve(self, m: int, s: int) -> dict:
        return {
            "cell_width": self.cell_width if self.cell_width is not None else m ** (-1 / (2 * s)),
            "num_groups": self.num_groups if self.num_groups is not None else math.ceil(m ** (1 / (16 * s * s))),
            "group_size": self.group_size if self.group_size is not None else math.ceil(math.sqrt(m) / 2),
            "max_multiplier": self.max_multiplier if self.max_multiplier is not None else max(1, math.floor(m ** (1 / (4 * s)))),
            "multiplier_tolerance": (
                self.multiplier_tolerance if self.multiplier_tolerance is not None else m ** (-1 / (8 * s * s))
            ),
        }


@dataclass
class Certificate:
    delta: float
    fixed: tuple[int, ...]
    good: dict  # z -> ProductFunction
    good_mass: float


@dataclass
class IncrementResult:
    grr: GeneralizedRandomRestriction
    before: object
    after: object
    epsilon: Fraction
    certificate: Certificate
    parameters: dict
    groups: dict = field(default_factory=dict)

    @property
    def gain(self):
        return self.after - self.before

    def as_dict(self) -> dict:
        return {
            "before": str(self.before),
            "after": str(self.after),
            "gain": float(self.gain),
            "epsilon": str(self.epsilon),
            "min_free": self.grr.min_free,
            "certificate": {
                "delta": self.certificate.delta,
                "fixed": list(self.certificate.fixed),
                "good_mass": self.certificate.good_mass,
            },
            "parameters": self.parameters,
        }


def _abs2(v):
    return v * v if isinstance(v, (Fraction, int)) else abs(complex(v)) ** 2


def _circ(x: np.ndarray) -> np.ndarray:
    x = np.mod(x, 1.0)
    return np.minimum(x, 1.0 - x)


def find_certificate(f: FunctionTable, gamma: float, seed, config: IncrementConfig) -> Certificate:
    """Search for (delta', I, G) witnessing that ``f`` correlates with products.

    The grid descends from delta' = 1 (nothing fixed) to 1/sqrt(n); below 1
    a handful of fixed sets are sampled.  A fixed set qualifies when the
    values z whose restriction reaches correlation gamma carry mass at
    least gamma / 2 and at least one coordinate stays live.
    """
    n, s = f.n, f.space.size
    vals = f.numeric().values
    w = f.space.nu
    corr = _CorrCache(f.space, gamma, config.restarts, config.iterations, 0)
    rng = np.random.default_rng(seed)
    deltas = sorted(delta_grid(1 / math.sqrt(n) if n else 1.0, config.grid_points), reverse=True)
    tried: set = set()
    for dl in deltas:
        if dl >= 1:
            candidates = [()]
        else:
            candidates = []
            for _ in range(config.fixed_samples):
                I = tuple(c for c in range(n) if rng.random() >= dl)
                if len(I) < n and I not in candidates:
                    candidates.append(I)
        for I in candidates:
            if I in tried:
                continue
            tried.add(I)
            if s ** len(I) > config.cap:
                continue
            good, mass = {}, 0.0
            for z in itertools.product(range(s), repeat=len(I)):
                pz = math.prod(w[v] for v in z)
                if pz == 0:
                    continue
                res = corr(restrict_values(vals, dict(zip(I, z))))
                if res.value >= gamma - 1e-12:
                    good[z] = res.product
                    mass += pz
            if good and mass >= gamma / 2 - 1e-12:
                return Certificate(dl, I, good, mass)
    raise NoCertificate("no correlating product found on the tested grid")


def _pick_multiplier(v: np.ndarray, kmax: int, tol: float) -> int:
    dists = [float(np.max(_circ(k * v))) for k in range(1, kmax + 1)]
    for k, d in enumerate(dists, start=1):
        if d <= tol:
            return k
    return int(np.argmin(dists)) + 1


def _groups(phases: list[np.ndarray], params: dict) -> list[tuple[tuple[int, ...], int]]:
    """Disjoint groups of live coordinates with near-equal phases, each with its multiplier."""
    buckets: dict[tuple, list[int]] = {}
    for j, v in enumerate(phases):
        key = tuple(np.floor(v / params["cell_width"]).astype(int))
        buckets.setdefault(key, []).append(j)
    out = []
    for members in sorted(buckets.values(), key=min):
        k = _pick_multiplier(phases[members[0]], params["max_multiplier"], params["multiplier_tolerance"])
        size = max(params["group_size"], k)
        for start in range(0, len(members) - size + 1, size):
            if len(out) == params["num_groups"]:
                return out
            out.append((tuple(members[start : start + size]), k))
    return out


def increment_grr(g: FunctionTable, gamma: float, seed=0, config: IncrementConfig | None = None) -> IncrementResult:
    """Random restriction raising E|mean(g_rho)|^2, built from a correlating product.

    For z outside the good set every live coordinate stays free.  For z in
    it, each phase group S_i contributes a uniformly random subset T_i of
    size k_i that is forced equal, and the remaining live coordinates are
    fixed from the base measure.  All choices are enumerated, so the
    result is an explicit weighted list.
    """
    if not g.is_bounded():
        raise InvalidInput("function must be 1-bounded")
    config = config or IncrementConfig()
    n, s = g.n, g.space.size
    f = FunctionTable(g.space, g.numeric().values - expectation(g.numeric()))
    cert = find_certificate(f, gamma, seed, config)
    I = cert.fixed
    live = [c for c in range(n) if c not in I]
    m = len(live)
    params = config.resolve(m, s)
    entries: list = []
    groups_used: dict = {}
    singles = tuple((c,) for c in live)
    for z in itertools.product(range(s), repeat=len(I)):
        pz = point_mass(g.space, z)
        if pz == 0:
            continue
        fixed_I = tuple(zip(I, z))
        groups = _groups(cert.good[z].phases(), params) if z in cert.good else []
        if not groups:
            entries.append((GeneralizedRestriction(n, singles, fixed_I), pz))
            continue
        groups_used[z] = [([live[j] for j in S], k) for S, k in groups]
        choices = [list(itertools.combinations(S, k)) for S, k in groups]
        n_choices = math.prod(len(c) for c in choices)
        size = n_choices * s ** (m - sum(k for _, k in groups))
        if size > config.cap:
            raise CapExceeded("increment support", size, config.cap)
        for Ts in itertools.product(*choices):
            merged = {j for T in Ts for j in T}
            J = [live[j] for j in range(m) if j not in merged]
            classes = tuple(tuple(live[j] for j in T) for T in Ts)
            for u in itertools.product(range(s), repeat=len(J)):
                pu = point_mass(g.space, u)
                if pu == 0:
                    continue
                rho = GeneralizedRestriction(n, classes, fixed_I + tuple(zip(J, u)))
                entries.append((rho, pz * pu / n_choices))
    grr = GeneralizedRandomRestriction(g.space, n, tuple(entries))
    before = _abs2(expectation(g))
    after = sum((w * _abs2(expectation(apply_generalized(g, r))) for r, w in grr.entries), Fraction(0) if g.exact else 0.0)
    return IncrementResult(grr, before, after, grr.epsilon, cert, params, groups_used)


# ---------------------------------------------------------------------------


@dataclass
class UniformizationResult:
    grr: GeneralizedRandomRestriction
    steps: int
    bad_probability: Fraction
    potentials: list
    epsilons: list[Fraction]
    slack: list[float]

    @property
    def monotone_within_slack(self) -> bool:
        return all(b >= a - sl - 1e-12 for a, b, sl in zip(self.potentials, self.potentials[1:], self.slack))

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "bad_probability": str(self.bad_probability),
            "potentials": [float(p) for p in self.potentials],
            "epsilon": str(self.grr.epsilon),
            "min_free": self.grr.min_free,
            "monotone_within_slack": self.monotone_within_slack,
        }


class _BadCheck:
    def __init__(self, gamma: float, seed, samples: int):
        self.gamma, self.seed, self.samples = gamma, seed, samples
        self.memo: dict = {}

    def __call__(self, h: FunctionTable) -> bool:
        vals = h.numeric().values
        key = (vals.shape, np.round(vals, 12).tobytes())
        if key not in self.memo:
            centred = FunctionTable(h.space, vals - expectation(h.numeric()))
            if h.n == 0 or np.allclose(centred.values, 0, atol=1e-13):
                self.memo[key] = False
            else:
                est = product_pseudorandomness_estimate(
                    centred, math.sqrt(h.n), self.gamma, samples=self.samples, seed=self.seed, stop_at_failure=True
                )
                self.memo[key] = est.not_pseudorandom
        return self.memo[key]


def _potential(gs: Sequence[FunctionTable], grr: GeneralizedRandomRestriction):
    exact = all(g.exact for g in gs)
    total = Fraction(0) if exact else 0.0
    for r, w in grr.entries:
        for g in gs:
            total += (w if exact else float(w)) * _abs2(expectation(apply_generalized(g, r)))
    return total


def uniformize(
    gs: Sequence[FunctionTable],
    delta: float,
    gamma: float,
    seed=0,
    config: IncrementConfig | None = None,
    samples: int = 200,
    max_steps: int | None = None,
) -> UniformizationResult:
    """Compose increments on bad restrictions until bad mass is at most ``delta``.

    A restriction is bad when some centred restricted function fails the
    (sqrt m, gamma) pseudorandomness test.  Each bad restriction receives
    an increment for its first bad function, kept only if the measured
    gain is positive.  Raises ConvergenceError (carrying the partial result)
    if nothing changes or the step cap ceil(50 r / (delta gamma^3)) is hit.
    """
    if not gs:
        raise InvalidInput("need at least one function")
    space, n = gs[0].space, gs[0].n
    if any(g.n != n or g.space.size != space.size for g in gs):
        raise InvalidInput("functions must share the domain")
    if any(not g.is_bounded() for g in gs):
        raise InvalidInput("functions must be 1-bounded")
    r = len(gs)
    cap = max_steps if max_steps is not None else math.ceil(50 * r / (delta * gamma**3))
    check = _BadCheck(gamma, seed, samples)
    grr = identity_grr(space, n)
    potentials = [_potential(gs, grr)]
    epsilons: list[Fraction] = [grr.epsilon]
    slack: list[float] = []

    def result(steps, bad):
        final = replace(grr, declared=(grr.min_free, grr.epsilon))
        return UniformizationResult(final, steps, bad, potentials, epsilons, slack)

    for step in range(cap + 1):
        flags = []
        for rho, _ in grr.entries:
            flags.append(next((i for i, g in enumerate(gs) if check(apply_generalized(g, rho))), None))
        bad = sum((w for (_, w), b in zip(grr.entries, flags) if b is not None), Fraction(0))
        if bad <= Fraction(delta):
            return result(step, bad)
        if step == cap:
            break
        merged: dict = {}
        changed = False
        step_eps = Fraction(0)
        for idx, ((rho, w), b) in enumerate(zip(grr.entries, flags)):
            inc = None
            if b is not None:
                try:
                    inc = increment_grr(apply_generalized(gs[b], rho), gamma, seed=[*np.atleast_1d(seed), step, idx], config=config)
                except NoCertificate:
                    inc = None
                if inc is not None and inc.gain <= 0:
                    inc = None
            if inc is None:
                merged[rho] = merged.get(rho, Fraction(0)) + w
                continue
            changed = True
            step_eps = max(step_eps, inc.epsilon)
            for sub, w2 in inc.grr.entries:
                key = compose(sub, rho)
                merged[key] = merged.get(key, Fraction(0)) + w * w2
        if not changed:
            raise ConvergenceError("no bad restriction admits a positive increment", result(step, bad))
        grr = GeneralizedRandomRestriction(space, n, tuple(merged.items()))
        potentials.append(_potential(gs, grr))
        epsilons.append(grr.epsilon)
        slack.append(2 * (r - 1) * float(step_eps))
    raise ConvergenceError(f"step cap {cap} reached", result(cap, bad))
