"""Noise operators, stability and product correlations on product spaces.

Functions on ``Sigma^n`` are dense numpy tensors of shape ``(s,) * n``.  A
table with ``dtype=object`` holding ``Fraction`` entries runs in exact mode;
every operation below then stays rational, provided the noise rate is a
``Fraction`` too.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .errors import InvalidInput, ZeroMassEvent


@dataclass(frozen=True, eq=False)
class ProbabilitySpace:
    symbols: tuple[Hashable, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.symbols) != len(self.weights) or not self.symbols:
            raise InvalidInput("space needs one weight per symbol")
        if any(w < 0 for w in self.weights) or sum(self.weights) != 1:
            raise InvalidInput("weights must be nonnegative and sum to 1")

    @classmethod
    def uniform(cls, s: int) -> "ProbabilitySpace":
        return cls(tuple(range(s)), tuple(Fraction(1, s) for _ in range(s)))

    @classmethod
    def of(cls, weights: Mapping[Hashable, Fraction] | Sequence) -> "ProbabilitySpace":
        if isinstance(weights, Mapping):
            return cls(tuple(weights), tuple(Fraction(w) for w in weights.values()))
        return cls(tuple(range(len(weights))), tuple(Fraction(w) for w in weights))

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def full_support(self) -> bool:
        return all(w > 0 for w in self.weights)

    @property
    def nu(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def vector(self, exact: bool) -> np.ndarray:
        return np.array(self.weights, dtype=object) if exact else self.nu

    @property
    def index(self) -> dict:
        return {a: t for t, a in enumerate(self.symbols)}


@dataclass(frozen=True, eq=False)
class FunctionTable:
    space: ProbabilitySpace
    values: np.ndarray

    def __post_init__(self):
        if not isinstance(self.values, np.ndarray):
            object.__setattr__(self, "values", np.asarray(self.values))
        if any(d != self.space.size for d in self.values.shape):
            raise InvalidInput("table shape does not match the alphabet")

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @classmethod
    def from_function(cls, space: ProbabilitySpace, n: int, fn: Callable[[tuple], complex], exact: bool = False):
        vals = np.empty((space.size,) * n, dtype=object if exact else complex)
        for x in itertools.product(range(space.size), repeat=n):
            vals[x] = fn(x)
        return cls(space, vals)

    def numeric(self) -> "FunctionTable":
        return FunctionTable(self.space, self.values.astype(complex)) if self.exact else self

    def is_bounded(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values.astype(complex)) <= 1 + tol))


def _weights(space: ProbabilitySpace, exact: bool) -> np.ndarray:
    return space.vector(exact)


def product_weights(space: ProbabilitySpace, n: int, exact: bool = False) -> np.ndarray:
    w = _weights(space, exact)
    out = np.array(Fraction(1) if exact else 1.0, dtype=object if exact else float)
    for _ in range(n):
        out = np.multiply.outer(out, w)
    return out


def _conj(a: np.ndarray) -> np.ndarray:
    return a if a.dtype == object else np.conj(a)


def _check_same(f: FunctionTable, g: FunctionTable) -> None:
    if f.space is not g.space and (f.space.symbols, f.space.weights) != (g.space.symbols, g.space.weights):
        raise InvalidInput("functions live on different spaces")
    if f.n != g.n:
        raise InvalidInput("functions have different dimensions")


def expectation(f: FunctionTable):
    """nu(f), the mean under the product measure."""
    return np.sum(product_weights(f.space, f.n, f.exact) * f.values)


def inner_product(f: FunctionTable, g: FunctionTable):
    _check_same(f, g)
    exact = f.exact and g.exact
    return np.sum(product_weights(f.space, f.n, exact) * f.values * _conj(g.values))


def _noise_axes(values: np.ndarray, rho, w: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    out = values
    for ax in axes:
        avg = np.tensordot(out, w, axes=([ax], [0]))
        out = rho * out + (1 - rho) * np.expand_dims(avg, ax)
    return out


def noise_operator(f: FunctionTable, rho) -> FunctionTable:
    """Each coordinate kept with probability rho, else resampled from nu."""
    if not 0 <= rho <= 1:
        raise InvalidInput("noise rate must lie in [0, 1]")
    return FunctionTable(f.space, _noise_axes(f.values, rho, _weights(f.space, f.exact), range(f.n)))


def stability(f: FunctionTable, rho):
    """Stab_rho[f] = <f, T_rho f>, a nonnegative real."""
    val = inner_product(f, noise_operator(f, rho))
    return val if f.exact else float(np.real(val))


def variance(f: FunctionTable):
    m = expectation(f)
    return stability(f, 1) - (m * m if f.exact else abs(m) ** 2)


# -- batched restrictions ----------------------------------------------------


def restrict_values(values: np.ndarray, fixed: Mapping[int, int]) -> np.ndarray:
    """Fix coordinates to symbol indices; the remaining axes keep their order."""
    idx = tuple(fixed[c] if c in fixed else slice(None) for c in range(values.ndim))
    return values[idx]


def restriction_batch(values: np.ndarray, fixed_set: Sequence[int]) -> np.ndarray:
    """All restrictions fixing ``fixed_set``, stacked on axis 0 (z in product order)."""
    fixed_set = sorted(fixed_set)
    moved = np.moveaxis(values, fixed_set, list(range(len(fixed_set))))
    rest = moved.shape[len(fixed_set):]
    return moved.reshape((-1,) + rest)


def centered_stability_batch(batch: np.ndarray, w: np.ndarray, rho) -> np.ndarray:
    """Stab_rho of each centred function in a batch (axis 0 indexes the batch)."""
    m = batch.ndim - 1
    pw = np.array(1, dtype=w.dtype)
    for _ in range(m):
        pw = np.multiply.outer(pw, w)
    axes = tuple(range(1, m + 1))
    means = (batch * pw).sum(axis=axes) if m else batch
    centred = batch - means.reshape((-1,) + (1,) * m)
    noisy = _noise_axes(centred, rho, w, range(1, m + 1))
    vals = (centred * _conj(noisy) * pw).sum(axis=axes) if m else centred * _conj(noisy)
    return vals if batch.dtype == object else np.real(vals)


# -- distribution distances ----------------------------------------------------


def _align(P, Q) -> tuple[list, list]:
    if isinstance(P, Mapping) or isinstance(Q, Mapping):
        P, Q = dict(P), dict(Q)
        keys = list(dict.fromkeys(list(P) + list(Q)))
        return [P.get(k, 0) for k in keys], [Q.get(k, 0) for k in keys]
    P, Q = list(np.ravel(P)), list(np.ravel(Q))
    if len(P) != len(Q):
        raise InvalidInput("distributions have different index sets")
    return P, Q


def l1_distance(P, Q):
    p, q = _align(P, Q)
    return sum(abs(a - b) for a, b in zip(p, q))


def kl_divergence(P, Q) -> float:
    """Relative entropy D(P || Q) in bits."""
    p, q = _align(P, Q)
    total = 0.0
    for a, b in zip(p, q):
        if a > 0:
            if b <= 0:
                raise InvalidInput("KL divergence needs supp(P) inside supp(Q)")
            total += float(a) * math.log2(float(a) / float(b))
    return total


def marginal_drift_bound(space: ProbabilitySpace, n: int, event) -> tuple[Fraction, float]:
    """Average l1 drift of the coordinate marginals under conditioning on an event.

    ``event`` is a boolean array of shape ``(s,) * n`` or a predicate on index
    tuples.  Returns ``(lhs, rhs)`` with the left side exact.
    """
    s = space.size
    if callable(event):
        mask = np.zeros((s,) * n, dtype=bool)
        for x in itertools.product(range(s), repeat=n):
            mask[x] = bool(event(x))
    else:
        mask = np.asarray(event, dtype=bool)
    pw = product_weights(space, n, exact=True)
    mass = pw[mask].sum() if mask.any() else Fraction(0)
    if mass == 0:
        raise ZeroMassEvent("event has probability zero")
    cond = np.where(mask, pw, Fraction(0)) / mass
    total = Fraction(0)
    for i in range(n):
        axes = tuple(a for a in range(n) if a != i)
        marg = cond.sum(axis=axes) if axes else cond
        total += sum(abs(marg[a] - space.weights[a]) for a in range(s))
    lhs = total / n
    rhs = math.sqrt(2.0 / n * math.log2(1 / mass)) if mass < 1 else 0.0
    return lhs, rhs


# -- product functions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProductFunction:
    tables: tuple[np.ndarray, ...]

    def phases(self) -> list[np.ndarray]:
        """Angles in [0, 1) with the first symbol's phase normalised to zero."""
        out = []
        for t in self.tables:
            ang = np.angle(t * np.conj(t[0]) if abs(t[0]) > 0 else t) / (2 * np.pi)
            ang = np.mod(ang, 1.0)
            ang[np.isclose(ang, 1.0, atol=1e-12)] = 0.0
            ang[np.isclose(ang, 0.0, atol=1e-12)] = 0.0
            out.append(ang)
        return out


def correlation_with_product(f: FunctionTable, P: ProductFunction) -> complex:
    out = f.numeric().values * product_weights(f.space, f.n)
    for t in reversed(P.tables):
        out = np.tensordot(out, t, axes=([out.ndim - 1], [0]))
    return complex(out)


def _coefficients(F: np.ndarray, tables: list, i: int) -> np.ndarray:
    out = F
    for j in range(F.ndim - 1, -1, -1):
        if j != i:
            out = np.tensordot(out, tables[j], axes=([j], [0]))
    return out


@dataclass
class CorrelationResult:
    value: float
    product: ProductFunction
    trace: list[float] = field(default_factory=list)


def max_product_correlation(
    f: FunctionTable,
    restarts: int = 8,
    iterations: int = 200,
    seed: int = 0,
    tol: float = 1e-9,
    target: float | None = None,
) -> CorrelationResult:
    """Lower bound on max |E[f * prod P_i]| over 1-bounded product functions.

    Multilinear coordinate ascent: each P_i(a) is set to the conjugate phase
    of its coefficient, which can only increase the objective.  The first
    start uses all-ones tables; the others use phases seeded by
    ``(seed, restart)``.  With ``target`` set, stops as soon as it is reached.
    """
    n, s = f.n, f.space.size
    F = f.numeric().values * product_weights(f.space, n)
    if n == 0:
        return CorrelationResult(abs(complex(F)), ProductFunction(()), [abs(complex(F))])
    best: CorrelationResult | None = None
    for r in range(restarts):
        if r == 0:
            tables = [np.ones(s, dtype=complex) for _ in range(n)]
        else:
            rng = np.random.default_rng([seed, r])
            tables = [np.exp(2j * np.pi * rng.random(s)) for _ in range(n)]
        current = abs(complex(_coefficients(F, tables, 0) @ tables[0]))
        trace = [current]
        for _ in range(iterations):
            for i in range(n):
                c = _coefficients(F, tables, i)
                mag = np.abs(c)
                nz = mag > 1e-15
                new = tables[i].copy()
                new[nz] = np.conj(c[nz]) / mag[nz]
                tables[i] = new
            value = abs(complex(_coefficients(F, tables, 0) @ tables[0]))
            gain = value - current
            current = max(current, value)
            trace.append(current)
            if gain < tol:
                break
        if best is None or current > best.value:
            best = CorrelationResult(current, ProductFunction(tuple(tables)), trace)
        if target is not None and best.value >= target:
            break
    return best


# -- pseudorandomness estimate ---------------------------------------------------


def delta_grid(lo: float, points: int = 8) -> list[float]:
    """Geometric grid on [lo, 1], ascending, with both ends included."""
    lo = min(max(lo, 1e-12), 1.0)
    if points <= 1 or lo >= 1:
        return [1.0]
    return [lo ** (1 - t / (points - 1)) for t in range(points)]


@dataclass
class PseudorandomnessEstimate:
    deltas: list[float]
    estimates: list[float]
    radii: list[float]
    samples: int
    seed: int
    exhaustive: bool
    not_pseudorandom: bool
    certificate: dict | None

    def as_dict(self) -> dict:
        return {
            "deltas": self.deltas,
            "estimates": self.estimates,
            "radii": self.radii,
            "samples": self.samples,
            "seed": self.seed,
            "exhaustive": self.exhaustive,
            "not_pseudorandom": self.not_pseudorandom,
        }


class _CorrCache:
    def __init__(self, space, gamma, restarts, iterations, seed):
        self.space, self.gamma = space, gamma
        self.restarts, self.iterations, self.seed = restarts, iterations, seed
        self.memo: dict = {}

    def __call__(self, vals: np.ndarray) -> CorrelationResult:
        key = (vals.shape, np.round(vals.astype(complex), 12).tobytes())
        if key not in self.memo:
            flat = vals.astype(complex).ravel()
            if flat.size == 0 or np.allclose(flat, flat[0], atol=1e-13):
                c = complex(flat[0]) if flat.size else 0j
                tables = tuple(np.ones(self.space.size, dtype=complex) for _ in range(vals.ndim))
                self.memo[key] = CorrelationResult(abs(c), ProductFunction(tables), [abs(c)])
            else:
                self.memo[key] = max_product_correlation(
                    FunctionTable(self.space, vals.astype(complex)), self.restarts, self.iterations,
                    self.seed, target=self.gamma,
                )
        return self.memo[key]


def product_pseudorandomness_estimate(
    f: FunctionTable,
    n_prime: float,
    gamma: float,
    samples: int = 200,
    seed: int = 0,
    grid_points: int = 8,
    center: str = "none",
    exhaustive: bool | None = None,
    enumeration_budget: int = 4096,
    restarts: int = 8,
    iterations: int = 200,
    stop_at_failure: bool = False,
) -> PseudorandomnessEstimate:
    """Probability that a delta-random restriction of ``f`` correlates with a product.

    For each delta on the grid over ``[n'/n, 1]`` the fixed set is drawn
    with each coordinate fixed with probability ``1 - delta`` and the values
    from the base measure.  ``center="restriction"`` subtracts each
    restriction's own mean before measuring the correlation.  The exhaustive
    mode (automatic when ``(1+s)^n`` is within budget) is exact and has
    radius 0; otherwise each delta gets ``samples`` draws and a 3-sigma radius.
    """
    n, s = f.n, f.space.size
    w = f.space.nu
    vals = f.numeric().values
    corr = _CorrCache(f.space, gamma, restarts, iterations, seed)
    deltas = sorted(delta_grid(n_prime / n if n else 1.0, grid_points), reverse=True)
    if exhaustive is None:
        exhaustive = (1 + s) ** n <= enumeration_budget

    def hit(I: tuple, z: tuple) -> tuple[bool, CorrelationResult, np.ndarray]:
        h = restrict_values(vals, dict(zip(I, z)))
        if center == "restriction":
            h = h - (h * product_weights(f.space, h.ndim)).sum()
        res = corr(h)
        return res.value >= gamma - 1e-12, res, h

    estimates, radii, cert = [], [], None
    for dl in deltas:
        if exhaustive:
            prob = 0.0
            for size in range(n + 1):
                for I in itertools.combinations(range(n), size):
                    pI = (1 - dl) ** size * dl ** (n - size)
                    if pI == 0:
                        continue
                    for z in itertools.product(range(s), repeat=size):
                        pz = math.prod(w[v] for v in z)
                        if pz == 0:
                            continue
                        ok, res, _ = hit(I, z)
                        if ok:
                            prob += pI * pz
                            if cert is None:
                                cert = {"delta": dl, "fixed": I, "values": z, "correlation": res.value}
            est, rad = prob, 0.0
        else:
            rng = np.random.default_rng([seed, int(dl * 1e9)])
            count = 0
            for _ in range(samples):
                I = tuple(c for c in range(n) if rng.random() >= dl)
                z = tuple(int(v) for v in rng.choice(s, size=len(I), p=w))
                ok, res, _ = hit(I, z)
                if ok:
                    count += 1
                    if cert is None:
                        cert = {"delta": dl, "fixed": I, "values": z, "correlation": res.value}
            est = count / samples
            rad = 3 * math.sqrt(max(est * (1 - est), 1 / samples) / samples)
        estimates.append(est)
        radii.append(rad)
        if stop_at_failure and est - rad >= gamma:
            break
    fails = any(e - r >= gamma for e, r in zip(estimates, radii))
    return PseudorandomnessEstimate(
        deltas[: len(estimates)], estimates, radii, samples, seed, exhaustive, fails, cert if fails else None
    )


# -- k-wise correlation ------------------------------------------------------------


def k_wise_correlation(fs: Sequence[FunctionTable], mu: Mapping[tuple, Fraction]) -> complex:
    """E over (x_1..x_k) ~ mu^n of prod f_i(x_i), by summing over supp(mu)^n."""
    n = fs[0].n
    if any(f.n != n for f in fs):
        raise InvalidInput("all functions need the same dimension")
    supp = [(q, float(p)) for q, p in mu.items() if p > 0]
    if any(len(q) != len(fs) for q, _ in supp):
        raise InvalidInput("measure arity does not match the number of functions")
    combo = np.indices((len(supp),) * n).reshape(n, -1) if n else np.zeros((0, 1), dtype=int)
    weight = np.ones(combo.shape[1])
    for t in range(n):
        weight = weight * np.array([p for _, p in supp])[combo[t]]
    total = weight.astype(complex)
    for i, f in enumerate(fs):
        idx = f.space.index
        lab = np.array([idx[q[i]] for q, _ in supp])
        coords = tuple(lab[combo[t]] for t in range(n))
        total = total * f.numeric().values[coords]
    return complex(total.sum())


def independence_gap(fs: Sequence[FunctionTable], mu: Mapping[tuple, Fraction]) -> float:
    prod = 1.0 + 0j
    for i, f in enumerate(fs):
        marg: dict = {}
        for q, p in mu.items():
            marg[q[i]] = marg.get(q[i], 0) + p
        w = np.array([float(marg.get(a, 0)) for a in f.space.symbols])
        pw = np.array(1.0)
        for _ in range(f.n):
            pw = np.multiply.outer(pw, w)
        prod *= complex((f.numeric().values * pw).sum())
    return abs(k_wise_correlation(fs, mu) - prod)
