"""Slow, independent reference computations used to cross-check the library."""

from __future__ import annotations

import itertools
from fractions import Fraction


def brute_value(questions, answers, dist, predicate) -> Fraction:
    """Enumerate every tuple of deterministic answer tables."""
    k = len(questions)
    per_player = [list(itertools.product(answers[j], repeat=len(questions[j]))) for j in range(k)]
    index = [{x: t for t, x in enumerate(questions[j])} for j in range(k)]
    best = Fraction(0)
    for tables in itertools.product(*per_player):
        win = Fraction(0)
        for q, p in dist.items():
            a = tuple(tables[j][index[j][q[j]]] for j in range(k))
            if predicate(q, a):
                win += p
        best = max(best, win)
    return best


def _search(support, alphabets, values, add, zero):
    """Backtracking search for a non-constant sigma with sum sigma_j(q_j) = 0 on the support.

    Shifting sigma_j by constants that sum to zero keeps a solution, so
    sigma_j(first symbol) = 0 for all players but the last.
    """
    k = len(alphabets)
    pinned = {(j, alphabets[j][0]) for j in range(k - 1)}
    # greedy order: next variable closes the most constraints
    order = sorted(pinned)
    rest = [(j, a) for j in range(k) for a in alphabets[j] if (j, a) not in pinned]
    while rest:
        done = set(order)
        v = max(rest, key=lambda v: sum(1 for q in support if (v[0], q[v[0]]) == v and all((j, q[j]) in done for j in range(k) if j != v[0])))
        order.append(v)
        rest.remove(v)
    pos = {v: t for t, v in enumerate(order)}
    checks: dict = {}
    for q in support:
        last = max(pos[(j, q[j])] for j in range(k))
        checks.setdefault(last, []).append(q)
    assigned: dict = {}

    def partial(q, skip):
        total = zero
        for j in range(k):
            if j != skip:
                total = add(total, assigned[(j, q[j])])
        return total

    def nontrivial():
        return any(len({assigned[(j, a)] for a in alphabets[j]}) > 1 for j in range(k))

    def rec(t):
        if t == len(order):
            return nontrivial()
        j, a = order[t]
        closing = checks.get(t, ())
        if (j, a) in pinned:
            choices = [zero]
        elif closing:
            # the first closing constraint forces the value
            need = partial(closing[0], j)
            choices = [v for v in values if add(need, v) == zero]
        else:
            choices = values
        for v in choices:
            assigned[(j, a)] = v
            if all(add(partial(q, j), v) == zero for q in closing) and rec(t + 1):
                return True
        assigned.pop((j, a), None)
        return False

    return rec(0)


def zm_embedding_exists(support, alphabets, m: int) -> bool:
    return _search(support, alphabets, list(range(m)), lambda x, y: (x + y) % m, 0)


def bounded_z_embedding_exists(support, alphabets, bound: int) -> bool:
    return _search(support, alphabets, list(range(-bound, bound + 1)), lambda x, y: x + y, 0)


def brute_embedding_exists(support, alphabets, max_modulus: int = 12, bound: int = 2) -> bool:
    if bounded_z_embedding_exists(support, alphabets, bound):
        return True
    return any(zm_embedding_exists(support, alphabets, m) for m in range(2, max_modulus + 1))


def brute_pairwise_connected(support, alphabets) -> bool:
    """Union-find over each two-coordinate projection; every alphabet label is a vertex."""
    k = len(alphabets)
    for i, j in itertools.combinations(range(k), 2):
        parent: dict = {("L", a): ("L", a) for a in alphabets[i]}
        parent.update({("R", b): ("R", b) for b in alphabets[j]})

        def find(x):
            while parent.setdefault(x, x) != x:
                x = parent[x]
            return x

        for q in support:
            parent[find(("L", q[i]))] = find(("R", q[j]))
        roots = {find(x) for x in list(parent)}
        if len(roots) > 1:
            return False
    return True


def brute_stability(values: dict, weights, n: int, rho) -> Fraction:
    """Stab_rho[f] = sum_x sum_y mu(x) f(x) f(y) prod_c K(x_c, y_c), K the resampling kernel."""
    s = len(weights)
    total = Fraction(0)
    pts = list(itertools.product(range(s), repeat=n))

    def mu(x):
        out = Fraction(1)
        for c in x:
            out *= weights[c]
        return out

    for x in pts:
        for y in pts:
            kern = Fraction(1)
            for a, b in zip(x, y):
                kern *= (rho if a == b else 0) + (1 - rho) * weights[b]
            total += mu(x) * values[x] * values[y] * kern
    return total


def brute_embedding_losing(base, n, tables, event_sets, delta, T) -> Fraction:
    """Losing probability of the planted single-copy strategy, from first principles.

    Enumerates the planted coordinate i, the keep-alive rate delta^t, the set
    of other coordinates that stay alive, a full point of the conditioned
    repeated distribution (its fixed coordinates are the shared advice), the
    planted question, and then each player's private completion.
    """
    k = base.num_players
    supp = list(base.support)
    marg = [base.marginal(j) for j in range(k)]
    pts = []
    for combo in itertools.product(supp, repeat=n):
        pt = tuple(q for q, _ in combo)
        if all(tuple(pt[c][j] for c in range(n)) in event_sets[j] for j in range(k)):
            w = Fraction(1)
            for _, p in combo:
                w *= p
            pts.append((pt, w))
    alpha = sum(w for _, w in pts)
    lose = Fraction(0)
    for i in range(n):
        others = [c for c in range(n) if c != i]
        for t in range(T):
            p = Fraction(delta) ** t
            for alive_mask in itertools.product((0, 1), repeat=len(others)):
                w_alive = Fraction(1)
                for b in alive_mask:
                    w_alive *= p if b else 1 - p
                if w_alive == 0:
                    continue
                fixed = [c for c, b in zip(others, alive_mask) if not b]
                for pt, wp in pts:
                    for x, qx in supp:
                        answers = []
                        for j in range(k):
                            num, tot = {}, Fraction(0)
                            for vec in event_sets[j]:
                                if vec[i] != x[j] or any(vec[c] != pt[c][j] for c in fixed):
                                    continue
                                wv = Fraction(1)
                                for v in vec:
                                    wv *= marg[j].get(v, Fraction(0))
                                if wv == 0:
                                    continue
                                a = tables[j][vec][i]
                                num[a] = num.get(a, Fraction(0)) + wv
                                tot += wv
                            if tot == 0:
                                answers.append([(base.answer_alphabets[j][0], Fraction(1))])
                            else:
                                answers.append([(a, w / tot) for a, w in num.items()])
                        for combo in itertools.product(*answers):
                            if not base.predicate(x, tuple(a for a, _ in combo)):
                                w = Fraction(1, n) * Fraction(1, T) * w_alive * (wp / alpha) * qx
                                for _, wa in combo:
                                    w *= wa
                                lose += w
    return lose
