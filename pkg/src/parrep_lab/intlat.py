"""Integer and rational linear algebra on small dense matrices (lists of ints)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InvalidInput

Matrix = list[list[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    cols = list(zip(*b)) if b else []
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def determinant(m: Sequence[Sequence[int]]) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    a = [list(r) for r in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class SNFDecomposition:
    """U @ M @ V == D with U, V unimodular and D diagonal, d1 | d2 | ..."""

    D: Matrix
    U: Matrix
    V: Matrix

    @property
    def factors(self) -> list[int]:
        """Nonzero invariant factors in order."""
        out = []
        for t in range(min(len(self.D), len(self.D[0]) if self.D else 0)):
            if self.D[t][t] == 0:
                break
            out.append(self.D[t][t])
        return out

    def check(self, m: Sequence[Sequence[int]]) -> None:
        assert matmul(matmul(self.U, m), self.V) == self.D, "U M V != D"
        assert abs(determinant(self.U)) == 1 and abs(determinant(self.V)) == 1, "not unimodular"
        f = self.factors
        assert all(b % a == 0 for a, b in zip(f, f[1:])), "divisibility chain broken"
        rows, cols = len(self.D), len(self.D[0]) if self.D else 0
        assert all(self.D[i][j] == 0 for i in range(rows) for j in range(cols) if i != j)


def smith_normal_form(m: Sequence[Sequence[int]]) -> SNFDecomposition:
    """Smith normal form with smallest-absolute-value pivoting."""
    a = [[int(x) for x in row] for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    U, V = identity(rows), identity(cols)

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (a, V):
            for r in M:
                r[i], r[j] = r[j], r[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        for M in (a, U):
            M[dst] = [x + q * y for x, y in zip(M[dst], M[src])]

    def add_col(dst, src, q):
        for M in (a, V):
            for r in M:
                r[dst] += q * r[src]

    for t in range(min(rows, cols)):
        while True:
            nz = [(abs(a[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if a[i][j]]
            if not nz:
                break
            _, pi, pj = min(nz)
            swap_rows(t, pi)
            swap_cols(t, pj)
            p = a[t][t]
            dirty = False
            for i in range(t + 1, rows):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    dirty |= a[i][t] != 0
            for j in range(t + 1, cols):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    dirty |= a[t][j] != 0
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols) if a[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if t < rows and t < cols and a[t][t] < 0:
            for M in (a, U):
                M[t] = [-x for x in M[t]]
        if not any(a[i][j] for i in range(t, rows) for j in range(t, cols)):
            break
    return SNFDecomposition(a, U, V)


def hermite_normal_form(basis: Sequence[Sequence[int]]) -> Matrix:
    """Row-style Hermite form: nonzero rows spanning the same lattice.

    Rows are in echelon form with positive pivots and entries above each
    pivot reduced into ``[0, pivot)``.
    """
    a = [[int(x) for x in row] for row in basis if any(row)]
    cols = len(basis[0]) if basis else 0
    out: Matrix = []
    for c in range(cols):
        while True:
            live = [r for r in a if r[c]]
            if len(live) <= 1:
                break
            piv = min(live, key=lambda r: abs(r[c]))
            a = [r if r is piv or not r[c] else [x - (r[c] // piv[c]) * y for x, y in zip(r, piv)] for r in a]
            a = [r for r in a if any(r)]
        live = [r for r in a if r[c]]
        if live:
            piv = live[0]
            if piv[c] < 0:
                piv = [-x for x in piv]
            a = [r for r in a if not r[c]]
            out.append(piv)
    for i, row in enumerate(out):
        c = next(j for j, x in enumerate(row) if x)
        for k in range(i):
            q = out[k][c] // row[c]
            if q:
                out[k] = [x - q * y for x, y in zip(out[k], row)]
    return out


def lattice_membership(basis: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """True iff ``v`` is an integer combination of the rows of ``basis``."""
    if basis and len(basis[0]) != len(v):
        raise InvalidInput("vector length does not match the basis")
    w = [int(x) for x in v]
    for row in hermite_normal_form(basis):
        c = next(j for j, x in enumerate(row) if x)
        if any(w[:c]):
            return False
        if w[c] % row[c]:
            return False
        q = w[c] // row[c]
        w = [x - q * y for x, y in zip(w, row)]
    return not any(w)


def rational_nullspace(m: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : m x = 0} over the rationals (reduced row echelon)."""
    a = [[Fraction(x) for x in row] for row in m]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            x[pc] = -a[i][f]
        basis.append(x)
    return basis
