import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

from parrep_lab.errors import InvalidInput
from parrep_lab.intlat import (
    determinant,
    hermite_normal_form,
    identity,
    lattice_membership,
    rational_nullspace,
    smith_normal_form,
)


def test_examples():
    d = smith_normal_form([[2, 4], [6, 8]])
    d.check([[2, 4], [6, 8]])
    assert d.factors == [2, 4]
    assert smith_normal_form(identity(3)).factors == [1, 1, 1]
    assert smith_normal_form([[0, 0], [0, 0]]).factors == []


def test_membership_examples():
    basis = [[2, 0], [0, 2]]
    assert not lattice_membership(basis, [1, 1])
    assert lattice_membership(basis, [2, 2])
    assert lattice_membership([[3, 5, 7]], [0, 0, 0])
    assert lattice_membership([], [])
    with pytest.raises(InvalidInput):
        lattice_membership(basis, [1, 2, 3])


matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-6, 6), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_snf_invariants_and_sympy(m):
    d = smith_normal_form(m)
    d.check(m)
    theirs = [abs(int(x)) for x in invariant_factors(Matrix(m), domain=ZZ) if x != 0]
    assert d.factors == theirs


@settings(max_examples=200, deadline=None)
@given(matrices, st.lists(st.integers(-3, 3), min_size=5, max_size=5))
def test_membership_of_combinations(m, coeffs):
    c = len(m[0])
    v = [sum(coeffs[i] * m[i][j] for i in range(len(m))) for j in range(c)]
    assert lattice_membership(m, v)
    h = hermite_normal_form(m)
    for row in h:
        assert lattice_membership(m, row)
    for row in m:
        assert lattice_membership(h, row)


def test_nonmembership_by_determinant():
    rng = random.Random(1)
    for _ in range(50):
        m = [[rng.randint(-5, 5) for _ in range(3)] for _ in range(3)]
        det = determinant(m)
        if abs(det) < 2:
            continue
        # a unit vector lies in a full-rank lattice iff the solution of x M = e is integral
        hits = sum(lattice_membership(m, e) for e in identity(3))
        assert hits < 3


def test_rational_nullspace():
    basis = rational_nullspace([[1, 1, 0], [0, 1, 1]], 3)
    assert len(basis) == 1
    x = basis[0]
    assert x[0] + x[1] == 0 and x[1] + x[2] == 0
