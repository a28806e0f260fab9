import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_pairwise_connected
from parrep_lab.errors import InvalidInput
from parrep_lab.gallery import anticorr, ghz, rectangle
from parrep_lab.structure import (
    SupportSet,
    classify,
    connection_graph,
    is_connected,
    is_coordinatewise_connected,
    is_pairwise_connected,
    pairwise_projection,
    support_of,
    verify_bipartition,
)

GHZ = support_of(ghz())
ANTI = support_of(anticorr())
DIAG = SupportSet.of([(0, 0), (1, 1)])


def test_projection_examples():
    assert pairwise_projection(GHZ, 0, 1).edges == frozenset(itertools.product((0, 1), repeat=2))
    assert pairwise_projection(DIAG, 0, 1).edges == {(0, 0), (1, 1)}
    assert pairwise_projection(ANTI, 0, 1).edges == {(0, 0), (0, 1), (1, 0)}
    with pytest.raises(InvalidInput):
        pairwise_projection(GHZ, 1, 1)


def test_pairwise_connectivity():
    assert is_pairwise_connected(GHZ) == (True, None)
    assert is_pairwise_connected(ANTI)[0]
    ok, w = is_pairwise_connected(DIAG)
    assert not ok and (w.left_part, w.right_part) == ({0}, {0})
    assert verify_bipartition(DIAG, w)


def test_connection_graph():
    assert connection_graph(GHZ).number_of_edges() == 0
    assert not is_connected(GHZ)
    assert is_connected(support_of(rectangle(3, 2)))
    assert is_connected(SupportSet.of([(0, 1, 0)]))


def test_coordinatewise():
    assert is_coordinatewise_connected(support_of(rectangle(3, 2)))[0]
    assert is_coordinatewise_connected(GHZ) == (False, (False, False, False))
    assert is_coordinatewise_connected(SupportSet.of([(0, 0), (0, 1), (1, 1)]))[0]


def test_classify_examples():
    r = classify(GHZ)
    assert (r.connected, r.coordinatewise_connected, r.pairwise_connected, r.full_projections) == (False, False, True, True)
    r = classify(support_of(rectangle(3, 2)))
    assert r.connected and r.coordinatewise_connected and r.pairwise_connected and r.full_projections
    r = classify(DIAG)
    assert (r.connected, r.coordinatewise_connected, r.pairwise_connected, r.full_projections) == (False, False, False, True)
    assert "bipartition" in r.as_dict()


def test_empty_support_rejected():
    with pytest.raises(InvalidInput):
        SupportSet.of([], [(0,)])
    with pytest.raises(InvalidInput):
        SupportSet.of([(2,)], [(0, 1)])


def test_bad_bipartition_rejected():
    from parrep_lab.structure import BipartitionWitness

    assert not verify_bipartition(GHZ, BipartitionWitness(0, 1, frozenset({0}), frozenset({0})))
    assert not verify_bipartition(DIAG, BipartitionWitness(0, 1, frozenset({0, 1}), frozenset({0, 1})))


supports = st.integers(2, 3).flatmap(
    lambda k: st.lists(st.integers(2, 3), min_size=k, max_size=k).flatmap(
        lambda sizes: st.tuples(
            st.just(sizes),
            st.sets(st.tuples(*[st.integers(0, s - 1) for s in sizes]), min_size=1),
        )
    )
)


@settings(max_examples=150, deadline=None)
@given(supports)
def test_pairwise_matches_union_find(data):
    sizes, tuples = data
    alph = [tuple(range(s)) for s in sizes]
    s = SupportSet.of(tuples, alph)
    ok, w = is_pairwise_connected(s)
    assert ok == brute_pairwise_connected(tuples, alph)
    if not ok:
        assert verify_bipartition(s, w)


@settings(max_examples=150, deadline=None)
@given(supports)
def test_implication_lattice(data):
    sizes, tuples = data
    s = SupportSet.of(tuples, [tuple(range(m)) for m in sizes])
    r = classify(s)
    if r.connected:
        assert r.coordinatewise_connected
