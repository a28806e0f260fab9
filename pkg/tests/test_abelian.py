import itertools
import random

import pytest

from oracles import brute_embedding_exists, zm_embedding_exists
from parrep_lab.abelian import (
    bipartition_embedding_witness,
    check_marginal_condition,
    extend_from_marginal,
    has_nontrivial_embedding,
    has_Z_embedding,
    marginal_pairwise_scan,
    relation_matrix,
    universal_embedding,
    verify_witness,
)
from parrep_lab.errors import InvalidInput
from parrep_lab.gallery import anticorr, ghz, rectangle
from parrep_lab.structure import SupportSet, support_of

GHZ = support_of(ghz())
ANTI = support_of(anticorr())


def test_relation_matrix_shapes():
    m = relation_matrix(GHZ)
    assert len(m.rows) == 4 and len(m.columns) == 6 and all(sum(r) == 3 for r in m.rows)
    assert relation_matrix(SupportSet.of([(0, 0)], [(0, 1), (0, 1)])).as_lists() == [[1, 0, 1, 0]]
    assert len(relation_matrix(ANTI).rows) == 3


def test_ghz_universal_reduces_to_parity():
    w = universal_embedding(GHZ)
    assert not w.trivial and verify_witness(GHZ, w)
    assert 2 in w.group.torsion_factors
    t = w.group.torsion_factors.index(2)
    # the Z/2 component of the universal map is a nontrivial parity embedding
    for m in w.sigma:
        assert m[0][t] != m[1][t]
    assert has_Z_embedding(GHZ) is None


def test_anticorr_integer_witness():
    w = has_Z_embedding(ANTI)
    assert w is not None and verify_witness(ANTI, w)
    diffs = {m[1][0] - m[0][0] for m in w.sigma}
    assert len(diffs) == 1  # same slope for every player, as for 3x - 1
    slope = diffs.pop()
    assert slope % 3 == 0 and slope != 0


def test_rectangles_trivial():
    for k, s in [(2, 2), (2, 3), (3, 2)]:
        sup = support_of(rectangle(k, s))
        assert universal_embedding(sup).trivial
        assert has_Z_embedding(sup) is None
        assert not has_nontrivial_embedding(sup)


def test_marginal_condition():
    assert check_marginal_condition(GHZ).holds
    assert check_marginal_condition(ANTI).holds
    assert not check_marginal_condition(SupportSet.of([(0, 0), (1, 1)])).holds


def test_bipartition_witness():
    d = SupportSet.of([(0, 0), (1, 1)])
    w = bipartition_embedding_witness(d, 0, 1, ({0}, {0}))
    assert verify_witness(d, w)
    with pytest.raises(InvalidInput):
        bipartition_embedding_witness(GHZ, 0, 1, ({0}, {0}))
    s3 = SupportSet.of([(0, 0, 0), (1, 1, 0)], [(0, 1), (0, 1), (0, 1)])
    w3 = bipartition_embedding_witness(s3, 0, 1, ({0}, {0}))
    assert verify_witness(s3, w3)
    assert len({v for v in w3.sigma[2].values()}) == 1


def test_extend_from_marginal():
    s = SupportSet.of([(0, 0, 0), (1, 1, 0), (0, 0, 1), (1, 1, 1)])
    proj = s.project((0, 1))
    w = bipartition_embedding_witness(proj, 0, 1, ({0}, {0}))
    ext = extend_from_marginal(s, (0, 1), w)
    assert verify_witness(s, ext)


def test_witnesses_agree_with_oracle_on_random_supports():
    rng = random.Random(3)
    for _ in range(150):
        k = rng.choice([2, 3])
        sizes = [rng.randint(2, 3) for _ in range(k)]
        alph = [tuple(range(m)) for m in sizes]
        tuples = [q for q in itertools.product(*alph) if rng.random() < 0.5] or [tuple(0 for _ in alph)]
        s = SupportSet.of(tuples, alph)
        u = universal_embedding(s)
        assert verify_witness(s, u, require_nontrivial=not u.trivial)
        assert (not u.trivial) == brute_embedding_exists(tuples, alph)
        z = has_Z_embedding(s)
        if z is not None:
            assert verify_witness(s, z)


def test_oracle_sanity():
    assert zm_embedding_exists(sorted(GHZ.tuples), GHZ.alphabets, 2)
    assert not zm_embedding_exists(sorted(GHZ.tuples), GHZ.alphabets, 3)


def test_marginal_scan_runs():
    sups = [support_of(g) for g in (ghz(), anticorr(), rectangle(3, 2))]
    assert marginal_pairwise_scan(sups) == []
