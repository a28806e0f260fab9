import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_value
from parrep_lab.errors import CapExceeded, InvalidInput, ZeroMassEvent
from parrep_lab.gallery import anticorr, ghz, random_binary3
from parrep_lab.game import (
    Game,
    ProductEvent,
    ProductStrategy,
    TablePredicate,
    binary_pair_reduction,
    condition,
    coordinate_question,
    coordinate_win_probability,
    eliminate_deterministic_player,
    game_from_json,
    game_to_json,
    merge_players,
    parse_rational,
    repeat_game,
    restrict_repeated_game,
    validate_game,
    value,
    value_conditioned,
    win_probability,
)
from parrep_lab.restrictions import GeneralizedRestriction

BITS = [(0, 1)]


def two_question_game(pred=lambda x, a: x[0] == a[0]):
    return Game.build([(0, 1)], [(0, 1)], {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}, pred)


def constant_game(win: bool):
    return Game.build([(0, 1)] * 2, [(0, 1)] * 2, {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)}, lambda x, a: win)


class TestValidation:
    def test_ghz_ok(self):
        assert validate_game(ghz()).ok

    def test_mass_violation(self):
        g = Game.build([(0, 1)], [(0,)], {(0,): Fraction(1, 2), (1,): Fraction(1, 4)}, lambda x, a: True)
        rep = validate_game(g)
        assert any("mass 3/4" in v for v in rep.violations)

    def test_predicate_not_total(self):
        rows = {((0,), (0,)): True}
        g = Game.build([(0, 1)], [(0,)], {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}, rows)
        assert "predicate not total" in validate_game(g).violations

    def test_dangling_and_duplicates(self):
        g = Game((("a", "a"),), (("x",),), {("b",): Fraction(1)}, TablePredicate({}))
        v = validate_game(g).violations
        assert any("duplicate" in s for s in v)
        assert any("dangling question" in s for s in v)

    def test_negative_probability(self):
        g = Game.build([(0, 1)], [(0,)], {(0,): Fraction(3, 2), (1,): Fraction(-1, 2)}, lambda x, a: True)
        assert any("negative" in s for s in validate_game(g).violations)

    def test_parse_rational(self):
        assert parse_rational("3/4") == Fraction(3, 4)
        assert parse_rational(1) == 1
        for bad in ("0.25", 0.25, "1e-3", "x/y", True):
            with pytest.raises(InvalidInput):
                parse_rational(bad)


class TestRepeat:
    def test_identity_case(self):
        g = ghz()
        g1 = repeat_game(g, 1)
        assert len(g1.support) == len(g.support)
        for q, p in g1.support:
            assert g.distribution[coordinate_question(q, 0)] == p

    def test_product_distribution(self):
        g2 = repeat_game(two_question_game(), 2)
        assert sorted(p for _, p in g2.support) == [Fraction(1, 4)] * 4

    def test_repeated_predicate_is_conjunction(self):
        g = two_question_game()
        g2 = repeat_game(g, 2)
        for q in g2.question_alphabets[0]:
            for a in g2.answer_alphabets[0]:
                expect = g.predicate((q[0],), (a[0],)) and g.predicate((q[1],), (a[1],))
                assert g2.predicate((q,), (a,)) == expect

    def test_cap(self):
        with pytest.raises(CapExceeded):
            repeat_game(ghz(), 6, cap=100)

    def test_bad_n(self):
        with pytest.raises(InvalidInput):
            repeat_game(ghz(), 0)


class TestValue:
    def test_constant_predicates(self):
        for win in (True, False):
            g = constant_game(win)
            s = ProductStrategy(({0: 0, 1: 0}, {0: 1, 1: 1}))
            assert win_probability(g, s) == int(win)
        assert value(constant_game(True))[0] == 1

    def test_ghz_all_zero_answers(self):
        g = ghz()
        s = ProductStrategy(tuple({0: 0, 1: 0} for _ in range(3)))
        # parity 0 wins only on 000
        assert win_probability(g, s) == Fraction(1, 4)

    def test_ghz_value_and_repetition(self):
        v, s = value(ghz())
        assert v == Fraction(3, 4) and win_probability(ghz(), s) == v
        v2, s2 = value(repeat_game(ghz(), 2))
        assert v**2 <= v2 <= v
        assert v2 == Fraction(5, 8)

    def test_anticorr(self):
        assert value(anticorr())[0] == Fraction(2, 3)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_oracle(self, seed):
        g = random_binary3(seed)
        v, s = value(g)
        assert v == brute_value(g.question_alphabets, g.answer_alphabets, g.distribution, g.predicate)
        assert win_probability(g, s) == v

    def test_value_cap(self):
        with pytest.raises(CapExceeded):
            value(repeat_game(ghz(), 2), cap=1000)


class TestConditioning:
    def test_full_event(self):
        g = ghz()
        assert value_conditioned(g, ProductEvent.full(g)) == value(g)[0]

    def test_single_tuple(self):
        g = ghz()
        e = ProductEvent.of(g, [{0}, {1}, {1}])
        assert value_conditioned(g, e) == 1

    def test_ghz2_first_coordinate_000(self):
        g2 = repeat_game(ghz(), 2)
        e = ProductEvent.of(g2, [{x for x in X if x[0] == 0} for X in g2.question_alphabets])
        assert condition(g2, e).support[0][1] == Fraction(1, 4)
        # coordinate 0 is always 000 (won by answering even parity) so only coordinate 1 is at stake
        assert value_conditioned(g2, e) == Fraction(3, 4)

    def test_zero_mass(self):
        g = ghz()
        with pytest.raises(ZeroMassEvent):
            condition(g, ProductEvent.of(g, [{1}, {1}, {1}]))


class TestCoordinateWin:
    def test_coordinatewise_optimum(self):
        g = ghz()
        g2 = repeat_game(g, 2)
        single = value(g)[1]
        s = ProductStrategy.coordinatewise(g2, single)
        for i in range(2):
            assert coordinate_win_probability(g2, s, i, ProductEvent.full(g2)) == Fraction(3, 4)

    def test_losing_predicate(self):
        g2 = repeat_game(constant_game(False), 2)
        s = ProductStrategy(tuple({x: (0, 0) for x in X} for X in g2.question_alphabets), 2)
        assert coordinate_win_probability(g2, s, 1, ProductEvent.full(g2)) == 0

    def test_hand_strategy_matches_enumeration(self):
        g = ghz()
        g2 = repeat_game(g, 2)
        tables = tuple({x: (x[0] & x[1], x[0]) for x in X} for X in g2.question_alphabets)
        s = ProductStrategy(tables, 2)
        e = ProductEvent.of(g2, [{x for x in X if x != (1, 1)} for X in g2.question_alphabets])
        for i in range(2):
            num = den = Fraction(0)
            for q1 in g.support:
                for q2 in g.support:
                    q = tuple((q1[0][j], q2[0][j]) for j in range(3))
                    if any(q[j] == (1, 1) for j in range(3)):
                        continue
                    p = q1[1] * q2[1]
                    den += p
                    a = tuple(tables[j][q[j]][i] for j in range(3))
                    if g.predicate(tuple(q[j][i] for j in range(3)), a):
                        num += p
            assert coordinate_win_probability(g2, s, i, e) == num / den


def _three_player(dist, pred=None):
    pred = pred or (lambda x, a: (a[0] ^ a[1]) == (x[0] & x[2]) and a[2] == x[1])
    return Game.build([(0, 1)] * 3, [(0, 1)] * 3, dist, pred)


class TestReductions:
    def test_merge_identity(self):
        g = _three_player({(0, 0, 0): Fraction(1, 4), (1, 1, 0): Fraction(1, 4), (0, 0, 1): Fraction(1, 4), (1, 1, 1): Fraction(1, 4)})
        h = merge_players(g, 0, 1, {0: 0, 1: 1})
        assert h.num_players == 2
        assert value(h)[0] == value(g)[0]

    def test_merge_negation(self):
        g = _three_player({(0, 1, 0): Fraction(1, 2), (1, 0, 1): Fraction(1, 2)})
        h = merge_players(g, 1, 0, {0: 1, 1: 0})
        assert h.num_players == 2
        assert value(h)[0] == value(g)[0]

    def test_merge_violates_graph(self):
        g = _three_player({(0, 0, 0): Fraction(1, 2), (0, 1, 0): Fraction(1, 2)})
        with pytest.raises(InvalidInput):
            merge_players(g, 0, 1, {0: 0, 1: 1})

    def test_eliminate_singleton_alphabet(self):
        g = Game.build([(0, 1), (0,)], [(0, 1), (0, 1)], {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 2)}, lambda x, a: a[0] == (x[0] ^ a[1]))
        h = eliminate_deterministic_player(g, 1)
        assert h.num_players == 1 and value(h)[0] == value(g)[0] == 1

    def test_eliminate_nondeterministic(self):
        with pytest.raises(InvalidInput):
            eliminate_deterministic_player(ghz(), 0)

    def test_one_edge_projection_chain(self):
        # (1,2)-projection has the single edge (0, 1): both players are deterministic
        dist = {(0, 1, 0): Fraction(1, 3), (0, 1, 1): Fraction(2, 3)}
        g = _three_player(dist)
        first = binary_pair_reduction(g, 0, 1)
        assert first is not None and first[0].startswith("eliminate")
        h = first[1]
        again = eliminate_deterministic_player(h, 0)
        assert again.num_players == 1
        assert value(again)[0] == value(h)[0] == value(g)[0]

    def test_pair_reduction_none_for_connected(self):
        assert binary_pair_reduction(ghz(), 0, 1) is None


class TestRestrictRepeated:
    def test_identity_restriction(self):
        g3 = repeat_game(ghz(), 2)
        s = value(g3)[1]
        e = ProductEvent.full(g3)
        g_m, s_m, e_m = restrict_repeated_game(g3, s, e, GeneralizedRestriction.identity(2))
        for j in range(3):
            assert s_m.tables[j] == dict(s.tables[j])
        assert all(len(x) == len(X) for x, X in zip(e_m.sets, g3.question_alphabets))
        assert win_probability(g_m, s_m) == win_probability(g3, s)

    def test_fix_all_but_one(self):
        g = ghz()
        g2 = repeat_game(g, 2)
        s = value(g2)[1]
        e = ProductEvent.of(g2, [{x for x in X if x[1] == 0 or x[0] == 1} for X in g2.question_alphabets])
        rho = GeneralizedRestriction.build(2, [[0]], {1: 2})  # coordinate 1 fixed to support tuple #2
        g1, s1, e1 = restrict_repeated_game(g2, s, e, rho)
        fixed = g.support[2][0]
        for j in range(3):
            fiber = {x[0] for x in e.sets[j] if x[1] == fixed[j]}
            assert {x[0] for x in e1.sets[j]} == fiber

    def test_pairing_in_ghz3(self):
        g = ghz()
        g3 = repeat_game(g, 3)
        import random

        rng = random.Random(0)
        tables = tuple({x: tuple(rng.randint(0, 1) for _ in range(3)) for x in X} for X in g3.question_alphabets)
        s = ProductStrategy(tables, 3)
        rho = GeneralizedRestriction.build(3, [[0, 1], [2]])
        g2, s2, _ = restrict_repeated_game(g3, s, ProductEvent.full(g3), rho)
        for q, _ in g2.support:
            lifted = tuple((x[0], x[0], x[1]) for x in q)
            a_full = s.answers(lifted)
            a_res = s2.answers(q)
            # winning the restricted game on classes equals winning the representative coordinates
            direct = all(g.predicate(coordinate_question(lifted, c), coordinate_question(a_full, c)) for c in (0, 2))
            assert g2.predicate(q, a_res) == direct


class TestJson:
    def test_round_trip(self):
        for g in (ghz(), anticorr(), random_binary3(3)):
            obj = json.loads(json.dumps(game_to_json(g)))
            h = game_from_json(obj)
            assert validate_game(h).ok
            assert value(h)[0] == value(g)[0]

    def test_malformed(self):
        with pytest.raises(InvalidInput):
            game_from_json({"players": 1})
        with pytest.raises(InvalidInput):
            game_from_json({"players": 2, "questions": [[0]], "answers": [[0]], "distribution": []})


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=4, max_size=4), st.integers(0, 2**16 - 1))
def test_value_bracket_property(weights, mask):
    """val(G)^2 <= val(G^2) <= val(G) on small single-player-pair games."""
    qs = list(itertools.product((0, 1), repeat=2))
    total = sum(weights)
    dist = {q: Fraction(w, total) for q, w in zip(qs, weights)}
    win = {(q, a) for t, (q, a) in enumerate(itertools.product(qs, qs)) if mask >> t & 1}
    g = Game.build(BITS * 2, BITS * 2, dist, lambda x, a: (x, a) in win)
    v = value(g)[0]
    v2 = value(repeat_game(g, 2))[0]
    assert v * v <= v2 <= v
