import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from parrep_lab.analysis import FunctionTable, ProbabilitySpace, expectation
from parrep_lab.errors import ConvergenceError, InvalidInput, NoCertificate
from parrep_lab.restrictions import apply_generalized
from parrep_lab.uniformization import IncrementConfig, increment_grr, uniformize

BIT = ProbabilitySpace.uniform(2)
CFG = IncrementConfig.desk(2)


def parity(n):
    return FunctionTable.from_function(BIT, n, lambda x: Fraction((-1) ** sum(x)), exact=True)


def dictator(n):
    return FunctionTable.from_function(BIT, n, lambda x: Fraction((-1) ** x[0]), exact=True)


class TestConfig:
    def test_asymptotic_defaults(self):
        p = IncrementConfig().resolve(64, 2)
        assert p["cell_width"] == pytest.approx(64 ** -0.25)
        assert p["group_size"] == 4
        assert p["num_groups"] == math.ceil(64 ** (1 / 64))
        assert p["max_multiplier"] == max(1, math.floor(64 ** (1 / 8)))

    def test_desk_overrides(self):
        p = IncrementConfig.desk(3).resolve(10, 3)
        assert p["max_multiplier"] == 6 and p["cell_width"] == 1e-6


class TestIncrement:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_parity_becomes_constant(self, n):
        f = parity(n)
        inc = increment_grr(f, 0.5, seed=0, config=CFG)
        assert inc.before == 0 and inc.after == 1
        for rho, _ in inc.grr.entries:
            vals = apply_generalized(f, rho).values
            assert len({complex(v) for v in np.ravel(vals)}) == 1

    def test_constant_has_no_certificate(self):
        c = FunctionTable.from_function(BIT, 3, lambda x: Fraction(1), exact=True)
        with pytest.raises(NoCertificate):
            increment_grr(c, 0.5, seed=0, config=CFG)

    def test_unbounded_rejected(self):
        f = FunctionTable.from_function(BIT, 2, lambda x: Fraction(2), exact=True)
        with pytest.raises(InvalidInput):
            increment_grr(f, 0.5, config=CFG)

    def test_ternary_character(self):
        sp = ProbabilitySpace.uniform(3)
        w = cmath.exp(2j * cmath.pi / 3)
        f = FunctionTable.from_function(sp, 3, lambda x: w ** sum(x))
        inc = increment_grr(f, 0.5, seed=0, config=IncrementConfig.desk(3))
        assert inc.gain > 0.5
        # merged classes have sizes whose phases cancel: multiples of 3
        for rho, _ in inc.grr.entries:
            assert all(len(T) % 3 == 0 for T in rho.classes if len(T) > 1)

    def test_report_serializable(self):
        d = increment_grr(parity(3), 0.5, config=CFG).as_dict()
        assert d["after"] == "1" and d["min_free"] >= 0


class TestUniformize:
    def test_constants_do_nothing(self):
        c = FunctionTable.from_function(BIT, 3, lambda x: Fraction(1), exact=True)
        res = uniformize([c, c], 0.25, 0.5, seed=0, config=CFG)
        assert res.steps == 0 and res.grr.epsilon == 0 and res.grr.min_free == 3

    def test_parity_within_two_steps(self):
        res = uniformize([parity(4)], 0.25, 0.5, seed=0, config=CFG)
        assert res.steps <= 2 and res.bad_probability <= Fraction(1, 4)
        assert res.potentials[-1] == 1

    def test_parity_and_dictator(self):
        gs = [parity(4), dictator(4)]
        try:
            res = uniformize(gs, 0.25, 0.5, seed=1, config=CFG)
        except ConvergenceError as exc:
            res = exc.partial
        assert res.monotone_within_slack
        assert all(p <= len(gs) for p in res.potentials)

    def test_deterministic(self):
        gs = [parity(3), dictator(3)]
        runs = []
        for _ in range(2):
            try:
                runs.append(uniformize(gs, 0.25, 0.5, seed=3, config=CFG).as_dict())
            except ConvergenceError as exc:
                runs.append(exc.partial.as_dict())
        assert runs[0] == runs[1]

    def test_domain_checks(self):
        with pytest.raises(InvalidInput):
            uniformize([], 0.25, 0.5)
        with pytest.raises(InvalidInput):
            uniformize([parity(2), parity(3)], 0.25, 0.5)

    def test_cap_reports_partial(self):
        with pytest.raises(ConvergenceError) as info:
            uniformize([parity(4)], 0.25, 0.5, seed=0, config=CFG, max_steps=0)
        assert info.value.partial.steps == 0


def test_potential_matches_direct_sum():
    f = parity(3)
    res = uniformize([f], 0.25, 0.5, seed=0, config=CFG)
    direct = sum(w * abs(complex(expectation(apply_generalized(f, r)))) ** 2 for r, w in res.grr.entries)
    assert float(res.potentials[-1]) == pytest.approx(float(direct))
