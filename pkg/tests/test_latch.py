import math

import numpy as np
import pytest

from casdlab.device import INFINITE_RO, Region, SmallSignal
from casdlab.latch import (AbcFactors, LatchError, abc_factors, critical_delta, r_eq_delta, r_eq_full,
                           req_table)


def ss(gm, ro):
    return SmallSignal(gm=gm, ro=ro, region=Region.SATURATION)


class TestAbcFactors:
    def test_products_and_r0(self):
        f = abc_factors(ss(1e-3, 1e5), ss(2e-3, 5e4), ss(1e-3, 2e4))
        assert (f.a, f.b, f.c) == pytest.approx((100.0, 100.0, 20.0))
        assert f.r0 == pytest.approx(1.7e5)
        assert f.ro_p5 == 2e4
        assert f.delta == pytest.approx(0.0)

    def test_infinite_ro_rejected(self):
        with pytest.raises(LatchError) as e:
            abc_factors(ss(1e-3, INFINITE_RO), ss(1e-3, 1e5), ss(1e-3, 1e5))
        assert e.value.code == "infinite-ro"

    def test_negative_factor_rejected(self):
        with pytest.raises(LatchError):
            AbcFactors(-1.0, 1.0, 1.0, 1.0, 1.0)


class TestEquivalentResistance:
    def test_balanced_hand_value(self):
        # a = b = c = 100, r0 = 300k: den = -100, R = -2 * 300k / -100
        f = AbcFactors(100.0, 100.0, 100.0, 3e5, 1e5)
        r = r_eq_full(f)
        assert not r.singular
        assert r.value == pytest.approx(6e3, rel=1e-12)

    @pytest.mark.parametrize("a,b,c", [(100, 100, 100), (80, 60, 30), (5, 9, 0.4), (50, 10, 0.9)])
    def test_forms_agree(self, a, b, c):
        f = AbcFactors(a, b, c, 3e5, 1e5)
        assert r_eq_full(f).value == pytest.approx(r_eq_delta(a - b, c, 3e5, 1e5).value, rel=1e-12)

    def test_denominator_identity(self):
        rng = np.random.default_rng(1)
        for a, b, c in rng.uniform(0, 200, size=(50, 3)):
            f = AbcFactors(a, b, c, 1.0, 1.0)
            assert r_eq_full(f).denominator == pytest.approx((1 - c) * (a - b) - c, abs=1e-9 * max(a, b, c) ** 2)

    def test_singular_at_pole(self):
        c = 0.5
        r = r_eq_delta(critical_delta(c), c, 3e5, 1e5)
        assert r.singular and math.isinf(r.value)

    def test_sign_flip_across_pole(self):
        c = 0.5
        d = critical_delta(c)
        lo = r_eq_delta(d - 1e-6, c, 3e5, 1e5).value
        hi = r_eq_delta(d + 1e-6, c, 3e5, 1e5).value
        assert math.copysign(1, lo) != math.copysign(1, hi)
        assert min(abs(lo), abs(hi)) > 1e9

    def test_table(self):
        rows = req_table([0.0, 1.0, 2.0], 0.5, 3e5, 1e5)
        assert [d for d, _ in rows] == [0.0, 1.0, 2.0]
        assert rows[1][1].singular


class TestCriticalDelta:
    def test_hand_values(self):
        assert critical_delta(0.5) == 1.0
        assert critical_delta(0.0) == 0.0
        assert critical_delta(2.0) == -2.0

    def test_divergent(self):
        with pytest.raises(LatchError) as e:
            critical_delta(1.0)
        assert e.value.code == "critical-delta-divergent"

    def test_increasing_on_each_branch(self):
        for grid in (np.linspace(0, 0.99, 50), np.linspace(1.01, 50, 50)):
            v = [critical_delta(c) for c in grid]
            assert all(b > a for a, b in zip(v, v[1:]))
