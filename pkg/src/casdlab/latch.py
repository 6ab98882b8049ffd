"""Negative-resistance algebra of the regenerative latch in the hybrid level shifter.

With ``a = gm_p3*ro_p3``, ``b = gm_n5*ro_n5``, ``c = gm_p5*ro_p5`` and
``r0 = ro_p3 + ro_n5 + ro_p5`` the small-signal resistance seen at the input
pull-down drains is::

    R_eq = -2 (r0 + ro_p5 (a - b)) / (a - c - b + c b - a c)

and, with ``delta = a - b``, the same expression in fractional-linear form::

    R_eq = -2 (r0 + ro_p5 delta) / ((1 - c) delta - c)

The pole sits at ``delta = c / (1 - c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .device import INFINITE_RO, SmallSignal

__all__ = [
    "AbcFactors", "EquivalentResistance", "LatchError", "SINGULAR_RTOL",
    "abc_factors", "r_eq_full", "r_eq_delta", "critical_delta", "req_table",
]

SINGULAR_RTOL = 1e-12


class LatchError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class AbcFactors:
    a: float
    b: float
    c: float
    r0: float
    ro_p5: float

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise LatchError("invalid-factors", "gain factors must be >= 0")
        if not (self.r0 > 0 and self.ro_p5 > 0):
            raise LatchError("invalid-factors", "r0 and ro_p5 must be positive")

    @property
    def delta(self) -> float:
        return self.a - self.b


@dataclass(frozen=True)
class EquivalentResistance:
    value: float
    singular: bool
    denominator: float


def abc_factors(p3: SmallSignal, n5: SmallSignal, p5: SmallSignal) -> AbcFactors:
    for name, ss in (("p3", p3), ("n5", n5), ("p5", p5)):
        if ss.ro == INFINITE_RO or not math.isfinite(ss.ro):
            raise LatchError("infinite-ro", f"{name}: latch analysis needs a finite output resistance")
        if ss.gm < 0 or ss.ro <= 0:
            raise LatchError("invalid-factors", f"{name}: bad small-signal values")
    return AbcFactors(a=p3.gm * p3.ro, b=n5.gm * n5.ro, c=p5.gm * p5.ro,
                      r0=p3.ro + n5.ro + p5.ro, ro_p5=p5.ro)


def _resolve(num: float, den: float, scale: float) -> EquivalentResistance:
    # scale is the largest denominator term magnitude, so the test is relative cancellation
    if abs(den) < SINGULAR_RTOL * max(1.0, scale):
        sign = -math.copysign(1.0, num) * (1.0 if den >= 0 else -1.0)
        return EquivalentResistance(sign * math.inf, True, den)
    return EquivalentResistance(-2.0 * num / den, False, den)


def r_eq_full(f: AbcFactors) -> EquivalentResistance:
    a, b, c = f.a, f.b, f.c
    terms = (a, c, b, c * b, a * c)
    den = a - c - b + c * b - a * c
    return _resolve(f.r0 + f.ro_p5 * (a - b), den, max(abs(t) for t in terms))


def r_eq_delta(delta: float, c: float, r0: float, ro_p5: float) -> EquivalentResistance:
    den = (1.0 - c) * delta - c
    scale = max(abs((1.0 - c) * delta), abs(c))
    return _resolve(r0 + ro_p5 * delta, den, scale)


def critical_delta(c: float) -> float:
    """Gain difference that puts the pole of R_eq at zero denominator."""
    if c == 1.0:
        raise LatchError("critical-delta-divergent", "c = 1 makes the sizing condition diverge")
    return c / (1.0 - c)


def req_table(deltas: Iterable[float], c: float, r0: float, ro_p5: float
              ) -> list[tuple[float, EquivalentResistance]]:
    return [(float(d), r_eq_delta(float(d), c, r0, ro_p5)) for d in deltas]
