"""Cross-check of published closed forms against first-principles integrals.

Three comparisons are reported:

* the published ramp-section coefficient,
* the published exponential-section coefficient,
* the ideal-switch degradation bracket versus the fundamental of the
  constructed ideal-mismatch waveform.

The published forms are evaluated exactly as printed. Two readings of their
time symbol ``T`` are tried: the full carrier period and the half period.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .mismatch import mismatch_bracket
from .waveform import build_ideal_mismatch, fundamental_numeric, square_wave

__all__ = [
    "published_ramp_coefficient", "published_exp_coefficient",
    "ramp_coefficient", "exp_coefficient", "FormCheckRow", "FormCheckReport",
    "check_forms", "bracket_vs_oracle", "BRACKET_GATE",
]

BRACKET_GATE = 0.05
_SECTION_FRACTIONS = (0.02, 0.05, 0.1, 0.2)
_TAU_FRACTIONS = (0.01, 0.05, 0.2)


def published_ramp_coefficient(dv: float, dt_frac: float, t_sym: float, omega: float) -> complex:
    x = 2j * math.pi * dt_frac
    return 2 * dv / (dt_frac * t_sym**2) * (np.exp(-x) * (x - 1) + 1) / (1j * omega) ** 2


def published_exp_coefficient(dv: float, dt_frac: float, t_sym: float, omega: float,
                              tau: float) -> complex:
    jw = 1j * omega
    k = 1 / tau + jw
    d = dt_frac * t_sym
    return 2 * dv / t_sym * ((1 - np.exp(jw * d)) / jw - (1 - np.exp(d * k)) / k)


def ramp_coefficient(dv: float, duration: float, period: float) -> complex:
    """c1 of a 0 -> dv ramp over ``duration`` starting at t = 0 (zero elsewhere)."""
    jw = 2j * math.pi / period
    moment = (1 - np.exp(-jw * duration) * (1 + jw * duration)) / jw**2
    return 2 / period * dv / duration * moment


def exp_coefficient(dv: float, duration: float, period: float, tau: float) -> complex:
    """c1 of ``dv * (1 - exp(-t/tau))`` over ``duration`` starting at t = 0."""
    jw = 2j * math.pi / period
    k = 1 / tau + jw
    return 2 * dv / period * ((1 - np.exp(-jw * duration)) / jw - (1 - np.exp(-k * duration)) / k)


def _quadrature(f, duration: float, period: float, n: int = 20000) -> complex:
    t = np.linspace(0.0, duration, n + 1)
    y = f(t) * np.exp(-2j * math.pi * t / period)
    h = duration / n
    return 2 / period * h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


@dataclass(frozen=True)
class FormCheckRow:
    check: str
    reading: str
    max_rel_dev: float
    gate: float | None
    within_gate: bool | None
    note: str


@dataclass(frozen=True)
class FormCheckReport:
    rows: tuple[FormCheckRow, ...]
    bracket_detail: tuple[tuple[float, float, float, float], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "reading", "max_rel_dev", "gate", "within_gate", "note"])
        for r in self.rows:
            w.writerow([r.check, r.reading, repr(r.max_rel_dev),
                        "" if r.gate is None else repr(r.gate),
                        "" if r.within_gate is None else str(r.within_gate).lower(), r.note])
        return buf.getvalue()

    def detail_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta_t", "bracket", "oracle", "rel_dev"])
        for row in self.bracket_detail:
            w.writerow([repr(x) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": [asdict(r) for r in self.rows],
                           "bracket_detail": [dict(zip(("delta_t", "bracket", "oracle", "rel_dev"), r))
                                              for r in self.bracket_detail]}, indent=2)

    def row(self, check: str, reading: str) -> FormCheckRow:
        for r in self.rows:
            if r.check == check and r.reading == reading:
                return r
        raise KeyError((check, reading))


def _rel(a: complex, b: complex) -> float:
    return float(abs(a - b) / abs(b))


def bracket_vs_oracle(dt_grid: Sequence[float], vdd: float = 0.9, t_c: float = 1.0,
                      n_samples: int = 2**16) -> list[tuple[float, float, float, float]]:
    """Rows of ``(dt, bracket, oracle, rel_dev)``; the oracle is |c1|^2 ratio of the built waveform."""
    ref = abs(fundamental_numeric(square_wave(0.0, 2 * vdd, 2 * t_c), n_samples)) ** 2
    out = []
    for dt in dt_grid:
        w = build_ideal_mismatch(vdd, t_c, dt * t_c)
        oracle = float(abs(fundamental_numeric(w, n_samples)) ** 2 / ref)
        b = mismatch_bracket(dt)
        out.append((float(dt), b, oracle, abs(b - oracle) / oracle))
    return out


def check_forms(period: float = 1.0, bracket_grid: Sequence[float] | None = None) -> FormCheckReport:
    omega = 2 * math.pi / period
    readings = {"T=period": period, "T=half-period": period / 2}
    rows = []

    # first-principles forms against plain quadrature of the section shape
    fp_ramp = fp_exp = 0.0
    for frac in _SECTION_FRACTIONS:
        d = frac * period
        fp_ramp = max(fp_ramp, _rel(_quadrature(lambda t: t / d, d, period),
                                    ramp_coefficient(1.0, d, period)))
        for tf in _TAU_FRACTIONS:
            tau = tf * period
            fp_exp = max(fp_exp, _rel(_quadrature(lambda t: -np.expm1(-t / tau), d, period),
                                      exp_coefficient(1.0, d, period, tau)))
    rows.append(FormCheckRow("ramp-first-principles", "quadrature", fp_ramp, 1e-6, fp_ramp <= 1e-6,
                             "closed form vs Simpson quadrature"))
    rows.append(FormCheckRow("exp-first-principles", "quadrature", fp_exp, 1e-6, fp_exp <= 1e-6,
                             "closed form vs Simpson quadrature"))

    for reading, t_sym in readings.items():
        dev = 0.0
        for frac in _SECTION_FRACTIONS:
            d = frac * period
            dev = max(dev, _rel(published_ramp_coefficient(1.0, d / t_sym, t_sym, omega),
                                ramp_coefficient(1.0, d, period)))
        rows.append(FormCheckRow("ramp-published", reading, dev, None, None,
                                 "inner factor printed as exp(-x)(x-1)+1; first principles give 1-exp(-x)(1+x)"))
    for reading, t_sym in readings.items():
        dev = 0.0
        for frac in _SECTION_FRACTIONS:
            d = frac * period
            for tf in _TAU_FRACTIONS:
                tau = tf * period
                dev = max(dev, _rel(published_exp_coefficient(1.0, d / t_sym, t_sym, omega, tau),
                                    exp_coefficient(1.0, d, period, tau)))
        rows.append(FormCheckRow("exp-published", reading, dev, None, None,
                                 "exponents printed with positive sign; a settling section needs exp(-d(1/tau+jw))"))

    grid = bracket_grid if bracket_grid is not None else [round(0.02 * k, 2) for k in range(1, 11)]
    detail = bracket_vs_oracle(grid)
    dev = max(r[3] for r in detail)
    rows.append(FormCheckRow(
        "degradation-bracket", "ideal-mismatch-oracle", dev, BRACKET_GATE, dev <= BRACKET_GATE,
        "bracket falls faster than the built waveform; oracle equals cos^2(pi*dt/2) "
        "for one vdd plateau of t_ms per edge" if dev > BRACKET_GATE else "within gate"))
    return FormCheckReport(tuple(rows), tuple(detail))
