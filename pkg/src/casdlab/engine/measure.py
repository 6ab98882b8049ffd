"""Measurements on simulation results: delay, function, speed, power, leakage."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from ..device import OperatingPoint, Region, region_of
from ..netlist.circuit import Circuit, Dc, Pulse
from ..netlist.topologies import OutputTarget
from .mna import (SimOptions, SimulationError, TransientResult, dc_operating_point,
                  options_from_circuit, transient)

__all__ = [
    "MeasurementError", "ConfigError", "DelayReport", "DomainDelays", "FunctionalSpec",
    "FunctionalResult", "FailReason", "BisectionResult", "PowerReport", "LeakageReport",
    "crossings", "measure_delay", "measure_domain_delays", "functional_check",
    "bisect_frequency", "max_frequency", "measure_power", "measure_leakage",
    "region_traces", "PROBE_PERIODS",
]

PROBE_PERIODS = 8


class MeasurementError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class ConfigError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def crossings(t: np.ndarray, v: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Linearly interpolated crossing times of ``level`` and their direction (+1 rising)."""
    above = v >= level
    idx = np.nonzero(above[1:] != above[:-1])[0]
    v0, v1 = v[idx], v[idx + 1]
    frac = (level - v0) / (v1 - v0)
    times = t[idx] + frac * (t[idx + 1] - t[idx])
    return times, np.where(v1 > v0, 1, -1)


def _levels(swing) -> tuple[float, float]:
    if isinstance(swing, (tuple, list)):
        lo, hi = swing
        return float(lo), float(hi)
    return 0.0, float(swing)


@dataclass(frozen=True)
class DelayReport:
    """``t_dh`` is the mean delay to rising output edges, ``t_dl`` to falling ones."""

    t_dh: float
    t_dl: float
    rising: tuple[float, ...]
    falling: tuple[float, ...]
    input_crossings: tuple[float, ...]
    output_crossings: tuple[float, ...]
    passed: bool

    @property
    def mean(self) -> float:
        return 0.5 * (self.t_dh + self.t_dl)

    @property
    def asymmetry(self) -> float:
        return abs(self.t_dh - self.t_dl) / self.mean

    def to_dict(self) -> dict:
        return {"t_dh_s": self.t_dh, "t_dl_s": self.t_dl, "pass": self.passed,
                "rising_s": list(self.rising), "falling_s": list(self.falling)}


def measure_delay(r: TransientResult, input_node: str, output_node: str, v_in_swing,
                  v_out_swing, *, settle: float = 0.0, inverting: bool = False) -> DelayReport:
    """50%-crossing propagation delay, averaged over edges after ``settle`` seconds.

    Swings are either an amplitude above 0 V or a ``(low, high)`` pair. Each input
    crossing is paired with the first output crossing of the expected direction
    that follows it and precedes the next input crossing.
    """
    for node in (input_node, output_node):
        if node not in r.voltages:
            raise ConfigError("missing-node", f"node {node!r} is not in the result")
    lo_i, hi_i = _levels(v_in_swing)
    lo_o, hi_o = _levels(v_out_swing)
    ti, di = crossings(r.time, r.v(input_node), 0.5 * (lo_i + hi_i))
    to, do = crossings(r.time, r.v(output_node), 0.5 * (lo_o + hi_o))
    keep_i, keep_o = ti >= settle, to >= settle
    ti, di, to, do = ti[keep_i], di[keep_i], to[keep_o], do[keep_o]
    if len(ti) == 0 or len(to) == 0:
        raise MeasurementError("no-crossing",
                               f"{input_node if len(ti) == 0 else output_node} never crosses its 50% level")
    sign = -1 if inverting else 1
    rising, falling = [], []
    for k, (t, d) in enumerate(zip(ti, di)):
        limit = ti[k + 1] if k + 1 < len(ti) else math.inf
        want = d * sign
        j = np.searchsorted(to, t, side="right")
        while j < len(to) and to[j] < limit:
            if do[j] == want:
                (rising if want > 0 else falling).append(float(to[j] - t))
                break
            j += 1
    if not rising or not falling:
        raise MeasurementError("no-crossing", f"{output_node} does not follow {input_node} in both directions")
    return DelayReport(float(np.mean(rising)), float(np.mean(falling)), tuple(rising), tuple(falling),
                       tuple(map(float, ti)), tuple(map(float, to)), True)


@dataclass(frozen=True)
class DomainDelays:
    """Delays to the high-domain and low-domain outputs, each averaged over both edges."""

    t_dh: float
    t_dl: float
    high: DelayReport
    low: DelayReport

    @property
    def asymmetry(self) -> float:
        return abs(self.t_dh - self.t_dl) / (0.5 * (self.t_dh + self.t_dl))

    def to_dict(self) -> dict:
        return {"t_dh_s": self.t_dh, "t_dl_s": self.t_dl, "asymmetry": self.asymmetry}


def measure_domain_delays(r: TransientResult, input_node: str, high_node: str, low_node: str,
                          v_in_swing, v_high_swing, v_low_swing, *, settle: float = 0.0) -> DomainDelays:
    hi = measure_delay(r, input_node, high_node, v_in_swing, v_high_swing, settle=settle)
    lo = measure_delay(r, input_node, low_node, v_in_swing, v_low_swing, settle=settle)
    return DomainDelays(hi.mean, lo.mean, hi, lo)


@dataclass(frozen=True)
class FunctionalSpec:
    """Pass criterion: outputs settle past 90%/10% of their swing in every checked cycle."""

    outputs: tuple[OutputTarget, ...]
    high_margin: float = 0.9
    low_margin: float = 0.1
    settle_cycles: int = 4
    check_cycles: int = 4
    input_source: str = "VIN"

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not (0 < self.low_margin < self.high_margin < 1):
            raise ConfigError("bad-margin", "need 0 < low_margin < high_margin < 1")
        if self.settle_cycles < 0 or self.check_cycles < 1:
            raise ConfigError("bad-window", "settle_cycles >= 0 and check_cycles >= 1 required")
        for o in self.outputs:
            if not o.high > o.low:
                raise ConfigError("bad-target", f"{o.node}: target high must exceed target low")


@dataclass(frozen=True)
class FailReason:
    code: str
    node: str
    cycle: int
    value: float
    limit: float

    def __str__(self) -> str:
        return f"{self.code}: {self.node} at {self.value:.4g} V vs limit {self.limit:.4g} V (cycle {self.cycle})"


@dataclass(frozen=True)
class FunctionalResult:
    passed: bool
    reasons: tuple[FailReason, ...] = field(default_factory=tuple)


def _period_of(r: TransientResult, source: str) -> Pulse:
    stim = r.stimuli.get(source)
    if not isinstance(stim, Pulse):
        raise ConfigError("no-pulse-input", f"source {source!r} is not a pulse in this result")
    return stim


def functional_check(r: TransientResult, spec: FunctionalSpec) -> FunctionalResult:
    """Samples each output at the end of every input-high and input-low phase."""
    p = _period_of(r, spec.input_source)
    for o in spec.outputs:
        if o.node not in r.voltages:
            raise ConfigError("missing-node", f"output {o.node!r} is not in the result")
    first, last = spec.settle_cycles, spec.settle_cycles + spec.check_cycles
    t_end = p.t_delay + last * p.period
    if t_end > r.time[-1] * (1 + 1e-9):
        raise ConfigError("window-exceeds-result",
                          f"check window ends at {t_end:.4g}s beyond simulated {r.time[-1]:.4g}s")
    input_high_first = p.v2 > p.v1
    reasons = []
    for o in spec.outputs:
        v = r.v(o.node)
        swing = o.high - o.low
        hi_lim = o.low + spec.high_margin * swing
        lo_lim = o.low + spec.low_margin * swing
        for k in range(first, last):
            base = p.t_delay + k * p.period
            t_a = base + p.t_rise + p.pulse_width  # end of the v2 phase
            t_b = min(base + p.period, r.time[-1])  # end of the v1 phase
            va, vb = np.interp([t_a, t_b], r.time, v)
            out_high_at_a = input_high_first == o.in_phase
            v_hi, v_lo = (va, vb) if out_high_at_a else (vb, va)
            if v_hi < hi_lim:
                reasons.append(FailReason("swing-shortfall", o.node, k, float(v_hi), hi_lim))
            if v_lo > lo_lim:
                reasons.append(FailReason("swing-shortfall", o.node, k, float(v_lo), lo_lim))
        if o.ceiling is not None:
            w = (r.time >= p.t_delay + first * p.period) & (r.time <= t_end)
            peak = float(v[w].max())
            if peak > o.ceiling:
                reasons.append(FailReason("ceiling-exceeded", o.node, first, peak, o.ceiling))
    return FunctionalResult(not reasons, tuple(reasons))


@dataclass(frozen=True)
class BisectionResult:
    f_max: float
    f_pass: float
    f_fail: float
    probes: int
    history: tuple[tuple[float, bool], ...]

    def to_dict(self) -> dict:
        return {"f_max_hz": self.f_max, "f_pass_hz": self.f_pass, "f_fail_hz": self.f_fail,
                "probes": self.probes}


def bisect_frequency(probe: Callable[[float], bool], f_lo: float, f_hi: float,
                     tol: float) -> BisectionResult:
    """Bisection on a monotone pass/fail probe; ``probes`` counts interior probes only."""
    if not (0 < f_lo < f_hi) or not tol > 0:
        raise ConfigError("bad-bracket", "need 0 < f_lo < f_hi and tol > 0")
    ok_lo, ok_hi = probe(f_lo), probe(f_hi)
    if not ok_lo or ok_hi:
        raise MeasurementError("bracket-invalid",
                               f"expected pass at {f_lo:.4g} Hz and fail at {f_hi:.4g} Hz, "
                               f"got {'pass' if ok_lo else 'fail'}/{'pass' if ok_hi else 'fail'}")
    lo, hi = f_lo, f_hi
    history = [(f_lo, True), (f_hi, False)]
    count = 0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        ok = probe(mid)
        history.append((mid, ok))
        count += 1
        if ok:
            lo = mid
        else:
            hi = mid
    return BisectionResult(0.5 * (lo + hi), lo, hi, count, tuple(history))


def max_frequency(generator: Callable[[float], Circuit], f_lo: float, f_hi: float, tol: float,
                  spec: FunctionalSpec, opt: SimOptions | None = None) -> BisectionResult:
    """Highest passing input frequency; each probe simulates :data:`PROBE_PERIODS` periods.

    A probe whose simulation fails to converge counts as a functional failure.
    """
    if spec.settle_cycles + spec.check_cycles > PROBE_PERIODS:
        raise ConfigError("bad-window", f"settle + check cycles exceed {PROBE_PERIODS}")

    def probe(f: float) -> bool:
        c = generator(f)
        base = opt or options_from_circuit(c)
        dt = c.tran.dt if c.tran is not None else base.dt
        o = replace(base, dt=dt, t_stop=PROBE_PERIODS / f, uic=False)
        try:
            r = transient(c, o)
        except SimulationError:
            return False
        return functional_check(r, spec).passed

    return bisect_frequency(probe, f_lo, f_hi, tol)


@dataclass(frozen=True)
class PowerReport:
    avg_power_w: float
    energy_j: float
    energy_per_cycle_j: float | None
    window: tuple[float, float]
    pdp_j: float | None = None

    def to_dict(self) -> dict:
        return {"avg_power_w": self.avg_power_w, "energy_j": self.energy_j,
                "energy_per_cycle_j": self.energy_per_cycle_j, "pdp_j": self.pdp_j,
                "window_s": list(self.window)}


def _window_integral(t: np.ndarray, y: np.ndarray, t0: float, t1: float) -> float:
    inside = (t > t0) & (t < t1)
    tt = np.concatenate(([t0], t[inside], [t1]))
    yy = np.concatenate(([np.interp(t0, t, y)], y[inside], [np.interp(t1, t, y)]))
    return float(np.trapezoid(yy, tt))


def measure_power(r: TransientResult, supplies: Sequence[str], window: tuple[float, float] | None = None,
                  *, period: float | None = None, delay: float | None = None) -> PowerReport:
    """Average of the summed supply power ``v_src * i_src`` over ``window``.

    ``period`` defaults to the period of a pulse source named VIN when present;
    ``delay`` (s), when given, adds a power-delay product ``avg_power * delay``.
    """
    t0, t1 = window if window is not None else (float(r.time[0]), float(r.time[-1]))
    if not (t1 > t0) or t0 < r.time[0] - 1e-18 or t1 > r.time[-1] * (1 + 1e-12):
        raise MeasurementError("empty-window", f"window [{t0:.4g}, {t1:.4g}] s is empty or outside the result")
    if not supplies:
        raise ConfigError("no-supplies", "at least one supply source is required")
    p = np.zeros_like(r.time)
    for s in supplies:
        if s not in r.currents:
            raise ConfigError("missing-source", f"source {s!r} is not in the result")
        p = p + r.source_voltage(s) * r.i(s)
    energy = _window_integral(r.time, p, t0, t1)
    avg = energy / (t1 - t0)
    if period is None and isinstance(r.stimuli.get("VIN"), Pulse):
        period = r.stimuli["VIN"].period
    return PowerReport(avg, energy, None if period is None else avg * period, (t0, t1),
                       None if delay is None else avg * delay)


@dataclass(frozen=True)
class LeakageReport:
    leakage_a: float
    per_supply: dict[str, float]

    def to_dict(self) -> dict:
        return {"leakage_a": self.leakage_a, "per_supply_a": self.per_supply}


def _default_supplies(c: Circuit) -> list[str]:
    return [s.name for s in c.sources() if s.name.lower().startswith("vdd")]


def measure_leakage(c: Circuit, static_levels: Mapping[str, float] | None = None,
                    opt: SimOptions | None = None, supplies: Sequence[str] | None = None,
                    leakage_enabled: bool = True) -> LeakageReport:
    """Static supply current with every stimulus frozen.

    Sources named in ``static_levels`` are set to that DC level; other pulse
    sources hold their initial value. The current through the numerical node
    shunts is subtracted, so a circuit with no device conduction reads 0 A.
    """
    frozen = c
    levels = dict(static_levels or {})
    for src in c.sources():
        if src.name in levels:
            frozen = frozen.with_stimulus(src.name, Dc(float(levels.pop(src.name))))
        elif isinstance(src.stimulus, Pulse):
            frozen = frozen.with_stimulus(src.name, Dc(src.stimulus.value(0.0)))
    if levels:
        raise ConfigError("missing-source", f"unknown sources in static levels: {sorted(levels)}")
    base = opt or options_from_circuit(c)
    sol = dc_operating_point(frozen, replace(base, leakage=leakage_enabled))
    names = list(supplies) if supplies is not None else _default_supplies(c)
    per = {n: sol.currents[n] for n in names}
    total = sum(per.values()) - sol.shunt_current
    return LeakageReport(float(total), per)


def region_traces(c: Circuit, r: TransientResult) -> dict[str, list[Region]]:
    """Operating region of every MOSFET at each time point."""
    out = {}
    for m in c.mosfets():
        p = c.device_params(m)
        s = p.polarity.sign
        vg, vd, vs = r.v(m.g), r.v(m.d), r.v(m.s)
        regs = []
        for g_, d_, s_ in zip(vg, vd, vs):
            vgs, vds = s * (g_ - s_), s * (d_ - s_)
            if vds < 0:  # drain and source swap roles
                vgs, vds = vgs - vds, -vds
            regs.append(region_of(p, OperatingPoint(vgs, vds)))
        out[m.name] = regs
    return out
