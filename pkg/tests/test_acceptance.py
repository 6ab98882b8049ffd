"""Acceptance criteria 1-10, each at its stated tolerance."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from casdlab.device import default_deck
from casdlab.engine import CORNERS, FunctionalSpec, corner_sweep, functional_check, transient
from casdlab.engine.measure import max_frequency, measure_delay, measure_domain_delays, measure_leakage
from casdlab.engine.mna import dc_operating_point, options_from_circuit
from casdlab.formcheck import BRACKET_GATE, check_forms
from casdlab.latch import AbcFactors, critical_delta, r_eq_delta, r_eq_full
from casdlab.mismatch import MismatchSpec, degradation_sweep, ideal_power, mismatch_bracket, power_from_fundamental
from casdlab.netlist import NetlistError, format_circuit, parse, parse_file
from casdlab.netlist.topologies import generate_topology, output_targets
from casdlab.stats import VariationSpec, run_monte_carlo
from casdlab.waveform import fundamental_analytic, fundamental_numeric, square_wave

from conftest import random_waveform, record

DATA = Path(__file__).parent / "data"

# 8 * 0.9^2 / (pi^2 * 50) evaluated independently; the requirement prints 13.133 mW
P_IDEAL_ORACLE = 0.013131225400046978
# cos^2(pi dt) + (1 - cos(pi dt)) / 8 at dt = 0.1; the requirement prints 0.91064
BRACKET_AT_0P1 = 0.9106264326505794
BRACKET_PRINTED = 0.91064


def test_criterion_01_fourier_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        w = random_waveform(rng)
        a, n = fundamental_analytic(w).value, fundamental_numeric(w, 2**20).value
        worst = max(worst, abs(a - n) / abs(n))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10.0
    record(1, ok, f"worst rel dev {worst:.2e} (<= 1e-6), {elapsed:.2f} s (< 10 s)")
    assert ok


def test_criterion_02_ideal_power():
    p = power_from_fundamental(fundamental_numeric(square_wave(0.0, 1.8, 1 / 12.4e9)), 50.0)
    rel = abs(p - P_IDEAL_ORACLE) / P_IDEAL_ORACLE
    scaling = (ideal_power(1.8, 50.0) == 4 * ideal_power(0.9, 50.0)
               and ideal_power(0.9, 100.0) == ideal_power(0.9, 50.0) / 2)
    ok = rel <= 1e-4 and scaling
    record(2, ok, f"P = {p * 1e3:.6f} mW vs oracle {P_IDEAL_ORACLE * 1e3:.6f} mW, rel {rel:.1e} (<= 1e-4); "
                  f"V^2 and 1/R scaling exact: {scaling}")
    assert ok


def test_criterion_03_bracket_checks():
    at0 = mismatch_bracket(0.0)
    at01 = mismatch_bracket(0.1)
    row = check_forms().row("degradation-bracket", "ideal-mismatch-oracle")
    documented = row.within_gate or (row.within_gate is False and bool(row.note))
    ok = (at0 == 1.0 and at01 == pytest.approx(BRACKET_AT_0P1, rel=1e-12)
          and row.gate == BRACKET_GATE and documented)
    state = "within gate" if row.within_gate else "documented deviation"
    record(3, ok, f"bracket(0) = {at0}, bracket(0.1) = {at01:.7f} (printed {BRACKET_PRINTED}, "
                  f"rel {abs(at01 - BRACKET_PRINTED) / BRACKET_PRINTED:.1e}); oracle comparison max dev "
                  f"{row.max_rel_dev:.1%} vs {BRACKET_GATE:.0%} gate ({state})")
    assert ok


def test_criterion_04_degradation_sweep():
    table = degradation_sweep(MismatchSpec(0.9, 12.4e9, 50.0))
    row = {r.delta_t: r for r in table.rows}[0.1]
    mono = all(np.all(np.diff(table.column(c)) <= 0) for c in ("norm_ideal", "norm_nonideal"))
    ok = 0.955 <= row.norm_nonideal <= 0.985 and mono
    record(4, ok, f"non-ideal normalized power at 0.10 = {row.norm_nonideal:.4f} (in [0.955, 0.985]); "
                  f"monotone: {mono}")
    assert ok


def test_criterion_05_latch_algebra():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    draws = rng.uniform(0.01, 200.0, size=(10_000, 5)) * [1, 1, 1, 1e5, 1e5]
    worst_form = worst_den = 0.0
    for a, b, c, r0, ro in draws:
        f = AbcFactors(a, b, c, r0, ro)
        full, frac = r_eq_full(f), r_eq_delta(a - b, c, r0, ro)
        if not (full.singular or frac.singular):
            worst_form = max(worst_form, abs(full.value - frac.value) / abs(frac.value))
        scale = max(abs(a), abs(b), abs(c), abs(c * b), abs(a * c))
        worst_den = max(worst_den, abs(full.denominator - ((1 - c) * (a - b) - c)) / scale)
    singular_all = True
    for c in rng.uniform(0.01, 0.99, 200):
        for r0, ro in rng.uniform(1e3, 1e6, size=(5, 2)):
            singular_all &= r_eq_delta(critical_delta(c), c, r0, ro).singular
    elapsed = time.perf_counter() - t0
    ok = worst_form <= 1e-9 and worst_den <= 1e-12 and singular_all and elapsed < 1.0
    record(5, ok, f"dual-form dev {worst_form:.1e} (<= 1e-9), denominator identity {worst_den:.1e} "
                  f"(<= 1e-12, relative to largest term), singular at pole: {singular_all}, {elapsed:.2f} s (< 1 s)")
    assert ok


def _rc_error(dt):
    c = parse_file(DATA / "golden" / "rc_step.cir")
    r = transient(c, options_from_circuit(c, dt=dt))
    return float(np.max(np.abs(r.v("out") - (1 - np.exp(-r.time / 1e-9)))))


def test_criterion_06_solver():
    e1, e2 = _rc_error(1e-11), _rc_error(5e-12)
    mid = dc_operating_point(parse_file(DATA / "golden" / "divider.cir")).voltages["mid"]
    ok = e1 <= 0.005 and 3.2 <= e1 / e2 <= 4.8 and abs(mid - 0.5) <= 1e-9
    record(6, ok, f"RC error {e1:.2e} (<= 5e-3), halving ratio {e1 / e2:.3f} (in [3.2, 4.8]), "
                  f"divider error {abs(mid - 0.5):.1e} V (<= 1e-9)")
    assert ok


def test_criterion_07_level_shifters():
    spec = FunctionalSpec(output_targets("dcvs", 0.9, 1.8))
    low = functional_check(transient(generate_topology("dcvs", freq=1e9)), spec).passed
    tol = 1e9
    res = max_frequency(lambda f: generate_topology("dcvs", freq=f, steps_per_period=100), 0.5e9, 60e9, tol, spec)
    bracket = (dict(res.history)[res.f_pass] and not dict(res.history)[res.f_fail]
               and res.f_fail - res.f_pass < tol and math.isfinite(res.f_max))

    hv = generate_topology("hvls")
    r = transient(hv)
    hv_pass = functional_check(r, FunctionalSpec(output_targets("hvls", 0.9, 1.8))).passed
    w = r.time >= 4e-9
    swing = float(np.ptp(r.v("x")[w]))
    vol_peak = float(r.v("vol")[w].max())
    d = measure_domain_delays(r, "vin", "voh", "vol", 0.9, (0.9, 1.8), 0.9, settle=4e-9)
    ok = low and bracket and hv_pass and swing >= 0.9 * 1.8 and vol_peak < 0.9 + 0.2 and d.asymmetry < 0.3
    record(7, ok, f"DCVS 1 GHz pass: {low}; fmax {res.f_max / 1e9:.2f} GHz in "
                  f"[{res.f_pass / 1e9:.2f}, {res.f_fail / 1e9:.2f}] GHz (tol {tol / 1e9:g} GHz); "
                  f"HVLS pass: {hv_pass}, swing {swing:.3f} V (>= 1.62), vol peak {vol_peak:.3f} V (< 1.1), "
                  f"asymmetry {d.asymmetry:.3f} (< 0.3)")
    assert ok


def test_criterion_08_corners_and_leakage():
    def delay(c):
        return measure_delay(transient(c), "vin", "out", 0.9, 1.8, settle=1e-9)

    rows = corner_sweep(lambda deck: generate_topology("dcvs", deck=deck, periods=3),
                        [CORNERS[k] for k in ("FF", "TT", "SS")], {"delay": delay})
    ff, tt, ss = (r.value for r in rows)
    ordered = ff.t_dh < tt.t_dh < ss.t_dh and ff.mean < tt.mean < ss.mean
    grid = [0.9, 1.2, 1.5, 1.8]
    leak = [measure_leakage(generate_topology("dcvs", vddh=v)).leakage_a for v in grid]
    mono = all(b > a for a, b in zip(leak, leak[1:]))
    ok = ordered and mono
    record(8, ok, f"t_dh FF/TT/SS = {ff.t_dh * 1e12:.1f}/{tt.t_dh * 1e12:.1f}/{ss.t_dh * 1e12:.1f} ps; "
                  f"leakage over VDDH {grid}: {', '.join(f'{x:.3e}' for x in leak)} A, increasing: {mono}")
    assert ok


def test_criterion_09_monte_carlo():
    spec = VariationSpec(seed=0)
    gap = lambda d: d.nmos.vth - d.pmos.vth
    t0 = time.perf_counter()
    a = run_monte_carlo(lambda d: d, gap, spec, 4500, default_deck())
    elapsed = time.perf_counter() - t0
    b = run_monte_carlo(lambda d: d, gap, spec, 4500, default_deck())
    same = (a.values.tobytes() == b.values.tobytes() and a.status == b.status
            and a.summary.hist_counts.tobytes() == b.summary.hist_counts.tobytes()
            and a.to_json() == b.to_json() and a.to_csv() == b.to_csv())
    ok = 0.9923 <= a.within_3sigma <= 0.9993 and same and elapsed < 30.0
    record(9, ok, f"within 3 sigma {a.within_3sigma:.4f} (in [0.9923, 0.9993]), bitwise reproducible: {same}, "
                  f"{elapsed:.2f} s (< 30 s)")
    assert ok


def test_criterion_10_parser():
    golden = sorted((DATA / "golden").glob("*.cir"))
    trips = []
    for p in golden:
        text = p.read_text()
        once = format_circuit(parse(text))
        trips.append(once == text and format_circuit(parse(once)) == once)
    expected = json.loads((DATA / "malformed" / "expected.json").read_text())
    hits = []
    for name, exp in sorted(expected.items()):
        try:
            parse_file(DATA / "malformed" / name)
            hits.append(False)
        except NetlistError as e:
            hits.append((e.code, e.line, e.col) == (exp["code"], exp["line"], exp["col"]))
    ok = all(trips) and all(hits) and len(golden) > 0 and len(hits) > 0
    record(10, ok, f"golden round-trips {sum(trips)}/{len(trips)}, malformed fixtures matched {sum(hits)}/{len(hits)}")
    assert ok
