from pathlib import Path

import numpy as np
import pytest

from casdlab.device import Region
from casdlab.engine.measure import (ConfigError, FunctionalSpec, MeasurementError, bisect_frequency,
                                    crossings, functional_check, max_frequency, measure_delay,
                                    measure_domain_delays, measure_leakage, measure_power, region_traces)
from casdlab.engine.mna import SimOptions, TransientResult, options_from_circuit, transient
from casdlab.netlist import Pulse, parse_file
from casdlab.netlist.topologies import OutputTarget, generate_topology, output_targets

GOLDEN = Path(__file__).parent / "data" / "golden"


def synthetic(t, nodes, currents=None, stimuli=None, terminals=None):
    return TransientResult(np.asarray(t, float), {k: np.asarray(v, float) for k, v in nodes.items()},
                           {k: np.asarray(v, float) for k, v in (currents or {}).items()},
                           np.zeros(len(t)), stimuli or {}, terminals or {})


def ramp_pair():
    # input crosses 0.5 V rising at 1.0 ns, output crosses 0.9 V rising at 1.7 ns
    t = np.linspace(0, 3e-9, 3001)
    vin = np.clip((t - 0.9e-9) / 0.2e-9, 0, 1)
    vout = 1.8 * np.clip((t - 1.6e-9) / 0.2e-9, 0, 1)
    return t, vin, vout


class TestCrossings:
    def test_linear_interpolation(self):
        times, dirs = crossings(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 0.0]), 0.25)
        assert times == pytest.approx([0.25, 1.75])
        assert list(dirs) == [1, -1]

    def test_none(self):
        assert len(crossings(np.arange(5.0), np.ones(5), 2.0)[0]) == 0


class TestDelay:
    def test_ramp_delay(self):
        t, vin, vout = ramp_pair()
        # add a falling pair so both directions exist: input falls at 2.0 ns, output at 2.7 ns
        vin = vin - np.clip((t - 1.9e-9) / 0.2e-9, 0, 1)
        vout = vout - 1.8 * np.clip((t - 2.6e-9) / 0.2e-9, 0, 1)
        rep = measure_delay(synthetic(t, {"a": vin, "y": vout}), "a", "y", 1.0, 1.8)
        assert rep.t_dh == pytest.approx(0.7e-9, rel=1e-9)
        assert rep.t_dl == pytest.approx(0.7e-9, rel=1e-9)
        assert rep.asymmetry == pytest.approx(0.0, abs=1e-9)

    def test_constant_output(self):
        t, vin, _ = ramp_pair()
        with pytest.raises(MeasurementError) as e:
            measure_delay(synthetic(t, {"a": vin, "y": np.zeros_like(t)}), "a", "y", 1.0, 1.8)
        assert e.value.code == "no-crossing"

    def test_missing_node(self):
        t, vin, vout = ramp_pair()
        with pytest.raises(ConfigError) as e:
            measure_delay(synthetic(t, {"a": vin}), "a", "y", 1.0, 1.8)
        assert e.value.code == "missing-node"

    def test_inverter_chain_delay_positive(self):
        c = generate_topology("dcvs", periods=3, steps_per_period=200)
        r = transient(c)
        rep = measure_delay(r, "vin", "out", 0.9, 1.8, settle=1e-9)
        assert 0 < rep.t_dh < 0.5e-9 and 0 < rep.t_dl < 0.5e-9
        assert rep.to_dict()["pass"] is True


def pulse_result(levels_hi, levels_lo, period=1e-9, cycles=8):
    """Output that is piecewise constant per half period, following a square-wave input."""
    t = np.linspace(0, cycles * period, cycles * 200 + 1)
    phase = (t % period) < period / 2
    vin = np.where(phase, 0.9, 0.0)
    # the output lags the input by a tenth of a period, like a real stage
    y = np.where(((t - 0.1 * period) % period) < period / 2, levels_hi, levels_lo)
    p = Pulse(0.0, 0.9, 0.0, 1e-12, 1e-12, period / 2 - 1e-12, period)
    return synthetic(t, {"vin": vin, "out": y}, stimuli={"VIN": p})


class TestFunctional:
    spec = FunctionalSpec([OutputTarget("out", 0.0, 1.8)])

    def test_pass(self):
        assert functional_check(pulse_result(1.8, 0.0), self.spec).passed

    def test_shortfall(self):
        res = functional_check(pulse_result(0.7 * 1.8, 0.0), self.spec)
        assert not res.passed
        assert {r.code for r in res.reasons} == {"swing-shortfall"}
        assert len(res.reasons) == self.spec.check_cycles

    def test_low_side_stuck(self):
        res = functional_check(pulse_result(1.8, 0.5), self.spec)
        assert [r.limit for r in res.reasons][0] == pytest.approx(0.18)

    def test_ceiling(self):
        spec = FunctionalSpec([OutputTarget("out", 0.0, 0.9, True, 1.1)])
        res = functional_check(pulse_result(1.5, 0.0), spec)
        assert "ceiling-exceeded" in {r.code for r in res.reasons}

    def test_missing_node(self):
        with pytest.raises(ConfigError) as e:
            functional_check(pulse_result(1.8, 0.0), FunctionalSpec([OutputTarget("nope", 0.0, 1.8)]))
        assert e.value.code == "missing-node"

    def test_window_too_long(self):
        with pytest.raises(ConfigError) as e:
            functional_check(pulse_result(1.8, 0.0, cycles=6), self.spec)
        assert e.value.code == "window-exceeds-result"

    @pytest.mark.parametrize("kw", [dict(low_margin=0.9, high_margin=0.1), dict(check_cycles=0)])
    def test_bad_spec(self, kw):
        with pytest.raises(ConfigError):
            FunctionalSpec([OutputTarget("out", 0.0, 1.8)], **kw)


class TestBisection:
    def test_synthetic_cutoff(self):
        res = bisect_frequency(lambda f: f <= 10e9, 1e9, 40e9, 0.1e9)
        assert abs(res.f_max - 10e9) <= 0.1e9
        assert res.f_pass <= 10e9 < res.f_fail
        assert res.probes <= int(np.ceil(np.log2(39e9 / 0.1e9))) + 1

    def test_bracket_invalid(self):
        with pytest.raises(MeasurementError) as e:
            bisect_frequency(lambda f: True, 1e9, 40e9, 0.1e9)
        assert e.value.code == "bracket-invalid"

    def test_history_records_probes(self):
        res = bisect_frequency(lambda f: f <= 3.3, 1.0, 5.0, 0.01)
        assert len(res.history) == res.probes + 2
        assert res.to_dict()["f_max_hz"] == res.f_max


class TestPower:
    def test_constant_supply(self):
        t = np.linspace(0, 1e-9, 11)
        r = synthetic(t, {"vdd": np.ones(11)}, {"VDD": np.full(11, 1e-3)}, terminals={"VDD": ("vdd", "0")})
        rep = measure_power(r, ["VDD"])
        assert rep.avg_power_w == pytest.approx(1e-3, rel=1e-12)
        assert rep.energy_j == pytest.approx(1e-12, rel=1e-12)

    def test_charging_capacitor_energy(self):
        # the source delivers C V^2 while charging C through R
        c = parse_file(GOLDEN / "rc_step.cir")
        r = transient(c, options_from_circuit(c, t_stop=15e-9))
        assert measure_power(r, ["V1"]).energy_j == pytest.approx(1e-12, rel=0.02)

    def test_empty_window(self):
        t = np.linspace(0, 1e-9, 11)
        r = synthetic(t, {"vdd": np.ones(11)}, {"VDD": np.ones(11)}, terminals={"VDD": ("vdd", "0")})
        with pytest.raises(MeasurementError) as e:
            measure_power(r, ["VDD"], (0.5e-9, 0.5e-9))
        assert e.value.code == "empty-window"

    def test_zero_current_is_zero_power(self):
        t = np.linspace(0, 1e-9, 11)
        r = synthetic(t, {"vdd": np.ones(11)}, {"VDD": np.zeros(11)}, terminals={"VDD": ("vdd", "0")})
        assert measure_power(r, ["VDD"]).avg_power_w == 0.0

    def test_pdp_and_period(self):
        t = np.linspace(0, 1e-9, 11)
        r = synthetic(t, {"vdd": np.ones(11)}, {"VDD": np.full(11, 2e-3)}, terminals={"VDD": ("vdd", "0")})
        rep = measure_power(r, ["VDD"], period=1e-10, delay=5e-11)
        assert rep.energy_per_cycle_j == pytest.approx(2e-13)
        assert rep.pdp_j == pytest.approx(1e-13)


class TestLeakage:
    def test_disabled_is_zero(self):
        rep = measure_leakage(generate_topology("dcvs"), leakage_enabled=False)
        assert rep.leakage_a == pytest.approx(0.0, abs=1e-15)

    def test_positive_when_enabled(self):
        rep = measure_leakage(generate_topology("dcvs"))
        assert rep.leakage_a > 0
        assert set(rep.per_supply) == {"VDDL", "VDDH"}

    def test_monotone_in_vddh(self):
        vals = [measure_leakage(generate_topology("hvls", vddh=v)).leakage_a for v in (1.0, 1.4, 1.8)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_unknown_static_source(self):
        with pytest.raises(ConfigError):
            measure_leakage(generate_topology("dcvs"), {"VX": 0.0})


class TestRegions:
    def test_inverter_regions(self):
        c = parse_file(GOLDEN / "inverter.cir")
        r = transient(c, options_from_circuit(c, t_stop=1e-9))
        regs = region_traces(c, r)
        assert set(regs) == {"MP", "MN"}
        assert len(regs["MN"]) == len(r.time)
        # input low at t = 0: NMOS off, PMOS conducting with vds ~ 0
        assert regs["MN"][0] is Region.CUTOFF
        assert regs["MP"][0] is Region.TRIODE
        assert Region.SATURATION in regs["MN"]


@pytest.mark.slow
class TestMaxFrequency:
    def test_decreases_with_load(self):
        spec = FunctionalSpec(output_targets("dcvs", 0.9, 1.8))
        f = [max_frequency(lambda fr, cl=cl: generate_topology("dcvs", freq=fr, load_cap=cl, steps_per_period=100),
                           0.5e9, 60e9, 2e9, spec).f_max for cl in (2e-15, 20e-15)]
        assert f[1] < f[0]

    def test_domain_delays_hvls(self):
        c = generate_topology("hvls", periods=3)
        r = transient(c)
        d = measure_domain_delays(r, "vin", "voh", "vol", 0.9, (0.9, 1.8), 0.9, settle=1e-9)
        assert d.t_dh > 0 and d.t_dl > 0
        assert d.asymmetry < 0.3
