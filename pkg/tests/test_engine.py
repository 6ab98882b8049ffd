from pathlib import Path

import numpy as np
import pytest

from casdlab.device import default_deck
from casdlab.engine.mna import (BACKWARD_EULER, TRAPEZOIDAL, SimOptions, SimulationError, dc_operating_point,
                                options_from_circuit, transient)
from casdlab.netlist import GROUND, Capacitor, Circuit, Dc, Mosfet, Pulse, Resistor, VoltageSource, parse_file

GOLDEN = Path(__file__).parent / "data" / "golden"
TAU = 1e-9  # 1 kOhm * 1 pF


def inverter_chain(stages: int, stimulus) -> Circuit:
    deck = default_deck()
    els = [VoltageSource("VDD", "vdd", GROUND, Dc(0.9)), VoltageSource("VIN", "n0", GROUND, stimulus)]
    for k in range(stages):
        a, y = f"n{k}", f"n{k + 1}"
        els += [Mosfet(f"MP{k}", y, a, "vdd", "vdd", "pch", 2.0, 1.0),
                Mosfet(f"MN{k}", y, a, GROUND, GROUND, "nch"),
                Capacitor(f"C{k}", y, GROUND, 2e-15)]
    return Circuit(tuple(els), {"nch": deck.nmos, "pch": deck.pmos})


def rc_error(dt: float, method: str = TRAPEZOIDAL) -> float:
    c = parse_file(GOLDEN / "rc_step.cir")
    r = transient(c, options_from_circuit(c, dt=dt, method=method))
    return float(np.max(np.abs(r.v("out") - (1 - np.exp(-r.time / TAU)))))


class TestTransientAccuracy:
    def test_rc_error_at_tau_over_100(self):
        assert rc_error(TAU / 100) <= 0.005

    def test_trapezoidal_second_order(self):
        ratio = rc_error(TAU / 100) / rc_error(TAU / 200)
        assert 3.2 <= ratio <= 4.8

    def test_backward_euler_first_order(self):
        ratio = rc_error(TAU / 100, BACKWARD_EULER) / rc_error(TAU / 200, BACKWARD_EULER)
        assert ratio == pytest.approx(2.0, abs=0.1)

    def test_source_current_charges_cap(self):
        c = parse_file(GOLDEN / "rc_step.cir")
        r = transient(c)
        q = np.trapezoid(r.i("V1"), r.time)
        # charge delivered equals C * v(out) at the end
        assert q == pytest.approx(1e-12 * r.v("out")[-1], rel=1e-3)


class TestDc:
    def test_divider(self):
        sol = dc_operating_point(parse_file(GOLDEN / "divider.cir"))
        assert abs(sol.voltages["mid"] - 0.5) <= 1e-9

    def test_divider_exact_without_gmin(self):
        sol = dc_operating_point(parse_file(GOLDEN / "divider.cir"), SimOptions(gmin=0.0))
        assert sol.voltages["mid"] == 0.5

    def test_inverter_low_input(self):
        sol = dc_operating_point(inverter_chain(1, Dc(0.0)))
        assert abs(sol.voltages["n1"] - 0.9) <= 1e-3

    def test_inverter_high_input(self):
        sol = dc_operating_point(inverter_chain(1, Dc(0.9)))
        assert abs(sol.voltages["n1"]) <= 1e-3

    def test_floating_node_without_gmin(self):
        c = Circuit((VoltageSource("V1", "a", GROUND, Dc(1.0)), Resistor("R1", "a", GROUND, 1e3),
                     Capacitor("C1", "f", GROUND, 1e-12), Capacitor("C2", "f", "a", 1e-12)))
        with pytest.raises(SimulationError) as e:
            dc_operating_point(c, SimOptions(gmin=0.0))
        assert e.value.code in ("no-convergence", "singular-matrix")

    def test_floating_node_held_by_gmin(self):
        c = Circuit((VoltageSource("V1", "a", GROUND, Dc(1.0)), Resistor("R1", "a", GROUND, 1e3),
                     Capacitor("C1", "f", GROUND, 1e-12), Capacitor("C2", "f", "a", 1e-12)))
        assert dc_operating_point(c).voltages["f"] == pytest.approx(0.0, abs=1e-12)


@pytest.fixture(scope="module")
def result():
    p = Pulse(0.0, 0.9, 0.1e-9, 20e-12, 20e-12, 0.48e-9, 1e-9)
    return transient(inverter_chain(3, p), SimOptions(dt=2e-12, t_stop=2e-9))


class TestChain:
    def test_output_toggles(self, result):
        out = result.v("n3")
        assert out.max() > 0.85 and out.min() < 0.05

    def test_odd_chain_inverts(self, result):
        t = result.time
        hi = (t > 0.4e-9) & (t < 0.55e-9)
        assert np.all(result.v("n0")[hi] > 0.85)
        assert np.all(result.v("n3")[hi] < 0.1)

    def test_deterministic(self, result):
        p = Pulse(0.0, 0.9, 0.1e-9, 20e-12, 20e-12, 0.48e-9, 1e-9)
        again = transient(inverter_chain(3, p), SimOptions(dt=2e-12, t_stop=2e-9))
        assert again.to_csv() == result.to_csv()

    def test_csv_header(self, result):
        head = result.to_csv().splitlines()[0].split(",")
        assert head[0] == "t_s" and "n3_V" in head and "VDD_A" in head


class TestOptions:
    @pytest.mark.parametrize("kw", [dict(method="rk4"), dict(newton_tol_v=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimOptions(**kw)

    def test_from_circuit(self):
        opt = options_from_circuit(parse_file(GOLDEN / "inverter.cir"))
        assert (opt.dt, opt.t_stop, opt.temperature) == (2e-12, 2e-9, 85.0)
