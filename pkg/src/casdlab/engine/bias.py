"""Small-signal extraction at a DC bias point."""

from __future__ import annotations

from ..device import OperatingPoint, SmallSignal, small_signal_at
from ..latch import AbcFactors, abc_factors
from ..netlist.circuit import Circuit, Dc
from .mna import DcSolution, SimOptions, dc_operating_point

__all__ = ["device_small_signal", "balanced_latch_factors"]


def device_small_signal(c: Circuit, sol: DcSolution, name: str) -> SmallSignal:
    """gm and ro of MOSFET ``name`` at the node voltages in ``sol``."""
    m = c.element(name)
    p = c.device_params(m)
    s = p.polarity.sign
    vgs, vds = s * (sol[m.g] - sol[m.s]), s * (sol[m.d] - sol[m.s])
    if vds < 0:
        vgs, vds = vgs - vds, -vds
    return small_signal_at(p, OperatingPoint(vgs, vds))


def balanced_latch_factors(c: Circuit, opt: SimOptions | None = None,
                           devices: tuple[str, str, str] = ("MP3", "MN5", "MP5")) -> AbcFactors:
    """Latch factors of a level shifter biased with both inputs at mid-rail.

    ``devices`` names the diode load, the pull-down and the cross-coupled
    pull-up, in that order.
    """
    mid = 0.5 * c.element("VDDL").stimulus.value(0.0)
    biased = c.with_stimulus("VIN", Dc(mid)).with_stimulus("VINB", Dc(mid))
    sol = dc_operating_point(biased, opt)
    p3, n5, p5 = (device_small_signal(biased, sol, d) for d in devices)
    return abc_factors(p3, n5, p5)
