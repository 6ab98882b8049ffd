"""Built-in level-shifter and stacked class-D circuits.

Every generated circuit has two supplies (``VDDL`` on node ``vddl``, ``VDDH``
on node ``vddh``) and a complementary input pair ``vin``/``vinb`` toggling
between 0 and vddl. Device widths are multiples of the deck reference width;
see ``docs/TOPOLOGY.md`` for the connectivity of each circuit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from ..device import Deck, default_deck
from .circuit import (GROUND, Capacitor, Circuit, Dc, Mosfet, Pulse, Resistor,
                      Tran, VoltageSource)

__all__ = ["KINDS", "TopologyError", "OutputTarget", "DEFAULT_SIZES", "LOW_DOMAIN_HEADROOM",
           "generate_topology", "output_targets", "domain_outputs", "input_pulse"]

KINDS = ("dcvs", "cm", "wcmls", "hvls", "cascode_classd")

LOW_DOMAIN_HEADROOM = 0.2

NMOS_MODEL = "nmod"
PMOS_MODEL = "pmod"

# widths in multiples of the deck reference width (L = reference length)
DEFAULT_SIZES: dict[str, dict[str, float]] = {
    "dcvs": {"MP1": 2, "MP2": 2, "MN1": 8, "MN2": 8},
    "cm": {"MP1": 2, "MP2": 2, "MN1": 8, "MN2": 8},
    "wcmls": {"MP1": 2, "MP2": 2, "MPF": 4, "MN1": 8, "MN2": 8},
    "hvls": {"MP1": 4, "MP2": 4, "MP3": 8, "MP4": 8, "MP5": 8, "MP6": 8,
             "MN1": 8, "MN2": 8, "MN3": 4, "MN4": 4, "MN5": 0.4, "MN6": 0.4},
    "cascode_classd": {"MP2": 16, "MP1": 16, "MN1": 8, "MN2": 8},
}


class TopologyError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class OutputTarget:
    """Levels a functional output must reach; ``in_phase`` relative to vin.

    ``ceiling`` optionally bounds the output from above (low-domain nodes).
    """

    node: str
    low: float
    high: float
    in_phase: bool = True
    ceiling: float | None = None


def input_pulse(vddl: float, freq: float, edge_fraction: float = 0.05,
                inverted: bool = False) -> Pulse:
    period = 1.0 / freq
    edge = edge_fraction * period
    width = period / 2 - edge
    lo, hi = (vddl, 0.0) if inverted else (0.0, vddl)
    return Pulse(lo, hi, 0.0, edge, edge, width, period)


def output_targets(kind: str, vddl: float, vddh: float) -> list[OutputTarget]:
    if kind in ("dcvs", "cm", "wcmls"):
        return [OutputTarget("out", 0.0, vddh)]
    if kind == "hvls":
        cap = vddl + LOW_DOMAIN_HEADROOM
        return [OutputTarget("x", 0.0, vddh), OutputTarget("xb", 0.0, vddh, False),
                OutputTarget("vol", 0.0, vddl, True, cap), OutputTarget("volb", 0.0, vddl, False, cap)]
    if kind == "cascode_classd":
        return [OutputTarget("out", 0.0, vddh, False)]
    raise TopologyError("unknown-topology", f"unknown topology {kind!r}")


def domain_outputs(kind: str) -> dict[str, str]:
    """Nodes used for the high-domain and low-domain delays of each circuit."""
    if kind == "hvls":
        return {"high": "voh", "low": "vol"}
    if kind in KINDS:
        return {"high": "out", "low": "out"}
    raise TopologyError("unknown-topology", f"unknown topology {kind!r}")


def _m(name, d, g, s, b, polarity, w):
    return Mosfet(name, d, g, s, b, NMOS_MODEL if polarity == "n" else PMOS_MODEL, float(w), 1.0)


def _dcvs(z):
    return [
        _m("MP1", "outb", "out", "vddh", "vddh", "p", z["MP1"]),
        _m("MP2", "out", "outb", "vddh", "vddh", "p", z["MP2"]),
        _m("MN1", "outb", "vin", GROUND, GROUND, "n", z["MN1"]),
        _m("MN2", "out", "vinb", GROUND, GROUND, "n", z["MN2"]),
    ]


def _cm(z):
    return [
        _m("MP1", "mir", "mir", "vddh", "vddh", "p", z["MP1"]),
        _m("MP2", "out", "mir", "vddh", "vddh", "p", z["MP2"]),
        _m("MN1", "mir", "vin", GROUND, GROUND, "n", z["MN1"]),
        _m("MN2", "out", "vinb", GROUND, GROUND, "n", z["MN2"]),
    ]


def _wcmls(z):
    return [
        _m("MP1", "mir", "mir", "vddh", "vddh", "p", z["MP1"]),
        _m("MP2", "out", "mir", "vddh", "vddh", "p", z["MP2"]),
        _m("MPF", "fb", "out", "mir", "vddh", "p", z["MPF"]),
        _m("MN1", "fb", "vin", GROUND, GROUND, "n", z["MN1"]),
        _m("MN2", "out", "vinb", GROUND, GROUND, "n", z["MN2"]),
    ]


def _hvls(z):
    return [
        _m("MP5", "vohb", "x", "vddh", "vddh", "p", z["MP5"]),
        _m("MP6", "voh", "xb", "vddh", "vddh", "p", z["MP6"]),
        _m("MP1", "xb", "vddl", "vohb", "vddh", "p", z["MP1"]),
        _m("MP2", "x", "vddl", "voh", "vddh", "p", z["MP2"]),
        _m("MP3", "volb", "volb", "vohb", "vddh", "p", z["MP3"]),
        _m("MP4", "vol", "vol", "voh", "vddh", "p", z["MP4"]),
        _m("MN1", "xb", "vin", GROUND, GROUND, "n", z["MN1"]),
        _m("MN2", "x", "vinb", GROUND, GROUND, "n", z["MN2"]),
        _m("MN3", "volb", "vin", GROUND, GROUND, "n", z["MN3"]),
        _m("MN4", "vol", "vinb", GROUND, GROUND, "n", z["MN4"]),
        # gates on the same-side high node: a ratioed DC level for vol/volb
        _m("MN5", "volb", "vohb", GROUND, GROUND, "n", z["MN5"]),
        _m("MN6", "vol", "voh", GROUND, GROUND, "n", z["MN6"]),
    ]


def _classd(z):
    # PMOS gate swings in the upper domain, NMOS gate in the lower one;
    # the cascode gates sit at vddl
    return [
        _m("MP2", "p1", "gp", "vddh", "vddh", "p", z["MP2"]),
        _m("MP1", "out", "vddl", "p1", "vddh", "p", z["MP1"]),
        _m("MN1", "out", "vddl", "n1", GROUND, "n", z["MN1"]),
        _m("MN2", "n1", "gn", GROUND, GROUND, "n", z["MN2"]),
    ]


_BUILDERS = {"dcvs": _dcvs, "cm": _cm, "wcmls": _wcmls, "hvls": _hvls, "cascode_classd": _classd}


def generate_topology(kind: str, vddl: float = 0.9, vddh: float = 1.8, deck: Deck | None = None,
                      *, freq: float = 1e9, load_cap: float = 2e-15, periods: int = 8,
                      steps_per_period: int = 200, edge_fraction: float = 0.05,
                      sizes: Mapping[str, float] | None = None,
                      r_load: float = 10e3) -> Circuit:
    """Build one of :data:`KINDS` with a ``.tran`` covering ``periods`` input cycles."""
    if kind not in _BUILDERS:
        raise TopologyError("unknown-topology", f"unknown topology {kind!r}; expected one of {KINDS}")
    if not (vddl > 0 and vddh >= vddl):
        raise TopologyError("invalid-supply", f"need vddh >= vddl > 0, got vddl={vddl}, vddh={vddh}")
    if not (freq > 0 and load_cap >= 0 and periods >= 1 and steps_per_period >= 20):
        raise TopologyError("invalid-parameter", "freq > 0, load_cap >= 0, periods >= 1, steps >= 20")
    deck = deck or default_deck()
    z = dict(DEFAULT_SIZES[kind])
    if sizes:
        unknown = set(sizes) - set(z)
        if unknown:
            raise TopologyError("invalid-parameter", f"unknown devices in sizes: {sorted(unknown)}")
        z.update(sizes)

    els: list = [
        VoltageSource("VDDL", "vddl", GROUND, Dc(vddl)),
        VoltageSource("VDDH", "vddh", GROUND, Dc(vddh)),
    ]
    if kind == "cascode_classd":
        # dual-domain drives: gp in [vddl, vddh], gn in [0, vddl], both in phase with vin
        p = input_pulse(vddl, freq, edge_fraction)
        els += [VoltageSource("VIN", "gn", GROUND, p),
                VoltageSource("VINP", "gp", GROUND,
                              replace(p, v1=vddl, v2=vddh))]
    else:
        els += [VoltageSource("VIN", "vin", GROUND, input_pulse(vddl, freq, edge_fraction)),
                VoltageSource("VINB", "vinb", GROUND, input_pulse(vddl, freq, edge_fraction, True))]
    els += _BUILDERS[kind](z)
    if kind == "cascode_classd":
        els.append(Resistor("RL", "out", "vddl", r_load))
    if load_cap > 0:
        for t in output_targets(kind, vddl, vddh):
            els.append(Capacitor(f"CL_{t.node}", t.node, GROUND, load_cap))
    models = {NMOS_MODEL: deck.nmos, PMOS_MODEL: deck.pmos}
    period = 1.0 / freq
    return Circuit(tuple(els), models, Tran(period / steps_per_period, periods * period))
