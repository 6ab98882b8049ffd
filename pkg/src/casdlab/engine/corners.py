"""Process/temperature corners applied to a model deck."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from ..device import Deck, MosfetParams, default_deck
from ..netlist.circuit import Circuit

__all__ = ["CornerSpec", "CornerError", "CORNERS", "VTH_TEMPCO", "KP_TEMP_EXPONENT",
           "T_NOMINAL_C", "apply_corner", "corner_sweep", "CornerRow"]

T_NOMINAL_C = 27.0
VTH_TEMPCO = -1e-3  # V/degC
KP_TEMP_EXPONENT = -1.5


@dataclass(frozen=True)
class CornerSpec:
    name: str
    temperature: float = T_NOMINAL_C
    dvth: float = 0.0
    kp_scale: float = 1.0

    def __post_init__(self):
        if not self.kp_scale > 0:
            raise ValueError(f"corner {self.name}: kp_scale must be positive")
        if not self.temperature > -273.15:
            raise ValueError(f"corner {self.name}: temperature below absolute zero")


CORNERS: dict[str, CornerSpec] = {
    "FF": CornerSpec("FF", -40.0, -0.03, 1.1),
    "TT": CornerSpec("TT", 27.0, 0.0, 1.0),
    "SS": CornerSpec("SS", 85.0, 0.03, 0.9),
}


class CornerError(RuntimeError):
    """A measurement failed at one corner; ``code`` is the underlying error code."""

    def __init__(self, corner: str, code: str, message: str):
        super().__init__(f"{code} at corner {corner}: {message}")
        self.corner = corner
        self.code = code


def _shift(p: MosfetParams, corner: CornerSpec) -> MosfetParams:
    dt = corner.temperature - T_NOMINAL_C
    vth = p.vth + corner.dvth + VTH_TEMPCO * dt
    temp_ratio = (corner.temperature + 273.15) / (T_NOMINAL_C + 273.15)
    kp = p.kp * corner.kp_scale * temp_ratio ** KP_TEMP_EXPONENT
    return replace(p, vth=vth, kp=kp)


def apply_corner(deck: Deck, corner: CornerSpec) -> Deck:
    """Deck shifted to ``corner``; TT reproduces ``deck`` exactly."""
    return Deck(_shift(deck.nmos, corner), _shift(deck.pmos, corner))


@dataclass(frozen=True)
class CornerRow:
    corner: str
    measure: str
    value: object


def corner_sweep(generator: Callable[[Deck], Circuit], corners: Sequence[CornerSpec],
                 measures: Mapping[str, Callable[[Circuit], object]],
                 deck: Deck | None = None) -> list[CornerRow]:
    """One row per (corner, measure), in input order.

    The circuit handed to each measure carries the corner temperature.
    """
    base = deck or default_deck()
    rows = []
    for corner in corners:
        c = replace(generator(apply_corner(base, corner)), temperature=corner.temperature)
        for name, fn in measures.items():
            try:
                value = fn(c)
            except Exception as e:
                code = getattr(e, "code", type(e).__name__)
                raise CornerError(corner.name, code, str(e)) from e
            rows.append(CornerRow(corner.name, name, value))
    return rows
