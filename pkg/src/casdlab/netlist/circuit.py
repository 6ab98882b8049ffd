"""Circuit data model: immutable elements, stimuli and directives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

from ..device import MosfetParams

GROUND = "0"


@dataclass(frozen=True)
class Position:
    line: int
    col: int


@dataclass(frozen=True)
class Dc:
    level: float

    def value(self, t: float) -> float:
        return self.level


@dataclass(frozen=True)
class Pulse:
    """SPICE-style trapezoidal pulse train."""

    v1: float
    v2: float
    t_delay: float
    t_rise: float
    t_fall: float
    pulse_width: float
    period: float

    def __post_init__(self):
        if not (self.t_rise > 0 and self.t_fall > 0):
            raise ValueError("pulse rise and fall times must be positive")
        if self.pulse_width < 0 or self.t_delay < 0:
            raise ValueError("pulse width and delay must be >= 0")
        if not self.period > self.t_rise + self.t_fall + self.pulse_width:
            raise ValueError("pulse period must exceed rise + fall + width")

    @property
    def frequency(self) -> float:
        return 1.0 / self.period

    def value(self, t: float) -> float:
        if t < self.t_delay:
            return self.v1
        s = math.fmod(t - self.t_delay, self.period)
        if s < self.t_rise:
            return self.v1 + (self.v2 - self.v1) * s / self.t_rise
        s -= self.t_rise
        if s < self.pulse_width:
            return self.v2
        s -= self.pulse_width
        if s < self.t_fall:
            return self.v2 + (self.v1 - self.v2) * s / self.t_fall
        return self.v1

    def breakpoints(self, t_stop: float) -> list[float]:
        out, k = [], 0
        while True:
            base = self.t_delay + k * self.period
            if base > t_stop:
                return out
            for dt in (0.0, self.t_rise, self.t_rise + self.pulse_width,
                       self.t_rise + self.pulse_width + self.t_fall):
                out.append(base + dt)
            k += 1


Stimulus = Union[Dc, Pulse]


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    value: float
    pos: Position | None = field(default=None, compare=False, repr=False)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    value: float
    pos: Position | None = field(default=None, compare=False, repr=False)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class VoltageSource:
    name: str
    npos: str
    nneg: str
    stimulus: Stimulus
    pos: Position | None = field(default=None, compare=False, repr=False)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.npos, self.nneg)


@dataclass(frozen=True)
class Mosfet:
    name: str
    d: str
    g: str
    s: str
    b: str
    model: str
    w: float | None = None
    l: float | None = None
    pos: Position | None = field(default=None, compare=False, repr=False)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.d, self.g, self.s, self.b)


Element = Union[Resistor, Capacitor, VoltageSource, Mosfet]


@dataclass(frozen=True)
class Tran:
    dt: float
    t_stop: float
    uic: bool = False


@dataclass(frozen=True)
class Circuit:
    elements: tuple[Element, ...]
    models: Mapping[str, MosfetParams] = field(default_factory=dict)
    tran: Tran | None = None
    temperature: float | None = None
    initial: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "models", dict(self.models))
        object.__setattr__(self, "initial", dict(self.initial))

    @property
    def nodes(self) -> list[str]:
        """Non-ground node names in order of first appearance."""
        seen: dict[str, None] = {}
        for el in self.elements:
            for n in el.nodes:
                if n != GROUND:
                    seen.setdefault(n, None)
        return list(seen)

    def element(self, name: str) -> Element:
        for el in self.elements:
            if el.name.lower() == name.lower():
                return el
        raise KeyError(name)

    def mosfets(self) -> Iterator[Mosfet]:
        return (el for el in self.elements if isinstance(el, Mosfet))

    def sources(self) -> Iterator[VoltageSource]:
        return (el for el in self.elements if isinstance(el, VoltageSource))

    def device_params(self, m: Mosfet) -> MosfetParams:
        """Model of ``m`` with kp scaled by its W/L."""
        return self.models[m.model].scaled(m.w, m.l)

    def replace_element(self, name: str, new: Element) -> "Circuit":
        els = [new if el.name.lower() == name.lower() else el for el in self.elements]
        return replace(self, elements=tuple(els))

    def with_stimulus(self, source: str, stimulus: Stimulus) -> "Circuit":
        src = self.element(source)
        if not isinstance(src, VoltageSource):
            raise KeyError(f"{source} is not a voltage source")
        return self.replace_element(source, replace(src, stimulus=stimulus))

    def with_models(self, models: Mapping[str, MosfetParams]) -> "Circuit":
        merged = dict(self.models)
        merged.update(models)
        return replace(self, models=merged)

    def device_deck(self) -> dict[str, MosfetParams]:
        """Per-device model map (before W/L scaling), keyed by device name."""
        return {m.name: self.models[m.model] for m in self.mosfets()}

    def with_device_models(self, deck: Mapping[str, MosfetParams]) -> "Circuit":
        """Give every device named in ``deck`` its own private model."""
        models = dict(self.models)
        els = []
        for el in self.elements:
            if isinstance(el, Mosfet) and el.name in deck:
                key = f"{el.model}.{el.name}"
                models[key] = deck[el.name]
                el = replace(el, model=key)
            els.append(el)
        return replace(self, elements=tuple(els), models=models)
