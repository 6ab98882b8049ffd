"""Piecewise periodic waveforms and their fundamental Fourier coefficient.

Coefficient convention: ``c1 = (2/T) * integral_0^T v(t) exp(-j w t) dt`` so a
cosine of amplitude ``A`` has ``c1 = A`` and the load power is
``|c1|^2 / (2 R)``.

Exponential segments use a *landing* form: the segment starts at ``v_start``
and reaches ``v_end`` exactly at the end of its duration while following an
``exp(-t/tau)`` shape in between.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

__all__ = [
    "SegmentKind", "Segment", "PeriodicWaveform", "Harmonic",
    "fundamental_numeric", "fundamental_analytic", "segment_coefficient",
    "build_ideal_mismatch", "build_nonideal_mismatch", "square_wave",
    "DEFAULT_SAMPLES", "MIN_SAMPLES",
]

DEFAULT_SAMPLES = 2**20
MIN_SAMPLES = 1024
_PERIOD_RTOL = 1e-12
_SERIES_CUTOFF = 1e-3


class SegmentKind(str, Enum):
    CONSTANT = "constant"
    RAMP = "ramp"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    duration: float
    v_start: float
    v_end: float
    tau: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SegmentKind(self.kind))
        if not self.duration > 0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")
        if self.kind is SegmentKind.CONSTANT and self.v_start != self.v_end:
            raise ValueError("constant segment needs v_start == v_end")
        if self.kind is SegmentKind.EXPONENTIAL:
            if self.tau is None or not self.tau > 0:
                raise ValueError("exponential segment needs tau > 0")

    @classmethod
    def constant(cls, duration: float, level: float) -> "Segment":
        return cls(SegmentKind.CONSTANT, duration, level, level)

    @classmethod
    def ramp(cls, duration: float, v_start: float, v_end: float) -> "Segment":
        return cls(SegmentKind.RAMP, duration, v_start, v_end)

    @classmethod
    def exponential(cls, duration: float, v_start: float, v_end: float, tau: float) -> "Segment":
        return cls(SegmentKind.EXPONENTIAL, duration, v_start, v_end, tau)

    def value(self, s):
        """Segment value at local time ``s`` in ``[0, duration]``."""
        s = np.asarray(s, dtype=float)
        dv = self.v_end - self.v_start
        if self.kind is SegmentKind.CONSTANT:
            return np.full_like(s, self.v_start)
        if self.kind is SegmentKind.RAMP:
            return self.v_start + dv * s / self.duration
        return self.v_start + dv * np.expm1(-s / self.tau) / math.expm1(-self.duration / self.tau)

    def split(self, at: float) -> tuple["Segment", "Segment"]:
        if not 0 < at < self.duration:
            raise ValueError("split point must lie strictly inside the segment")
        mid = float(self.value(at))
        return (replace(self, duration=at, v_end=mid),
                replace(self, duration=self.duration - at, v_start=mid))


@dataclass(frozen=True)
class Harmonic:
    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "Harmonic":
        return cls(float(z.real), float(z.imag))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class PeriodicWaveform:
    period: float
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not self.segments:
            raise ValueError("waveform needs at least one segment")
        total = math.fsum(s.duration for s in self.segments)
        if abs(total - self.period) > _PERIOD_RTOL * self.period:
            raise ValueError(f"segment durations sum to {total!r}, expected {self.period!r}")

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    def starts(self) -> list[float]:
        out, t = [], 0.0
        for seg in self.segments:
            out.append(t)
            t += seg.duration
        return out

    def __call__(self, t):
        """Evaluate the periodic waveform at (array of) absolute times."""
        t = np.mod(np.asarray(t, dtype=float), self.period)
        out = np.empty_like(t)
        edges = np.cumsum([s.duration for s in self.segments])
        idx = np.minimum(np.searchsorted(edges, t, side="right"), len(self.segments) - 1)
        starts = np.concatenate(([0.0], edges[:-1]))
        for k, seg in enumerate(self.segments):
            m = idx == k
            if m.any():
                out[m] = seg.value(t[m] - starts[k])
        return out

    def scaled(self, a: float) -> "PeriodicWaveform":
        return PeriodicWaveform(self.period, [replace(s, v_start=a * s.v_start, v_end=a * s.v_end)
                                              for s in self.segments])

    def offset(self, dc: float) -> "PeriodicWaveform":
        return PeriodicWaveform(self.period, [replace(s, v_start=s.v_start + dc, v_end=s.v_end + dc)
                                              for s in self.segments])

    def __add__(self, other: "PeriodicWaveform") -> "PeriodicWaveform":
        """Pointwise sum of two waveforms sharing one segmentation grid.

        Only kind combinations that stay in the segment family are allowed:
        anything plus a constant, ramp plus ramp, and exponentials with equal tau.
        """
        if self.period != other.period or len(self.segments) != len(other.segments):
            raise ValueError("waveforms do not share a segmentation grid")
        out = []
        for a, b in zip(self.segments, other.segments):
            if a.duration != b.duration:
                raise ValueError("waveforms do not share a segmentation grid")
            kinds = {a.kind, b.kind}
            if SegmentKind.EXPONENTIAL in kinds:
                exps = [s for s in (a, b) if s.kind is SegmentKind.EXPONENTIAL]
                if SegmentKind.RAMP in kinds or len({s.tau for s in exps}) > 1:
                    raise ValueError(f"cannot add {a.kind.value} and {b.kind.value} segments")
                kind, tau = SegmentKind.EXPONENTIAL, exps[0].tau
            elif SegmentKind.RAMP in kinds:
                kind, tau = SegmentKind.RAMP, None
            else:
                kind, tau = SegmentKind.CONSTANT, None
            out.append(Segment(kind, a.duration, a.v_start + b.v_start, a.v_end + b.v_end, tau))
        return PeriodicWaveform(self.period, out)

    def shifted(self, t0: float) -> "PeriodicWaveform":
        """Waveform delayed by ``t0``: ``w'(t) = w(t - t0)``."""
        t0 = t0 % self.period
        if t0 == 0:
            return self
        cut = self.period - t0
        head, tail, t = [], [], 0.0
        for seg in self.segments:
            end = t + seg.duration
            if end <= cut:
                head.append(seg)
            elif t >= cut:
                tail.append(seg)
            else:
                a, b = seg.split(cut - t)
                head.append(a)
                tail.append(b)
            t = end
        return PeriodicWaveform(self.period, tail + head)

    def max_abs(self) -> float:
        peak = 0.0
        for seg in self.segments:
            peak = max(peak, abs(seg.v_start), abs(seg.v_end))
        return peak

    def to_csv(self, n_samples: int = 1000) -> str:
        """One period sampled on a uniform grid, columns ``t_s,v_V``."""
        t = np.linspace(0.0, self.period, n_samples, endpoint=False)
        v = self(t)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s", "v_V"])
        for ti, vi in zip(t, v):
            w.writerow([repr(float(ti)), repr(float(vi))])
        return buf.getvalue()


def _simpson(y: np.ndarray, h: float) -> complex:
    # y has an odd number of samples
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def fundamental_numeric(w: PeriodicWaveform, n_samples: int = DEFAULT_SAMPLES) -> Harmonic:
    """Composite-Simpson estimate of ``c1``.

    The ``n_samples`` budget is shared between segments in proportion to their
    duration and each segment is integrated on its own grid, so steps between
    segments never fall inside a Simpson panel.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    omega = w.omega
    total = 0j
    for t0, seg in zip(w.starts(), w.segments):
        panels = max(8, int(round(n_samples * seg.duration / w.period)))
        panels += panels % 2
        s = np.linspace(0.0, seg.duration, panels + 1)
        y = seg.value(s) * np.exp(-1j * omega * (t0 + s))
        total += _simpson(y, seg.duration / panels)
    return Harmonic.of(2.0 / w.period * total)


def _box(k: complex, d: float) -> complex:
    """integral_0^d exp(-k s) ds."""
    x = k * d
    if abs(x) < _SERIES_CUTOFF:
        return d * (1 - x / 2 + x * x / 6 - x**3 / 24)
    return (1 - np.exp(-x)) / k


def _ramp_moment(k: complex, d: float) -> complex:
    """integral_0^d s exp(-k s) ds."""
    x = k * d
    if abs(x) < _SERIES_CUTOFF:
        return d * d * (0.5 - x / 3 + x * x / 8 - x**3 / 30)
    return (1 - np.exp(-x) * (1 + x)) / (k * k)


def segment_coefficient(seg: Segment, t0: float, omega: float) -> complex:
    """Closed-form ``integral v(t) exp(-j w t) dt`` over one segment placed at ``t0``.

    Returned without the ``2/T`` prefactor.
    """
    jw = 1j * omega
    d = seg.duration
    dv = seg.v_end - seg.v_start
    if seg.kind is SegmentKind.CONSTANT:
        local = seg.v_start * _box(jw, d)
    elif seg.kind is SegmentKind.RAMP:
        local = seg.v_start * _box(jw, d) + dv / d * _ramp_moment(jw, d)
    else:
        # v = v_start + K (1 - exp(-s/tau)),  K = dv / (1 - exp(-d/tau))
        k_amp = dv / -math.expm1(-d / seg.tau)
        local = (seg.v_start + k_amp) * _box(jw, d) - k_amp * _box(1.0 / seg.tau + jw, d)
    return complex(np.exp(-jw * t0) * local)


def fundamental_analytic(w: PeriodicWaveform) -> Harmonic:
    """Sum of per-segment closed forms for ``c1``."""
    omega = w.omega
    total = sum(segment_coefficient(seg, t0, omega) for t0, seg in zip(w.starts(), w.segments))
    return Harmonic.of(2.0 / w.period * total)


def square_wave(v_low: float, v_high: float, period: float, duty: float = 0.5) -> PeriodicWaveform:
    if not 0 < duty < 1:
        raise ValueError("duty must be in (0, 1)")
    return PeriodicWaveform(period, [Segment.constant(duty * period, v_high),
                                     Segment.constant((1 - duty) * period, v_low)])


def build_ideal_mismatch(vdd: float, t_c: float, t_ms: float) -> PeriodicWaveform:
    """Stacked class-D output with ideal, equal-impedance switches.

    Each edge passes through an intermediate ``vdd`` plateau lasting ``t_ms``
    (one stack half has toggled, the other has not), so the full-swing pulse is
    ``t_c - t_ms`` wide.
    """
    if not vdd > 0 or not t_c > 0:
        raise ValueError("vdd and t_c must be positive")
    if not 0 <= t_ms < t_c:
        raise ValueError(f"need 0 <= t_ms < t_c, got t_ms={t_ms}, t_c={t_c}")
    if t_ms == 0:
        return square_wave(0.0, 2 * vdd, 2 * t_c)
    return PeriodicWaveform(2 * t_c, [
        Segment.constant(t_ms, vdd),
        Segment.constant(t_c - t_ms, 2 * vdd),
        Segment.constant(t_ms, vdd),
        Segment.constant(t_c - t_ms, 0.0),
    ])


def build_nonideal_mismatch(vdd: float, t_c: float, t_ms: float, ramp_fraction: float = 0.5,
                            tau: float | None = None, transition: float | None = None
                            ) -> PeriodicWaveform:
    """Stacked class-D output with finite switch resistance and output capacitance.

    Each rail-to-rail edge lasts ``transition`` (defaults to ``t_ms``): a linear
    ramp from the rail to the mid level ``vdd`` over ``ramp_fraction`` of it,
    followed by an RC settling exponential (time constant ``tau``) onto the
    opposite rail. With ``t_ms = 0`` the result is the ideal square wave.
    """
    if not vdd > 0 or not t_c > 0:
        raise ValueError("vdd and t_c must be positive")
    if not 0 <= t_ms < t_c:
        raise ValueError(f"need 0 <= t_ms < t_c, got t_ms={t_ms}, t_c={t_c}")
    if not 0 <= ramp_fraction <= 1:
        raise ValueError("ramp_fraction must lie in [0, 1]")
    if tau is None or not tau > 0:
        raise ValueError("tau must be positive")
    t_tr = t_ms if transition is None else transition
    if not 0 <= t_tr < t_c:
        raise ValueError("transition must lie in [0, t_c)")
    if t_tr == 0:
        return square_wave(0.0, 2 * vdd, 2 * t_c)

    t_ramp = ramp_fraction * t_tr
    t_exp = t_tr - t_ramp
    hi, mid, lo = 2 * vdd, vdd, 0.0

    def edge(start: float, end: float) -> list[Segment]:
        if t_exp == 0:
            return [Segment.ramp(t_ramp, start, end)]
        if t_ramp == 0:
            return [Segment.exponential(t_exp, start, end, tau)]
        return [Segment.ramp(t_ramp, start, mid), Segment.exponential(t_exp, mid, end, tau)]

    segs = edge(lo, hi) + [Segment.constant(t_c - t_tr, hi)] + edge(hi, lo) + [Segment.constant(t_c - t_tr, lo)]
    return PeriodicWaveform(2 * t_c, segs)
