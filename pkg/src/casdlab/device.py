"""Behavioral long-channel MOSFET model.

Square law with channel-length modulation, plus an optional subthreshold
exponential tail used for leakage studies. Voltages handed to the model are
polarity-normalized: a P device sees ``vgs = vs - vg`` and ``vds = vs - vd`` so
N and P share one set of equations.

The core evaluator :func:`ids` works element-wise on numpy arrays and returns
the current together with its partial derivatives; the simulator calls it
directly on all devices at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "Polarity", "Region", "MosfetParams", "OperatingPoint", "SmallSignal", "Deck",
    "INFINITE_RO", "thermal_voltage", "ids", "drain_current", "small_signal_at",
    "region_of", "terminal_current", "default_deck",
]

#: Thermal voltage at 27 degC.
VT_27C = 0.02585
T_REF_K = 300.15

#: Sentinel used for the output resistance of a device with no CLM (or off).
INFINITE_RO = math.inf


class Polarity(str, Enum):
    N = "N"
    P = "P"

    @property
    def sign(self) -> int:
        return 1 if self is Polarity.N else -1


class Region(str, Enum):
    CUTOFF = "cutoff"
    TRIODE = "triode"
    SATURATION = "saturation"


@dataclass(frozen=True)
class MosfetParams:
    """Device deck. ``kp`` is mu*Cox*W/L at the reference geometry ``w_ref/l_ref``."""

    polarity: Polarity = Polarity.N
    vth: float = 0.35
    kp: float = 400e-6
    lambda_: float = 0.1
    cgs: float = 0.0
    cgd: float = 0.0
    cdb: float = 0.0
    subthreshold_i0: float = 100e-9
    subthreshold_n: float = 1.5
    w_ref: float = 1.0
    l_ref: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not self.vth > 0:
            raise ValueError(f"vth must be positive, got {self.vth}")
        if not self.kp > 0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        if self.lambda_ < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        for name in ("cgs", "cgd", "cdb", "subthreshold_i0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.subthreshold_n < 1:
            raise ValueError("subthreshold slope factor must be >= 1")
        if not (self.w_ref > 0 and self.l_ref > 0):
            raise ValueError("reference geometry must be positive")

    def scaled(self, w: float | None, l: float | None) -> "MosfetParams":
        """Deck with kp rescaled for an instance of width ``w`` and length ``l``."""
        if w is None and l is None:
            return self
        w = self.w_ref if w is None else w
        l = self.l_ref if l is None else l
        return replace(self, kp=self.kp * (w / l) / (self.w_ref / self.l_ref))


@dataclass(frozen=True)
class OperatingPoint:
    vgs: float
    vds: float
    vbs: float = 0.0  # accepted, body effect is not modelled

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vgs, self.vds, self.vbs)):
            raise ValueError("operating point must be finite")


@dataclass(frozen=True)
class SmallSignal:
    gm: float
    ro: float
    region: Region


@dataclass(frozen=True)
class Deck:
    """An NMOS/PMOS model pair used by the topology generators."""

    nmos: MosfetParams
    pmos: MosfetParams

    def __post_init__(self):
        if self.nmos.polarity is not Polarity.N or self.pmos.polarity is not Polarity.P:
            raise ValueError("deck must hold an N model and a P model")


def default_deck() -> Deck:
    """Generic long-channel deck; PMOS kp is half the NMOS kp (mobility ratio)."""
    n = MosfetParams(Polarity.N, vth=0.35, kp=400e-6, lambda_=0.1,
                     cgs=0.6e-15, cgd=0.2e-15, cdb=0.3e-15,
                     subthreshold_i0=100e-9, subthreshold_n=1.5)
    p = replace(n, polarity=Polarity.P, kp=200e-6)
    return Deck(n, p)


def thermal_voltage(temperature_c: float = 27.0) -> float:
    return VT_27C * (temperature_c + 273.15) / T_REF_K


def ids(vgs, vds, vth, kp, lambda_, i0=0.0, n=1.5, vt=VT_27C, leakage=False):
    """Normalized drain current and its partials ``(i, di/dvgs, di/dvds)``.

    Works element-wise on arrays. Negative ``vds`` is handled by swapping the
    roles of drain and source, so the returned current is then negative.
    """
    vgs = np.asarray(vgs, dtype=float)
    vds = np.asarray(vds, dtype=float)
    swap = vds < 0
    vgs_e = np.where(swap, vgs - vds, vgs)
    vds_e = np.abs(vds)

    vov = vgs_e - vth
    on = vov > 0
    sat = on & (vds_e >= vov)
    tri = on & ~sat
    clm = 1.0 + lambda_ * vds_e

    i_sat = 0.5 * kp * vov**2
    i_tri = kp * (vov * vds_e - 0.5 * vds_e**2)
    i = np.where(sat, i_sat * clm, np.where(tri, i_tri * clm, 0.0))
    gm = np.where(sat, kp * vov * clm, np.where(tri, kp * vds_e * clm, 0.0))
    gds = np.where(sat, i_sat * lambda_,
                   np.where(tri, kp * (vov - vds_e) * clm + i_tri * lambda_, 0.0))

    if leakage:
        # above threshold the tail saturates at i0 so the total stays continuous
        below = vov < 0
        ex = np.exp(np.minimum(vov, 0.0) / (n * vt))
        fd = -np.expm1(-vds_e / vt)
        dfd = np.exp(-vds_e / vt) / vt
        il = i0 * ex * fd * clm
        i = i + il
        gm = gm + np.where(below, il / (n * vt), 0.0)
        gds = gds + i0 * ex * (dfd * clm + fd * lambda_)

    # back to the caller's orientation: i(vgs, vds) = -f(vgs - vds, -vds)
    i = np.where(swap, -i, i)
    gm_out = np.where(swap, -gm, gm)
    gds_out = np.where(swap, gm + gds, gds)
    return i, gm_out, gds_out


def drain_current(p: MosfetParams, op: OperatingPoint, leakage_enabled: bool = False,
                  temperature_c: float = 27.0) -> float:
    """Drain current magnitude (A) at a polarity-normalized operating point."""
    i, _, _ = ids(op.vgs, op.vds, p.vth, p.kp, p.lambda_, p.subthreshold_i0,
                  p.subthreshold_n, thermal_voltage(temperature_c), leakage_enabled)
    return float(i)


def region_of(p: MosfetParams, op: OperatingPoint) -> Region:
    vov = op.vgs - p.vth
    if vov < 0:
        return Region.CUTOFF
    if op.vds < vov:
        return Region.TRIODE
    return Region.SATURATION


def small_signal_at(p: MosfetParams, op: OperatingPoint) -> SmallSignal:
    """Transconductance and output resistance at ``op``.

    In saturation ``ro = 1/(lambda * kp/2 * vov^2)``; with ``lambda = 0`` or in
    cutoff the output resistance is :data:`INFINITE_RO`.
    """
    region = region_of(p, op)
    if region is Region.CUTOFF:
        return SmallSignal(0.0, INFINITE_RO, region)
    _, gm, gds = ids(op.vgs, op.vds, p.vth, p.kp, p.lambda_)
    gm, gds = float(gm), float(gds)
    ro = 1.0 / gds if gds > 0 else INFINITE_RO
    return SmallSignal(gm, ro, region)


def terminal_current(p: MosfetParams, vd: float, vg: float, vs: float,
                     leakage_enabled: bool = False, temperature_c: float = 27.0) -> float:
    """Current flowing into the drain terminal for absolute node voltages."""
    s = p.polarity.sign
    i, _, _ = ids(s * (vg - vs), s * (vd - vs), p.vth, p.kp, p.lambda_,
                  p.subthreshold_i0, p.subthreshold_n, thermal_voltage(temperature_c),
                  leakage_enabled)
    return s * float(i)
