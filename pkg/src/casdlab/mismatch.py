"""Output power of a stacked (cascoded) class-D PA under drive-edge mismatch."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, asdict
from typing import Sequence

from .waveform import (DEFAULT_SAMPLES, Harmonic, build_nonideal_mismatch,
                       fundamental_numeric)

__all__ = [
    "MismatchSpec", "CascodeParasitics", "PowerResult", "SweepTable", "SweepRow",
    "ideal_power", "delta_t", "mismatched_power_ideal", "mismatch_bracket",
    "cascode_rout", "cascode_cout", "time_constant", "power_from_fundamental",
    "degradation_sweep", "calibrated_tau", "TAU_FRACTION_OF_TC",
]

#: Default output time constant as a fraction of the half carrier period.
TAU_FRACTION_OF_TC = 0.05


def _positive(**kw):
    for name, v in kw.items():
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class MismatchSpec:
    vdd: float
    f_c: float
    r_opt: float
    t_ms: float = 0.0

    def __post_init__(self):
        _positive(vdd=self.vdd, f_c=self.f_c, r_opt=self.r_opt)
        if not 0 <= self.t_ms < self.t_c:
            raise ValueError("t_ms must lie in [0, t_c)")

    @property
    def t_c(self) -> float:
        return 1.0 / (2.0 * self.f_c)


@dataclass(frozen=True)
class CascodeParasitics:
    """Small-signal values of the two cascode branches (1 = driver, 2 = cascode)."""

    gm1n: float
    ro1n: float
    ro2n: float
    gm1p: float
    ro1p: float
    ro2p: float
    cgd_n: float
    cgd_p: float
    av: float

    def __post_init__(self):
        _positive(ro1n=self.ro1n, ro2n=self.ro2n, ro1p=self.ro1p, ro2p=self.ro2p,
                  cgd_n=self.cgd_n, cgd_p=self.cgd_p, av=self.av)
        if self.gm1n < 0 or self.gm1p < 0:
            raise ValueError("transconductances must be >= 0")


@dataclass(frozen=True)
class PowerResult:
    p_ideal: float
    p_mismatched: float

    @property
    def normalized(self) -> float:
        return self.p_mismatched / self.p_ideal


@dataclass(frozen=True)
class SweepRow:
    delta_t: float
    norm_ideal: float
    norm_nonideal: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]
    tau: float

    def __post_init__(self):
        if len(self.rows) < 2:
            raise ValueError("sweep needs at least two rows")

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta_t", "norm_ideal", "norm_nonideal"])
        for r in self.rows:
            w.writerow([repr(r.delta_t), repr(r.norm_ideal), repr(r.norm_nonideal)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2)


def ideal_power(vdd: float, r_opt: float) -> float:
    """Fundamental-tone load power of the synchronized stack, 8/pi^2 * vdd^2 / r_opt."""
    _positive(vdd=vdd, r_opt=r_opt)
    return 8.0 / math.pi**2 * vdd**2 / r_opt


def delta_t(t_ms: float, t_c: float) -> float:
    _positive(t_c=t_c)
    if not 0 <= t_ms < t_c:
        raise ValueError(f"need 0 <= t_ms < t_c, got {t_ms!r} vs {t_c!r}")
    return t_ms / t_c


def mismatch_bracket(dt: float) -> float:
    if not 0 <= dt < 1:
        raise ValueError(f"normalized mismatch must lie in [0, 1), got {dt!r}")
    return math.sin(math.pi * (0.5 - dt)) ** 2 + 0.25 * math.sin(0.5 * math.pi * dt) ** 2


def mismatched_power_ideal(p_ideal: float, dt: float) -> float:
    """Ideal-switch power under mismatch ``dt``: ``p_ideal`` times the degradation bracket."""
    return p_ideal * mismatch_bracket(dt)


def _branch(gm: float, ro1: float, ro2: float) -> float:
    return ro1 + ro2 + gm * ro1 * ro2


def cascode_rout(p: CascodeParasitics) -> float:
    r_on = _branch(p.gm1n, p.ro1n, p.ro2n)
    r_op = _branch(p.gm1p, p.ro1p, p.ro2p)
    return r_on * r_op / (r_on + r_op)


def cascode_cout(p: CascodeParasitics) -> float:
    miller = 1.0 + 1.0 / p.av
    return p.cgd_n * miller + p.cgd_p * miller


def time_constant(r_out: float, c_out: float) -> float:
    _positive(r_out=r_out, c_out=c_out)
    return r_out * c_out


def power_from_fundamental(c1: Harmonic | complex, r_opt: float) -> float:
    _positive(r_opt=r_opt)
    return abs(c1) ** 2 / (2.0 * r_opt)


def calibrated_tau(spec: MismatchSpec) -> float:
    return TAU_FRACTION_OF_TC * spec.t_c


def degradation_sweep(spec: MismatchSpec, parasitics: CascodeParasitics | None = None,
                      dt_grid: Sequence[float] = (0.0, 0.05, 0.1, 0.15, 0.2), *,
                      ramp_fraction: float = 0.5, tau: float | None = None,
                      n_samples: int = DEFAULT_SAMPLES) -> SweepTable:
    """Normalized output power versus mismatch, ideal-switch and RC models.

    The RC column builds the non-ideal stack waveform per grid point: the ramp
    part of each edge spans the mismatch window itself, so the full edge lasts
    ``t_ms / ramp_fraction``. The time constant comes from ``parasitics`` when
    given, else from the calibrated default (``TAU_FRACTION_OF_TC * t_c``).
    Both columns are normalized to the synchronized square-wave power.
    """
    grid = [float(x) for x in dt_grid]
    if len(grid) < 2:
        raise ValueError("dt_grid needs at least two points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("dt_grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] > 0.2:
        raise ValueError("dt_grid must lie within [0, 0.2]")
    if not 0 < ramp_fraction <= 1:
        raise ValueError("ramp_fraction must lie in (0, 1]")
    if tau is None:
        tau = (time_constant(cascode_rout(parasitics), cascode_cout(parasitics))
               if parasitics is not None else calibrated_tau(spec))

    p_ideal = ideal_power(spec.vdd, spec.r_opt)
    rows = []
    for dt in grid:
        t_ms = dt * spec.t_c
        w = build_nonideal_mismatch(spec.vdd, spec.t_c, t_ms, ramp_fraction, tau,
                                    transition=t_ms / ramp_fraction)
        p_rc = power_from_fundamental(fundamental_numeric(w, n_samples), spec.r_opt)
        rows.append(SweepRow(dt, mismatch_bracket(dt), p_rc / p_ideal))
    return SweepTable(tuple(rows), tau)
