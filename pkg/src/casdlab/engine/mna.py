"""Modified nodal analysis: DC operating point and fixed-step transient.

Unknowns are the non-ground node voltages followed by one branch current per
voltage source. MOSFET currents are evaluated for all devices at once through
:func:`casdlab.device.ids`. Capacitors (explicit, device, and a minimum capacitance
per node) are handled with trapezoidal or backward-Euler companion models.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..device import ids, thermal_voltage
from ..netlist.circuit import GROUND, Capacitor, Circuit, Resistor

__all__ = ["SimOptions", "SimulationError", "TransientResult", "DcSolution",
           "dc_operating_point", "transient", "options_from_circuit"]

TRAPEZOIDAL = "trapezoidal"
BACKWARD_EULER = "backward-euler"


class SimulationError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class SimOptions:
    dt: float = 1e-12
    t_stop: float = 1e-9
    method: str = TRAPEZOIDAL
    newton_tol_v: float = 1e-6
    newton_tol_i: float = 1e-9
    newton_max_iters: int = 100
    gmin: float = 1e-12
    temperature: float = 27.0
    leakage: bool = False
    cap_floor: float = 0.1e-15
    max_halvings: int = 8
    max_newton_step: float = 0.5
    uic: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_stop >= self.dt:
            raise ValueError("t_stop must be >= dt")
        if self.method not in (TRAPEZOIDAL, BACKWARD_EULER):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.newton_tol_v > 0 and self.newton_tol_i > 0):
            raise ValueError("tolerances must be positive")


def options_from_circuit(c: Circuit, **overrides) -> SimOptions:
    kw = {}
    if c.tran is not None:
        kw.update(dt=c.tran.dt, t_stop=c.tran.t_stop, uic=c.tran.uic)
    if c.temperature is not None:
        kw["temperature"] = c.temperature
    kw.update(overrides)
    return SimOptions(**kw)


@dataclass(frozen=True)
class DcSolution:
    voltages: dict[str, float]
    currents: dict[str, float]
    iterations: int
    residual: float
    shunt_current: float = 0.0

    def __getitem__(self, node: str) -> float:
        return 0.0 if node == GROUND else self.voltages[node]


@dataclass
class TransientResult:
    time: np.ndarray
    voltages: dict[str, np.ndarray]
    currents: dict[str, np.ndarray]
    residuals: np.ndarray
    stimuli: dict = field(default_factory=dict)
    source_nodes: dict = field(default_factory=dict)

    def source_voltage(self, source: str) -> np.ndarray:
        npos, nneg = self.source_nodes[source]
        return self.v(npos) - self.v(nneg)

    def v(self, node: str) -> np.ndarray:
        if node == GROUND:
            return np.zeros_like(self.time)
        return self.voltages[node]

    def i(self, source: str) -> np.ndarray:
        """Current delivered by ``source`` out of its positive terminal."""
        return self.currents[source]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        nodes, srcs = list(self.voltages), list(self.currents)
        w.writerow(["t_s"] + [f"{n}_V" for n in nodes] + [f"{s}_A" for s in srcs])
        cols = [self.time] + [self.voltages[n] for n in nodes] + [self.currents[s] for s in srcs]
        for row in zip(*cols):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


class _System:
    """Assembled matrices and device tables for one circuit."""

    def __init__(self, c: Circuit, opt: SimOptions):
        self.circuit = c
        self.opt = opt
        self.nodes = c.nodes
        self.index = {n: k for k, n in enumerate(self.nodes)}
        n = self.n = len(self.nodes)
        self.sources = list(c.sources())
        m = len(self.sources)
        self.size = n + m
        g = self.n_ext = n + 1  # slot n stands for ground in extended vectors

        G = np.zeros((g + m, g + m))
        C = np.zeros((g, g))
        for el in c.elements:
            if isinstance(el, Resistor):
                self._two(G, el.n1, el.n2, 1.0 / el.value)
            elif isinstance(el, Capacitor):
                self._two(C, el.n1, el.n2, el.value)
        for k, src in enumerate(self.sources):
            row = g + k
            a, b = self.ix(src.npos), self.ix(src.nneg)
            G[a, row] += 1.0
            G[b, row] -= 1.0
            G[row, a] += 1.0
            G[row, b] -= 1.0

        mos = list(c.mosfets())
        self.n_mos = len(mos)
        self.d = np.array([self.ix(x.d) for x in mos], dtype=int)
        self.g = np.array([self.ix(x.g) for x in mos], dtype=int)
        self.s = np.array([self.ix(x.s) for x in mos], dtype=int)
        params = [c.device_params(x) for x in mos]
        self.sign = np.array([p.polarity.sign for p in params], dtype=float)
        self.vth = np.array([p.vth for p in params])
        self.kp = np.array([p.kp for p in params])
        self.lam = np.array([p.lambda_ for p in params])
        self.i0 = np.array([p.subthreshold_i0 for p in params])
        self.nsl = np.array([p.subthreshold_n for p in params])
        for x, p in zip(mos, params):
            self._two(C, x.g, x.s, p.cgs)
            self._two(C, x.g, x.d, p.cgd)
            self._two(C, x.d, x.b, p.cdb)
        # floor is a minimum per-node capacitance, so explicit loads stay exact
        diag = np.arange(n)
        C[diag, diag] += np.maximum(opt.cap_floor - C[diag, diag], 0.0)

        keep = np.r_[np.arange(n), np.arange(g, g + m)]
        self.G = G[np.ix_(keep, keep)]
        # nodes pinned to ground by a source need no shunt; leaving it off keeps
        # supply currents free of gmin terms
        pinned = {src.npos if src.nneg == GROUND else src.nneg
                  for src in self.sources if GROUND in (src.npos, src.nneg)}
        self.shunted = np.array([nd not in pinned for nd in self.nodes], dtype=bool)
        self.G[np.arange(n), np.arange(n)] += opt.gmin * self.shunted
        self.C = C[:n, :n]
        self.vt = thermal_voltage(opt.temperature)

    def ix(self, node: str) -> int:
        return self.n if node == GROUND else self.index[node]

    def _two(self, M, a, b, val):
        if not val:
            return
        i, j = self.ix(a), self.ix(b)
        M[i, i] += val
        M[j, j] += val
        M[i, j] -= val
        M[j, i] -= val

    def source_vector(self, t: float, alpha: float = 1.0) -> np.ndarray:
        b = np.zeros(self.size)
        for k, src in enumerate(self.sources):
            b[self.n + k] = alpha * src.stimulus.value(t)
        return b

    def devices(self, x: np.ndarray):
        """Device drain currents and their terminal partials at solution ``x``."""
        xe = np.append(x[: self.n], 0.0)
        vd, vg, vs = xe[self.d], xe[self.g], xe[self.s]
        sg = self.sign
        i, gm, gds = ids(sg * (vg - vs), sg * (vd - vs), self.vth, self.kp, self.lam,
                         self.i0, self.nsl, self.vt, self.opt.leakage)
        return sg * i, gm, gds

    def evaluate(self, x: np.ndarray, b: np.ndarray, cap_g: float = 0.0,
                 cap_hist: np.ndarray | None = None):
        """Residual and Jacobian. ``cap_g`` is 0 (DC), 1/h (BE) or 2/h (trapezoidal)."""
        n = self.n
        F = self.G @ x - b
        J = self.G.copy()
        if cap_g:
            F[:n] += cap_g * (self.C @ x[:n]) - cap_hist
            J[:n, :n] += cap_g * self.C
        if self.n_mos:
            idr, gm, gds = self.devices(x)
            fe = np.zeros(n + 1)
            np.add.at(fe, self.d, idr)
            np.add.at(fe, self.s, -idr)
            F[:n] += fe[:n]
            je = np.zeros((n + 1, n + 1))
            for rows, sgn in ((self.d, 1.0), (self.s, -1.0)):
                np.add.at(je, (rows, self.g), sgn * gm)
                np.add.at(je, (rows, self.d), sgn * gds)
                np.add.at(je, (rows, self.s), -sgn * (gm + gds))
            J[:n, :n] += je[:n, :n]
        return F, J

    def newton(self, x0: np.ndarray, b: np.ndarray, cap_g: float = 0.0,
               cap_hist: np.ndarray | None = None):
        """Returns ``(x, iterations, residual)`` or ``None`` when Newton fails."""
        opt, n = self.opt, self.n
        x = x0.copy()
        dx_max = math.inf
        for it in range(opt.newton_max_iters + 1):
            F, J = self.evaluate(x, b, cap_g, cap_hist)
            res_i = float(np.max(np.abs(F[:n]))) if n else 0.0
            res_v = float(np.max(np.abs(F[n:]))) if self.size > n else 0.0
            if dx_max < opt.newton_tol_v and res_i < opt.newton_tol_i and res_v < opt.newton_tol_v:
                return x, it, res_i
            if it == opt.newton_max_iters:
                return None
            try:
                dx = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                raise SimulationError("singular-matrix", "MNA matrix is singular (floating node?)")
            if not np.all(np.isfinite(dx)):
                return None
            np.clip(dx[:n], -opt.max_newton_step, opt.max_newton_step, out=dx[:n])
            x += dx
            dx_max = float(np.max(np.abs(dx[:n]))) if n else 0.0
        return None


def _build(c: Circuit, opt: SimOptions) -> _System:
    return _System(c, opt)


def _solution_maps(sys_: _System, x: np.ndarray):
    volts = {nd: float(x[k]) for k, nd in enumerate(sys_.nodes)}
    amps = {src.name: -float(x[sys_.n + k]) for k, src in enumerate(sys_.sources)}
    return volts, amps


def _pseudo_transient(sys_: _System, b: np.ndarray, x: np.ndarray):
    """Backward-Euler relaxation with sources frozen, growing the step until it is DC-like."""
    h, total = 1e-14, 0
    while h < 1e3:
        g = 1.0 / h
        out = sys_.newton(x, b, g, g * (sys_.C @ x[: sys_.n]))
        if out is None:
            h /= 4
            if h < 1e-18:
                return None, total
            continue
        x, it, _ = out
        total += it
        h *= 2
    return x, total


def _dc(sys_: _System, t: float = 0.0) -> tuple[np.ndarray, int, float]:
    """Plain Newton, then pseudo-transient continuation, then source stepping."""
    b = sys_.source_vector(t)
    x0 = np.zeros(sys_.size)
    out = sys_.newton(x0, b)
    if out is not None:
        return out
    x, total = _pseudo_transient(sys_, b, x0)
    if x is not None:
        out = sys_.newton(x, b)
        if out is not None:
            return out[0], total + out[1], out[2]
    x, total = x0, 0
    for alpha in np.linspace(0.05, 1.0, 20):
        out = sys_.newton(x, sys_.source_vector(t, alpha))
        if out is None:
            raise SimulationError("no-convergence",
                                  f"DC operating point failed at source scale {alpha:.2f}")
        x, it, res = out
        total += it
    return x, total, res


def dc_operating_point(c: Circuit, opt: SimOptions | None = None, t: float = 0.0) -> DcSolution:
    """Newton solution of the static nodal equations (capacitors open)."""
    opt = opt or SimOptions()
    sys_ = _build(c, opt)
    x, it, res = _dc(sys_, t)
    volts, amps = _solution_maps(sys_, x)
    shunt = float(opt.gmin * np.sum(x[: sys_.n] * sys_.shunted))
    return DcSolution(volts, amps, it, res, shunt)


def transient(c: Circuit, opt: SimOptions | None = None) -> TransientResult:
    """Fixed-grid implicit integration with local step halving on Newton failure."""
    opt = opt or options_from_circuit(c)
    sys_ = _build(c, opt)
    n = sys_.n
    steps = int(round(opt.t_stop / opt.dt))
    times = np.arange(steps + 1) * opt.dt

    if opt.uic:
        x = np.zeros(sys_.size)
        for node, v in c.initial.items():
            if node in sys_.index:
                x[sys_.index[node]] = v
        first_be = True
    else:
        try:
            x, _, _ = _dc(sys_, 0.0)
        except SimulationError as e:
            raise SimulationError("no-convergence", f"initial operating point: {e}") from e
        first_be = False
    i_cap = np.zeros(n)

    X = np.empty((steps + 1, sys_.size))
    X[0] = x
    residuals = np.zeros(steps + 1)
    trap = opt.method == TRAPEZOIDAL

    def step(x, i_cap, t, h, use_be):
        v_prev = x[:n]
        if trap and not use_be:
            g = 2.0 / h
            hist = g * (sys_.C @ v_prev) + i_cap
        else:
            g = 1.0 / h
            hist = g * (sys_.C @ v_prev)
        out = sys_.newton(x, sys_.source_vector(t + h), g, hist)
        if out is None:
            return None
        x_new, _, res = out
        i_new = g * (sys_.C @ x_new[:n]) - hist
        return x_new, i_new, res

    def advance(x, i_cap, t, h, level, use_be):
        out = step(x, i_cap, t, h, use_be)
        if out is not None:
            return out
        if level >= opt.max_halvings:
            raise SimulationError("step-failure", f"Newton failed at t={t:.6g}s after {level} halvings")
        half = h / 2
        x1, i1, _ = advance(x, i_cap, t, half, level + 1, use_be)
        return advance(x1, i1, t + half, half, level + 1, False)

    for k in range(steps):
        x, i_cap, res = advance(x, i_cap, times[k], opt.dt, 0, first_be and k == 0)
        X[k + 1] = x
        residuals[k + 1] = res

    voltages = {nd: X[:, j].copy() for j, nd in enumerate(sys_.nodes)}
    currents = {src.name: -X[:, n + j].copy() for j, src in enumerate(sys_.sources)}
    stimuli = {src.name: src.stimulus for src in sys_.sources}
    terminals = {src.name: (src.npos, src.nneg) for src in sys_.sources}
    return TransientResult(times, voltages, currents, residuals, stimuli, terminals)
