"""Command-line front end: ``casdlab <command> [flags]``.

Every command writes its data files plus ``manifest.json`` into ``-o``;
diagnostics go to stderr. Exit codes: 0 success, 1 analysis error,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .device import Deck, Region, SmallSignal, default_deck
from .engine import (CORNERS, ConfigError, CornerError, FunctionalSpec, MeasurementError,
                     SimulationError, corner_sweep, max_frequency, measure_delay,
                     measure_leakage, measure_power, options_from_circuit, transient)
from .formcheck import check_forms
from .latch import LatchError, abc_factors, critical_delta, r_eq_full, req_table
from .mismatch import MismatchSpec, degradation_sweep
from .netlist import NetlistError, parse_file, validate
from .netlist.circuit import Circuit, Pulse
from .netlist.topologies import KINDS, TopologyError, generate_topology, output_targets
from .report import OutputDir, svg_line_chart
from .stats import McError, VariationSpec, run_monte_carlo

FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    """Bad configuration detected after argument parsing (exit code 2)."""


# module prefix for diagnostics, keyed by exception type
_MODULE_OF = {SimulationError: "engine", MeasurementError: "engine", CornerError: "engine",
              LatchError: "latch_analysis", McError: "stats"}


class _Ctx:
    """Per-invocation output settings."""

    def __init__(self, args: argparse.Namespace):
        self.formats = _parse_formats(args.format)
        self.seed = args.seed
        self.stdout = args.stdout
        self.out = OutputDir(args.output, args.command)

    def emit(self, fmt: str, name: str, text: str, primary: bool = False) -> None:
        if fmt not in self.formats:
            return
        self.out.write(name, text)
        if primary and self.stdout:
            sys.stdout.write(text)

    def finish(self) -> None:
        self.out.write_manifest()


def _parse_formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if not fmts or bad:
        raise UsageError(f"--format must be a non-empty subset of {','.join(FORMATS)}, got {text!r}")
    return fmts


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from e


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# ---- circuit selection shared by the simulation commands ----

def _add_circuit_args(p: argparse.ArgumentParser, netlist: bool = True) -> None:
    g = p.add_argument_group("circuit")
    if netlist:
        g.add_argument("--netlist", help="netlist file (overrides --topology)")
    g.add_argument("--topology", default="dcvs", choices=KINDS)
    g.add_argument("--vddl", type=float, default=0.9)
    g.add_argument("--vddh", type=float, default=1.8)
    g.add_argument("--freq", type=float, default=1e9, help="input frequency (Hz)")
    g.add_argument("--load-cap", type=float, default=2e-15)
    g.add_argument("--periods", type=int, default=8)
    g.add_argument("--steps-per-period", type=int, default=200)
    g.add_argument("--method", default="trapezoidal", choices=("trapezoidal", "backward-euler"))


def _generator(args) -> Callable[..., Circuit]:
    def gen(freq: float | None = None, deck: Deck | None = None, **kw) -> Circuit:
        kw = {"vddl": args.vddl, "vddh": args.vddh, **kw}
        return generate_topology(args.topology, deck=deck, freq=freq or args.freq, load_cap=args.load_cap,
                                 periods=args.periods, steps_per_period=args.steps_per_period, **kw)
    return gen


def _circuit(args) -> Circuit:
    if getattr(args, "netlist", None):
        path = Path(args.netlist)
        if not path.is_file():
            raise UsageError(f"netlist file not found: {path}")
        c = parse_file(path)
        problems = validate(c)
        if problems:
            raise UsageError("; ".join(d.format(str(path)) for d in problems))
        if c.tran is None:
            raise UsageError(f"{path}: a .tran directive is required")
        return c
    return _generator(args)()


def _simulate(c: Circuit, args):
    return transient(c, options_from_circuit(c, method=args.method))


def _input_period(r) -> float | None:
    stim = r.stimuli.get("VIN")
    return stim.period if isinstance(stim, Pulse) else None


def _swing(text: str | None, v: np.ndarray, mask: np.ndarray):
    if text:
        vals = _floats(text)
        return tuple(vals) if len(vals) == 2 else vals[0]
    return float(v[mask].min()), float(v[mask].max())


def _default_nodes(args, c: Circuit) -> tuple[str, str]:
    if getattr(args, "netlist", None):
        return "vin", "out"
    if args.topology == "cascode_classd":
        return "gn", "out"
    return "vin", "x" if args.topology == "hvls" else "out"


# ---- commands ----

def cmd_mismatch(args, ctx: _Ctx) -> None:
    grid = np.linspace(0.0, args.dt_max, args.points)
    table = degradation_sweep(MismatchSpec(args.vdd, args.fc, args.ropt), dt_grid=grid)
    ctx.emit("csv", "degradation.csv", table.to_csv(), primary=True)
    ctx.emit("json", "degradation.json", table.to_json() + "\n")
    ctx.emit("svg", "degradation.svg", svg_line_chart(
        [("ideal", table.column("delta_t"), table.column("norm_ideal")),
         ("RC", table.column("delta_t"), table.column("norm_nonideal"))],
        title="Normalized output power vs delay mismatch", xlabel="delta_t", ylabel="P / P_ideal"))


def cmd_negres(args, ctx: _Ctx) -> None:
    sat = Region.SATURATION
    f = abc_factors(SmallSignal(args.gm_p3, args.ro_p3, sat), SmallSignal(args.gm_n5, args.ro_n5, sat),
                    SmallSignal(args.gm_p5, args.ro_p5, sat))
    d_star = critical_delta(f.c)
    r = r_eq_full(f)
    lo, hi = (args.delta_min, args.delta_max) if args.delta_min is not None else (d_star - 1, d_star + 1)
    table = req_table(np.linspace(lo, hi, args.points), f.c, f.r0, f.ro_p5)
    ctx.emit("csv", "negres.csv", _csv(["delta", "r_eq_ohm", "singular"],
                                       [(d, e.value, str(e.singular).lower()) for d, e in table]), primary=True)
    ctx.emit("json", "negres.json", _json({"a": f.a, "b": f.b, "c": f.c, "r0_ohm": f.r0,
                                           "ro_p5_ohm": f.ro_p5, "delta": f.delta,
                                           "critical_delta": d_star, "r_eq_ohm": r.value,
                                           "singular": r.singular}))
    finite = [(d, e.value) for d, e in table if np.isfinite(e.value)]
    ctx.emit("svg", "negres.svg", svg_line_chart(
        [("R_eq", [d for d, _ in finite], [v for _, v in finite])],
        title="Equivalent resistance vs gain difference", xlabel="delta = a - b", ylabel="R_eq (ohm)"))


def cmd_sim(args, ctx: _Ctx) -> None:
    c = _circuit(args)
    r = _simulate(c, args)
    ctx.emit("csv", "transient.csv", r.to_csv(), primary=True)
    ctx.emit("json", "transient.json", _json({"nodes": list(r.voltages), "sources": list(r.currents),
                                              "points": int(r.time.size), "t_stop_s": float(r.time[-1]),
                                              "max_residual_a": float(r.residuals.max())}))
    ctx.emit("svg", "transient.svg", svg_line_chart(
        [(n, r.time * 1e9, v) for n, v in r.voltages.items()],
        title="Node voltages", xlabel="time (ns)", ylabel="V"))


def _settle_time(args, period: float, r) -> float:
    settle = args.settle_cycles * period
    if settle >= r.time[-1]:
        raise UsageError(f"--settle-cycles {args.settle_cycles} leaves no data in a "
                         f"{r.time[-1]:.4g} s run; raise --periods or lower --settle-cycles")
    return settle


def _delay_of(args, c: Circuit, r):
    in_node, out_node = args.input_node or _default_nodes(args, c)[0], args.output_node or _default_nodes(args, c)[1]
    period = _input_period(r) or r.time[-1] / 4
    settle = _settle_time(args, period, r)
    mask = r.time >= settle
    for node in (in_node, out_node):
        if node not in r.voltages:
            raise UsageError(f"node {node!r} is not in the circuit")
    inverting = (not getattr(args, "netlist", None)) and args.topology == "cascode_classd"
    return measure_delay(r, in_node, out_node, _swing(args.in_swing, r.v(in_node), mask),
                         _swing(args.out_swing, r.v(out_node), mask), settle=settle,
                         inverting=inverting if args.inverting is None else args.inverting), in_node, out_node


def cmd_delay(args, ctx: _Ctx) -> None:
    c = _circuit(args)
    r = _simulate(c, args)
    rep, in_node, out_node = _delay_of(args, c, r)
    d = rep.to_dict()
    ctx.emit("json", "delay.json", _json({"input": in_node, "output": out_node, **d}), primary=True)
    ctx.emit("csv", "delay.csv", _csv(["edge", "delay_s"], [("rise", x) for x in rep.rising]
                                      + [("fall", x) for x in rep.falling]))
    ctx.emit("svg", "delay.svg", svg_line_chart(
        [(in_node, r.time * 1e9, r.v(in_node)), (out_node, r.time * 1e9, r.v(out_node))],
        title="Propagation delay waveforms", xlabel="time (ns)", ylabel="V"))


def cmd_fmax(args, ctx: _Ctx) -> None:
    gen = _generator(args)
    spec = FunctionalSpec(output_targets(args.topology, args.vddl, args.vddh))
    res = max_frequency(lambda f: gen(freq=f), args.f_lo, args.f_hi, args.tol, spec)
    ctx.emit("json", "fmax.json", _json(res.to_dict()), primary=True)
    ctx.emit("csv", "fmax_probes.csv", _csv(["freq_hz", "pass"], [(f, str(ok).lower()) for f, ok in res.history]))
    hist = sorted(res.history)
    ctx.emit("svg", "fmax.svg", svg_line_chart(
        [("pass", [f / 1e9 for f, _ in hist], [float(ok) for _, ok in hist])],
        title="Functional probes", xlabel="frequency (GHz)", ylabel="pass (1) / fail (0)"))


def cmd_power(args, ctx: _Ctx) -> None:
    c = _circuit(args)
    r = _simulate(c, args)
    supplies = args.supplies.split(",") if args.supplies else [s for s in r.currents if s.upper().startswith("VDD")]
    period = _input_period(r)
    t0 = _settle_time(args, period, r) if period else 0.5 * r.time[-1]
    delay = None
    if period:
        try:
            delay = _delay_of(args, c, r)[0].mean
        except MeasurementError:
            pass
    rep = measure_power(r, supplies, (t0, float(r.time[-1])), period=period, delay=delay)
    ctx.emit("json", "power.json", _json({"supplies": supplies, **rep.to_dict()}), primary=True)
    p = sum(r.source_voltage(s) * r.i(s) for s in supplies)
    ctx.emit("csv", "power.csv", _csv(["t_s", "power_w"], list(zip(r.time, p))))
    ctx.emit("svg", "power.svg", svg_line_chart([("supply power", r.time * 1e9, p * 1e6)],
                                                title="Supply power", xlabel="time (ns)", ylabel="uW"))


def cmd_leakage(args, ctx: _Ctx) -> None:
    if args.netlist:
        c = _circuit(args)
        rows = [(float("nan"), measure_leakage(c).leakage_a)]
    else:
        gen = _generator(args)
        grid = _floats(args.vddh_grid) if args.vddh_grid else [args.vddh]
        rows = []
        for v in grid:
            c = gen(vddl=min(args.vddl, v), vddh=v)
            rows.append((v, measure_leakage(c).leakage_a))
    ctx.emit("csv", "leakage.csv", _csv(["vddh_v", "leakage_a"], rows), primary=True)
    ctx.emit("json", "leakage.json", _json({"leakage_a": rows[-1][1],
                                            "sweep": [{"vddh_v": v, "leakage_a": i} for v, i in rows]}))
    ctx.emit("svg", "leakage.svg", svg_line_chart([("leakage", [v for v, _ in rows], [i * 1e9 for _, i in rows])],
                                                  title="Static leakage vs supply", xlabel="VDDH (V)", ylabel="nA"))


def cmd_corners(args, ctx: _Ctx) -> None:
    gen = _generator(args)
    names = [n.strip().upper() for n in args.corners.split(",")]
    unknown = [n for n in names if n not in CORNERS]
    if unknown:
        raise UsageError(f"unknown corners {unknown}; expected a subset of {','.join(CORNERS)}")

    def delays(c):
        r = _simulate(c, args)
        return _delay_of(args, c, r)[0]

    last: list = [None, None]  # both delay measures share one transient per corner

    def cached(c):
        if last[0] is not c:
            last[:] = [c, delays(c)]
        return last[1]

    measures = {"t_dh_s": lambda c: cached(c).t_dh, "t_dl_s": lambda c: cached(c).t_dl,
                "leakage_a": lambda c: measure_leakage(c).leakage_a}
    rows = corner_sweep(lambda d: gen(deck=d), [CORNERS[n] for n in names], measures)
    ctx.emit("csv", "corners.csv", _csv(["corner", "measure", "value"], [(r.corner, r.measure, r.value) for r in rows]),
             primary=True)
    table: dict[str, dict[str, float]] = {}
    for r in rows:
        table.setdefault(r.corner, {})[r.measure] = r.value
    ctx.emit("json", "corners.json", _json(table))
    idx = list(range(len(names)))
    ctx.emit("svg", "corners.svg", svg_line_chart(
        [(m, idx, [table[n][m] * 1e12 for n in names]) for m in ("t_dh_s", "t_dl_s")],
        title="Delay over corners (" + ", ".join(names) + ")", xlabel="corner index", ylabel="ps"))


def cmd_mc(args, ctx: _Ctx) -> None:
    spec = VariationSpec(args.vth_sigma, args.kp_sigma, args.mode, ctx.seed)
    if args.metric == "synthetic":
        # linear in the sampled thresholds: Gaussian by construction
        deck = default_deck()
        res = run_monte_carlo(lambda d: d, lambda d: d.nmos.vth - d.pmos.vth, spec, args.n, deck)
    else:
        gen = _generator(args)
        nominal = gen()
        in_node, out_node = _default_nodes(args, nominal)

        def measure(c: Circuit) -> float:
            r = _simulate(c, args)
            period = _input_period(r)
            rep = measure_delay(r, in_node, out_node, args.vddl,
                                output_targets(args.topology, args.vddl, args.vddh)[0].high,
                                settle=period, inverting=args.topology == "cascode_classd")
            return rep.t_dh if args.metric == "t_dh" else rep.t_dl

        res = run_monte_carlo(lambda m: nominal.with_device_models(m), measure, spec, args.n,
                              nominal.device_deck())
    ctx.emit("csv", "mc_samples.csv", res.to_csv())
    ctx.emit("json", "mc_summary.json", res.to_json() + "\n", primary=True)
    s = res.summary
    centers = 0.5 * (s.hist_edges[1:] + s.hist_edges[:-1])
    ctx.emit("svg", "mc_histogram.svg", svg_line_chart([("count", centers, s.hist_counts)],
                                                       title=f"Monte Carlo {args.metric} (n={res.n})",
                                                       xlabel=args.metric, ylabel="count"))


def cmd_validate_eqs(args, ctx: _Ctx) -> None:
    grid = np.linspace(args.dt_min, args.dt_max, args.points)
    rep = check_forms(bracket_grid=grid)
    ctx.emit("csv", "validate_eqs.csv", rep.to_csv(), primary=True)
    ctx.emit("csv", "bracket_vs_oracle.csv", rep.detail_csv())
    ctx.emit("json", "validate_eqs.json", rep.to_json() + "\n")
    det = rep.bracket_detail
    ctx.emit("svg", "bracket_vs_oracle.svg", svg_line_chart(
        [("bracket", [d[0] for d in det], [d[1] for d in det]),
         ("waveform oracle", [d[0] for d in det], [d[2] for d in det])],
        title="Closed-form bracket vs waveform oracle", xlabel="delta_t", ylabel="P / P_ideal"))


COMMANDS: dict[str, Callable] = {
    "mismatch": cmd_mismatch, "negres": cmd_negres, "sim": cmd_sim, "delay": cmd_delay, "fmax": cmd_fmax,
    "power": cmd_power, "leakage": cmd_leakage, "corners": cmd_corners, "mc": cmd_mc,
    "validate-eqs": cmd_validate_eqs,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casdlab", description="Level-shifter and class-D analysis toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="out", help="output directory")
    common.add_argument("--format", default="csv,json,svg", help="comma-separated subset of csv,json,svg")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--stdout", action="store_true", help="also print the primary result to stdout")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("mismatch", parents=[common], help="output power vs delay mismatch")
    p.add_argument("--vdd", type=float, default=0.9)
    p.add_argument("--fc", type=float, default=12.4e9, help="carrier frequency (Hz)")
    p.add_argument("--ropt", type=float, default=50.0)
    p.add_argument("--dt-max", type=float, default=0.2)
    p.add_argument("--points", type=int, default=11)

    p = sub.add_parser("negres", parents=[common], help="latch negative-resistance analysis")
    for name, default in (("gm-p3", 1e-3), ("ro-p3", 1e5), ("gm-n5", 1e-3), ("ro-n5", 1e5),
                          ("gm-p5", 1e-3), ("ro-p5", 1e5)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--points", type=int, default=41)

    p = sub.add_parser("sim", parents=[common], help="transient simulation")
    _add_circuit_args(p)

    for name, hlp in (("delay", "propagation delay"), ("power", "supply power and energy")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        _add_circuit_args(p)
        p.add_argument("--input-node")
        p.add_argument("--output-node")
        p.add_argument("--in-swing", help="amplitude or low,high (default: measured)")
        p.add_argument("--out-swing", help="amplitude or low,high (default: measured)")
        p.add_argument("--settle-cycles", type=int, default=4)
        p.add_argument("--inverting", action=argparse.BooleanOptionalAction, default=None)
        if name == "power":
            p.add_argument("--supplies", help="comma-separated supply sources (default: VDD*)")

    p = sub.add_parser("fmax", parents=[common], help="maximum functional frequency by bisection")
    _add_circuit_args(p, netlist=False)
    p.add_argument("--f-lo", type=float, default=0.5e9)
    p.add_argument("--f-hi", type=float, default=100e9)
    p.add_argument("--tol", type=float, default=0.5e9)

    p = sub.add_parser("leakage", parents=[common], help="static leakage current")
    _add_circuit_args(p)
    p.add_argument("--vddh-grid", help="comma-separated VDDH values")

    p = sub.add_parser("corners", parents=[common], help="delay and leakage over process corners")
    _add_circuit_args(p, netlist=False)
    p.add_argument("--corners", default="FF,TT,SS")
    p.add_argument("--input-node")
    p.add_argument("--output-node")
    p.add_argument("--in-swing")
    p.add_argument("--out-swing")
    p.add_argument("--settle-cycles", type=int, default=4)
    p.add_argument("--inverting", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo variation study")
    _add_circuit_args(p, netlist=False)
    p.set_defaults(periods=3, steps_per_period=100)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--metric", default="t_dh", choices=("t_dh", "t_dl", "synthetic"))
    p.add_argument("--vth-sigma", type=float, default=0.02)
    p.add_argument("--kp-sigma", type=float, default=0.05)
    p.add_argument("--mode", default="mismatch", choices=("mismatch", "process"))

    p = sub.add_parser("validate-eqs", parents=[common], help="printed closed forms vs first principles")
    p.add_argument("--dt-min", type=float, default=0.02)
    p.add_argument("--dt-max", type=float, default=0.2)
    p.add_argument("--points", type=int, default=10)

    p = sub.add_parser("run", help="execute a key=value run file")
    p.add_argument("file")
    return ap


def run_file_argv(text: str, source: str = "<run file>") -> list[str]:
    """Translate a ``key = value`` run file into argv; ``command`` names the subcommand."""
    command, rest = None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "command":
            command = value
        elif value.lower() in ("true", "yes"):
            rest.append(f"--{key}")
        elif value.lower() in ("false", "no"):
            continue
        else:
            flag = "-o" if key in ("o", "output") else f"--{key}"
            rest += [flag, value]
    if command is None:
        raise UsageError(f"{source}: missing 'command = <name>'")
    return [command] + rest


def _run(argv: Sequence[str]) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with 2 on usage errors
    if args.command == "run":
        path = Path(args.file)
        if not path.is_file():
            raise UsageError(f"run file not found: {path}")
        inner = run_file_argv(path.read_text(encoding="utf-8"), str(path))
        if inner[0] == "run":
            raise UsageError("run files cannot nest")
        return _run(inner)
    ctx = _Ctx(args)
    COMMANDS[args.command](args, ctx)
    ctx.finish()
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    except (SimulationError, MeasurementError, CornerError, LatchError, McError) as e:
        module = _MODULE_OF.get(type(e), "casdlab")
        print(f"casdlab: error [{module}.{e.code}]: {e}", file=sys.stderr)
        return 1
    except (UsageError, ConfigError, TopologyError, NetlistError, ValueError) as e:
        code = getattr(e, "code", "config-error")
        print(f"casdlab: error [{code}]: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
