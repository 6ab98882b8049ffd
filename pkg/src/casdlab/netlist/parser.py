"""Parser and canonical printer for the SPICE-subset netlist format.

Grammar (one statement per line, case-insensitive keywords)::

    * comment            # comment
    R<name> <n1> <n2> <value>
    C<name> <n1> <n2> <value>
    V<name> <n+> <n-> [DC] <value>
    V<name> <n+> <n-> PULSE(<v1> <v2> <td> <tr> <tf> <pw> <per>)
    M<name> <d> <g> <s> <b> <model> [W=<value>] [L=<value>]
    .model <name> nmos|pmos ([vth=] [kp=] [lambda=] [cgs=] [cgd=] [cdb=]
                             [i0=] [nslope=] [wref=] [lref=])
    .tran <dt> <tstop> [uic]
    .temp <celsius>
    .ic <node>=<value> ...
    .end

Values take the engineering suffixes f p n u m k meg g. Node ``gnd`` is an
alias of ground ``0``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Iterable

from ..device import MosfetParams, Polarity
from .circuit import (GROUND, Capacitor, Circuit, Dc, Mosfet, Position, Pulse,
                      Resistor, Tran, VoltageSource)

__all__ = ["NetlistError", "Diagnostic", "parse", "parse_file", "format_circuit",
           "parse_value", "validate"]

_SUFFIX = {"": 0, "f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "meg": 6, "g": 9}
_NUMBER = re.compile(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)$")
_TOKEN = re.compile(r"[^\s(),=]+|[()=]")

_MODEL_KEYS = {
    "vth": "vth", "kp": "kp", "lambda": "lambda_", "cgs": "cgs", "cgd": "cgd",
    "cdb": "cdb", "i0": "subthreshold_i0", "nslope": "subthreshold_n",
    "wref": "w_ref", "lref": "l_ref",
}
_MODEL_ORDER = list(_MODEL_KEYS)


class NetlistError(Exception):
    """Parse failure with a stable error code and a 1-based line/column."""

    def __init__(self, code: str, message: str, line: int, col: int, source: str = "<netlist>"):
        super().__init__(f"{source}:{line}:{col} {code} {message}")
        self.code = code
        self.line = line
        self.col = col
        self.source = source


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0

    def format(self, source: str = "<netlist>") -> str:
        return f"{source}:{self.line}:{self.col} {self.code} {self.message}"


@dataclass
class _Tok:
    text: str
    col: int


def _tokenize(line: str) -> list[_Tok]:
    raw = [_Tok(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]
    out: list[_Tok] = []
    i = 0
    while i < len(raw):
        t = raw[i]
        if t.text == "=" and out and i + 1 < len(raw):
            prev = out.pop()
            out.append(_Tok(f"{prev.text}={raw[i + 1].text}", prev.col))
            i += 2
            continue
        out.append(t)
        i += 1
    return out


def parse_value(text: str, line: int = 0, col: int = 0, source: str = "<netlist>") -> float:
    m = _NUMBER.match(text)
    if not m:
        raise NetlistError("malformed-number", f"cannot read a number from {text!r}", line, col, source)
    suffix = m.group(2).lower()
    if suffix not in _SUFFIX:
        raise NetlistError("bad-unit-suffix", f"unknown suffix {m.group(2)!r} in {text!r}", line, col, source)
    mant, exp = m.group(1), _SUFFIX[suffix]
    if not exp:
        return float(mant)
    # fold the suffix into the decimal exponent so "3f" is exactly 3e-15
    if "e" in mant.lower():
        base, e = mant.lower().split("e")
        return float(f"{base}e{int(e) + exp}")
    return float(f"{mant}e{exp}")


def _node(name: str) -> str:
    return GROUND if name.lower() == "gnd" else name


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.elements = []
        self.models: dict[str, MosfetParams] = {}
        self.model_pos: dict[str, Position] = {}
        self.tran = None
        self.temperature = None
        self.initial: dict[str, float] = {}
        self.names: set[str] = set()

    def err(self, code: str, msg: str, lineno: int, col: int):
        raise NetlistError(code, msg, lineno, col, self.source)

    def value(self, tok: _Tok, lineno: int) -> float:
        return parse_value(tok.text, lineno, tok.col, self.source)

    def positive(self, tok: _Tok, lineno: int) -> float:
        v = self.value(tok, lineno)
        if not v > 0:
            self.err("invalid-value", f"{tok.text} must be positive", lineno, tok.col)
        return v

    def arity(self, toks, n: int, lineno: int, what: str):
        if len(toks) != n:
            # first surplus token, or the last token when fields are missing
            col = toks[n].col if len(toks) > n else toks[-1].col
            self.err("arity-error", f"{what} expects {n - 1} fields, got {len(toks) - 1}", lineno, col)

    def statement(self, toks: list[_Tok], lineno: int):
        head = toks[0]
        if head.text.startswith("."):
            return self.directive(toks, lineno)
        key = head.text.lower()
        if key in self.names:
            self.err("duplicate-name", f"element {head.text} defined twice", lineno, head.col)
        letter = key[0]
        pos = Position(lineno, head.col)
        if letter in "rc":
            self.arity(toks, 4, lineno, head.text)
            cls = Resistor if letter == "r" else Capacitor
            el = cls(head.text, _node(toks[1].text), _node(toks[2].text),
                     self.positive(toks[3], lineno), pos=pos)
        elif letter == "v":
            el = self.vsource(toks, lineno, pos)
        elif letter == "m":
            el = self.mosfet(toks, lineno, pos)
        else:
            self.err("unknown-element", f"unsupported element {head.text!r}", lineno, head.col)
        self.names.add(key)
        self.elements.append(el)

    def vsource(self, toks, lineno, pos):
        if len(toks) < 4:
            self.arity(toks, 4, lineno, toks[0].text)
        npos, nneg = _node(toks[1].text), _node(toks[2].text)
        rest = toks[3:]
        kind = rest[0].text.lower()
        if kind == "pulse":
            vals = [t for t in rest[1:] if t.text not in "()"]
            if len(vals) != 7 or rest[1].text != "(" or rest[-1].text != ")":
                self.err("arity-error", "PULSE expects (v1 v2 td tr tf pw per)", lineno, rest[0].col)
            nums = [self.value(t, lineno) for t in vals]
            try:
                stim = Pulse(*nums)
            except ValueError as e:
                self.err("invalid-value", str(e), lineno, rest[0].col)
        else:
            if kind == "dc":
                rest = rest[1:]
            if len(rest) != 1:
                col = rest[1].col if len(rest) > 1 else toks[-1].col
                self.err("arity-error", "DC source expects one value", lineno, col)
            stim = Dc(self.value(rest[0], lineno))
        return VoltageSource(toks[0].text, npos, nneg, stim, pos=pos)

    def mosfet(self, toks, lineno, pos):
        if len(toks) < 6:
            self.arity(toks, 6, lineno, toks[0].text)
        params = {}
        for t in toks[6:]:
            if "=" not in t.text:
                self.err("arity-error", f"unexpected field {t.text!r}", lineno, t.col)
            k, v = t.text.split("=", 1)
            if k.lower() not in ("w", "l"):
                self.err("bad-parameter", f"unknown instance parameter {k!r}", lineno, t.col)
            params[k.lower()] = self.positive(_Tok(v, t.col + len(k) + 1), lineno)
        d, g, s, b = (_node(t.text) for t in toks[1:5])
        return Mosfet(toks[0].text, d, g, s, b, toks[5].text,
                      w=params.get("w"), l=params.get("l"), pos=pos)

    def directive(self, toks, lineno):
        head = toks[0]
        name = head.text.lower()
        if name == ".model":
            self.model(toks, lineno)
        elif name == ".tran":
            if len(toks) not in (3, 4):
                self.arity(toks, 3, lineno, ".tran")
            uic = False
            if len(toks) == 4:
                if toks[3].text.lower() != "uic":
                    self.err("bad-parameter", f"unknown .tran option {toks[3].text!r}", lineno, toks[3].col)
                uic = True
            dt, t_stop = self.positive(toks[1], lineno), self.positive(toks[2], lineno)
            if t_stop < dt:
                self.err("invalid-value", ".tran stop time must be >= step", lineno, toks[2].col)
            self.tran = Tran(dt, t_stop, uic)
        elif name == ".temp":
            self.arity(toks, 2, lineno, ".temp")
            self.temperature = self.value(toks[1], lineno)
        elif name == ".ic":
            for t in toks[1:]:
                if "=" not in t.text:
                    self.err("arity-error", ".ic expects node=value pairs", lineno, t.col)
                k, v = t.text.split("=", 1)
                self.initial[_node(k)] = self.value(_Tok(v, t.col + len(k) + 1), lineno)
        elif name == ".end":
            return "end"
        else:
            self.err("unknown-directive", f"unsupported directive {head.text!r}", lineno, head.col)

    def model(self, toks, lineno):
        if len(toks) < 3:
            self.arity(toks, 3, lineno, ".model")
        mname, mtype = toks[1].text, toks[2].text.lower()
        if mtype not in ("nmos", "pmos"):
            self.err("bad-parameter", f"model type must be nmos or pmos, got {toks[2].text!r}",
                     lineno, toks[2].col)
        body = toks[3:]
        if body and (body[0].text == "(") != (body[-1].text == ")"):
            self.err("arity-error", "unbalanced parentheses in model card", lineno, body[0].col)
        if body and body[0].text == "(":
            body = body[1:-1]
        kw = {}
        for t in body:
            if "=" not in t.text:
                self.err("arity-error", f"expected key=value, got {t.text!r}", lineno, t.col)
            k, v = t.text.split("=", 1)
            if k.lower() not in _MODEL_KEYS:
                self.err("bad-parameter", f"unknown model parameter {k!r}", lineno, t.col)
            kw[_MODEL_KEYS[k.lower()]] = self.value(_Tok(v, t.col + len(k) + 1), lineno)
        try:
            params = MosfetParams(Polarity.N if mtype == "nmos" else Polarity.P, **kw)
        except ValueError as e:
            self.err("invalid-value", str(e), lineno, toks[1].col)
        if mname in self.models:
            self.err("duplicate-name", f"model {mname} defined twice", lineno, toks[1].col)
        self.models[mname] = params
        self.model_pos[mname] = Position(lineno, toks[1].col)

    def finish(self) -> Circuit:
        for el in self.elements:
            if isinstance(el, Mosfet) and el.model not in self.models:
                self.err("unresolved-model", f"{el.name} references undefined model {el.model!r}",
                         el.pos.line, el.pos.col)
        return Circuit(tuple(self.elements), self.models, self.tran, self.temperature, self.initial)


def parse(text: str, source: str = "<netlist>") -> Circuit:
    p = _Parser(source)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "*#":
            continue
        if p.statement(_tokenize(line), lineno) == "end":
            break
    return p.finish()


def parse_file(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), source=str(path))


def _num(x: float) -> str:
    return repr(float(x))


def _format_model(name: str, p: MosfetParams) -> str:
    kind = "nmos" if p.polarity is Polarity.N else "pmos"
    body = " ".join(f"{k}={_num(getattr(p, _MODEL_KEYS[k]))}" for k in _MODEL_ORDER)
    return f".model {name} {kind} ({body})"


def format_circuit(c: Circuit) -> str:
    """Canonical text form; ``parse(format_circuit(c)) == c``."""
    lines = [_format_model(n, c.models[n]) for n in sorted(c.models)]
    for el in c.elements:
        if isinstance(el, (Resistor, Capacitor)):
            lines.append(f"{el.name} {el.n1} {el.n2} {_num(el.value)}")
        elif isinstance(el, VoltageSource):
            st = el.stimulus
            if isinstance(st, Pulse):
                args = " ".join(_num(getattr(st, f.name)) for f in fields(Pulse))
                lines.append(f"{el.name} {el.npos} {el.nneg} PULSE({args})")
            else:
                lines.append(f"{el.name} {el.npos} {el.nneg} DC {_num(st.level)}")
        else:
            extra = "".join(f" {k}={_num(v)}" for k, v in (("W", el.w), ("L", el.l)) if v is not None)
            lines.append(f"{el.name} {el.d} {el.g} {el.s} {el.b} {el.model}{extra}")
    if c.temperature is not None:
        lines.append(f".temp {_num(c.temperature)}")
    if c.initial:
        lines.append(".ic " + " ".join(f"{k}={_num(v)}" for k, v in sorted(c.initial.items())))
    if c.tran is not None:
        lines.append(f".tran {_num(c.tran.dt)} {_num(c.tran.t_stop)}" + (" uic" if c.tran.uic else ""))
    lines.append(".end")
    return "\n".join(lines) + "\n"


def validate(c: Circuit) -> list[Diagnostic]:
    """Structural checks: ground present and reachable, no dangling nodes, models resolved."""
    diags: list[Diagnostic] = []

    def at(el):
        return (el.pos.line, el.pos.col) if el.pos else (0, 0)

    for m in c.mosfets():
        if m.model not in c.models:
            diags.append(Diagnostic("unresolved-model", f"{m.name} references undefined model {m.model!r}", *at(m)))

    touches: dict[str, int] = {}
    sourced: set[str] = set()
    first: dict[str, tuple[int, int]] = {}
    for el in c.elements:
        for n in el.nodes:
            touches[n] = touches.get(n, 0) + 1
            first.setdefault(n, at(el))
        if isinstance(el, VoltageSource):
            sourced.update(el.nodes)

    if GROUND not in touches:
        diags.append(Diagnostic("no-ground", "no element connects to ground node 0"))
    for n, k in touches.items():
        if n != GROUND and k < 2 and n not in sourced:
            diags.append(Diagnostic("dangling-node", f"node {n!r} has a single connection", *first[n]))

    # union-find over element terminals
    parent = {n: n for n in touches}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for el in c.elements:
        ns = el.nodes
        for n in ns[1:]:
            parent[find(n)] = find(ns[0])
    if GROUND in touches:
        g = find(GROUND)
        for n in touches:
            if find(n) != g:
                diags.append(Diagnostic("unreachable-node", f"node {n!r} has no path to ground", *first[n]))
    return diags
