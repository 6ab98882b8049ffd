"""Netlist data model, text format and built-in level-shifter topologies."""

from .circuit import (GROUND, Capacitor, Circuit, Dc, Mosfet, Position, Pulse,
                      Resistor, Tran, VoltageSource)
from .parser import (Diagnostic, NetlistError, format_circuit, parse, parse_file,
                     parse_value, validate)

__all__ = [
    "GROUND", "Capacitor", "Circuit", "Dc", "Mosfet", "Position", "Pulse",
    "Resistor", "Tran", "VoltageSource", "Diagnostic", "NetlistError",
    "format_circuit", "parse", "parse_file", "parse_value", "validate",
]
