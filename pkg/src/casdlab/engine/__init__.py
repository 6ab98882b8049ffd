"""Transient/DC circuit engine, measurements and corner sweeps."""

from .mna import (DcSolution, SimOptions, SimulationError, TransientResult,
                  dc_operating_point, options_from_circuit, transient)
from .measure import (BisectionResult, ConfigError, DelayReport, DomainDelays, FailReason,
                      FunctionalResult, FunctionalSpec, LeakageReport, MeasurementError,
                      PowerReport, bisect_frequency, crossings, functional_check, max_frequency,
                      measure_delay, measure_domain_delays, measure_leakage, measure_power,
                      region_traces)
from .bias import balanced_latch_factors, device_small_signal
from .corners import CORNERS, CornerError, CornerRow, CornerSpec, apply_corner, corner_sweep
