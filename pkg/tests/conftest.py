import numpy as np

from casdlab.waveform import PeriodicWaveform, Segment


def random_waveform(rng: np.random.Generator, max_segments: int = 8) -> PeriodicWaveform:
    """Piecewise waveform with random kinds, durations and levels (steps allowed)."""
    period = float(rng.uniform(1e-11, 1e-6))
    n = int(rng.integers(2, max_segments + 1))
    frac = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
    durations = frac / frac.sum() * period
    durations[-1] = period - durations[:-1].sum()
    segs = []
    for d in durations:
        kind = rng.choice(["constant", "ramp", "exponential"])
        a, b = (float(x) for x in rng.uniform(-2.0, 2.0, 2))
        if kind == "constant":
            segs.append(Segment.constant(float(d), a))
        elif kind == "ramp":
            segs.append(Segment.ramp(float(d), a, b))
        else:
            segs.append(Segment.exponential(float(d), a, b, float(d * rng.uniform(0.05, 2.0))))
    return PeriodicWaveform(period, segs)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
