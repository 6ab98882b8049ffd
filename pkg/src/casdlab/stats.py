"""Monte Carlo variation sampling and summary statistics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np

from .device import Deck, MosfetParams, default_deck

__all__ = ["VariationSpec", "McError", "McResult", "Summary", "sample_variations", "sample_one",
           "run_monte_carlo", "summarize", "HIST_BINS", "HIST_SPAN_SIGMA"]

HIST_BINS = 30
HIST_SPAN_SIGMA = 4.0
# perturbed parameters are floored at this fraction of nominal so decks stay valid
_FLOOR = 1e-3

DeckLike = Union[Deck, Mapping[str, MosfetParams]]


class McError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class VariationSpec:
    """Gaussian parameter spread.

    ``mode="mismatch"`` draws independently per device; ``mode="process"``
    draws one shift per sample shared by every device.
    """

    vth_sigma: float = 0.02
    kp_rel_sigma: float = 0.05
    mode: str = "mismatch"
    seed: int = 0

    def __post_init__(self):
        if self.vth_sigma < 0 or self.kp_rel_sigma < 0:
            raise ValueError("sigmas must be >= 0")
        if self.mode not in ("mismatch", "process"):
            raise ValueError(f"mode must be 'mismatch' or 'process', got {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def _perturb(p: MosfetParams, z_vth: float, z_kp: float, spec: VariationSpec) -> MosfetParams:
    if spec.vth_sigma == 0 and spec.kp_rel_sigma == 0:
        return p
    vth = max(p.vth + spec.vth_sigma * z_vth, _FLOOR * p.vth)
    kp = p.kp * max(1.0 + spec.kp_rel_sigma * z_kp, _FLOOR)
    return replace(p, vth=vth, kp=kp)


def _stream(spec: VariationSpec, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(i,)))


def sample_one(spec: VariationSpec, deck: DeckLike, i: int) -> DeckLike:
    """Sample ``i`` of the stream, computed without drawing samples ``0..i-1``."""
    items = [("nmos", deck.nmos), ("pmos", deck.pmos)] if isinstance(deck, Deck) else list(deck.items())
    rng = _stream(spec, i)
    if spec.mode == "process":
        z = rng.standard_normal(2)
        zs = np.tile(z, (len(items), 1))
    else:
        zs = rng.standard_normal((len(items), 2))
    out = {k: _perturb(p, float(a), float(b), spec) for (k, p), (a, b) in zip(items, zs)}
    if isinstance(deck, Deck):
        return Deck(out["nmos"], out["pmos"])
    return out


def sample_variations(spec: VariationSpec, deck: DeckLike, n: int) -> list[DeckLike]:
    """``n`` perturbed copies of ``deck`` (a :class:`Deck` or a per-device model map)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [sample_one(spec, deck, i) for i in range(n)]


@dataclass(frozen=True, eq=False)
class Summary:
    n: int
    mean: float
    std: float
    within_3sigma: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "std": self.std, "within_3sigma": self.within_3sigma,
                "hist_edges": self.hist_edges.tolist(), "hist_counts": self.hist_counts.tolist()}


def summarize(values: Sequence[float]) -> Summary:
    """Mean, unbiased std, fraction inside mean +- 3 std and a 30-bin histogram.

    The histogram spans mean +- 4 std; values outside land in the end bins so
    the counts always sum to n. A single value has undefined std (NaN).
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise McError("empty-input", "no values to summarize")
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if v.size > 1 else math.nan
    if v.size > 1:
        within = float(np.mean(np.abs(v - mean) <= 3 * std))
    else:
        within = 1.0
    half = HIST_SPAN_SIGMA * std if std > 0 else max(abs(mean), 1.0) * 1e-9
    edges = np.linspace(mean - half, mean + half, HIST_BINS + 1)
    counts = np.bincount(np.clip(np.searchsorted(edges, v, side="right") - 1, 0, HIST_BINS - 1),
                         minlength=HIST_BINS)
    return Summary(int(v.size), mean, std, within, edges, counts)


@dataclass(frozen=True, eq=False)
class McResult:
    n: int
    values: np.ndarray  # NaN where the sample failed
    status: tuple[str, ...]  # "ok" or the failure code
    summary: Summary
    spec: VariationSpec = field(compare=False)

    @property
    def failed(self) -> int:
        return sum(s != "ok" for s in self.status)

    @property
    def mean(self) -> float:
        return self.summary.mean

    @property
    def std(self) -> float:
        return self.summary.std

    @property
    def within_3sigma(self) -> float:
        return self.summary.within_3sigma

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_idx", "metric", "status"])
        for i, (v, s) in enumerate(zip(self.values, self.status)):
            w.writerow([i, repr(float(v)) if s == "ok" else "", s])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "mean": self.mean, "std": self.std,
                           "within_3sigma": self.within_3sigma, "failed": self.failed}, indent=2)


def run_monte_carlo(build: Callable[[DeckLike], Any], measure: Callable[[Any], float],
                    spec: VariationSpec, n: int, deck: DeckLike | None = None) -> McResult:
    """Evaluate ``measure(build(sample))`` for ``n`` sampled decks.

    The nominal deck is measured first and must succeed. A sample that raises
    is recorded with its error code instead of being dropped.
    """
    if deck is None:
        deck = default_deck()
    try:
        float(measure(build(deck)))
    except Exception as e:
        raise McError("nominal-failure", f"nominal run failed: {e}") from e
    values = np.full(n, np.nan)
    status = []
    for i, d in enumerate(sample_variations(spec, deck, n)):
        try:
            values[i] = float(measure(build(d)))
            status.append("ok")
        except Exception as e:
            status.append(str(getattr(e, "code", type(e).__name__)))
    ok = values[~np.isnan(values)]
    if ok.size == 0:
        raise McError("all-failed", f"all {n} samples failed")
    return McResult(n, values, tuple(status), summarize(ok), spec)
