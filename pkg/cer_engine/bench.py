"""
Throughput benchmark and run-count predictions.

Throughput counts processing and reporting time only: events are
materialized before the clock starts, and matches go to a sink that just
counts, so that reporting cannot be optimized away.
"""

import logging
import time
from math import comb
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from cer_engine.compiler import CompiledPattern
from cer_engine.engine import advance, engine_init, engine_stats
from cer_engine.events import Event

logger = logging.getLogger(__name__)

SAMPLE_EVERY = 10_000


class ModTenSink:
    """
    Match sink that touches every marked event.

    ``hits`` counts the marked indices divisible by 10.
    """

    def __init__(self):
        self.matches = 0
        self.hits = 0

    def __call__(self, detection_index: int, indices) -> None:
        self.matches += 1
        for i in indices:
            if i % 10 == 0:
                self.hits += 1


class BenchReport(BaseModel):
    """Mean figures over the repetitions of one benchmark."""

    events_consumed: int = Field(ge=0)
    matches_emitted: int = Field(ge=0)
    elapsed_ns: int = Field(ge=0)
    events_per_second: float = Field(ge=0)
    peak_active_runs: int = Field(ge=0)
    mean_active_runs: float = Field(ge=0)
    repeats: int = Field(ge=1)
    counters: Dict[str, int] = Field(default_factory=dict)

    def to_lines(self) -> List[str]:
        """``key=value`` lines; counters are prefixed with ``counters.``."""
        lines = [f"{k}={v}" for k, v in self.model_dump(exclude={"counters"}).items()]
        lines.extend(f"counters.{k}={v}" for k, v in self.counters.items())
        return lines

    def to_row(self) -> Dict[str, Any]:
        """Flat record for plot-ready CSV output."""
        row = self.model_dump(exclude={"counters"})
        row.update({f"counters.{k}": v for k, v in self.counters.items()})
        return row


def _run_once(pattern: CompiledPattern, events: Sequence[Event], window: Optional[int], sample_every: int) -> Dict[str, Any]:
    sink = ModTenSink()
    st = engine_init(pattern.automaton, window, sink)
    samples = []
    began = time.perf_counter_ns()
    for event in events:
        advance(st, event)
        if event.index % sample_every == 0:
            samples.append(len(st.active))
    elapsed = max(time.perf_counter_ns() - began, 1)
    stats = engine_stats(st)
    if not samples:
        samples.append(stats.active_runs)
    return {
        "events_consumed": stats.cursor,
        "matches_emitted": stats.counters["matches_emitted"],
        "elapsed_ns": elapsed,
        "events_per_second": stats.cursor / (elapsed / 1e9),
        "peak_active_runs": stats.peak_active_runs,
        "mean_active_runs": sum(samples) / len(samples),
        "counters": stats.counters,
    }


def run_benchmark(
    pattern: CompiledPattern,
    events: Sequence[Event],
    repeat: int = 3,
    window: Optional[int] = None,
    sample_every: int = SAMPLE_EVERY,
) -> BenchReport:
    """
    Run the engine ``repeat`` times over ``events`` and average the timings.

    Args:
        pattern: Compiled streaming pattern
        events: Pre-loaded events
        repeat: Number of repetitions
        window: Overrides the pattern's window when given
        sample_every: Active runs are sampled every that many events

    Returns:
        BenchReport: Mean elapsed time and throughput; the run counts are
        identical across repetitions and taken from the last one
    """
    if repeat < 1:
        raise ValueError("repeat must be at least 1")
    window = pattern.window if window is None else window
    runs = [_run_once(pattern, events, window, sample_every) for _ in range(repeat)]
    frame = pd.DataFrame([{k: v for k, v in r.items() if k != "counters"} for r in runs])
    last = runs[-1]
    report = BenchReport(
        events_consumed=last["events_consumed"],
        matches_emitted=last["matches_emitted"],
        elapsed_ns=int(frame["elapsed_ns"].mean()),
        events_per_second=float(frame["events_per_second"].mean()),
        peak_active_runs=last["peak_active_runs"],
        mean_active_runs=float(frame["mean_active_runs"].mean()),
        repeats=repeat,
        counters=last["counters"],
    )
    logger.info("benchmark: %.0f events/s over %d repeats", report.events_per_second, repeat)
    return report


# --- run-count predictions --------------------------------------------------

def strict_runs_created(events: Sequence[Event], first: Callable[[Event], bool]) -> int:
    """
    Runs created by a strictly contiguous sequence: one clone per event
    satisfying the first terminal, since only the start run can branch.
    """
    return sum(1 for e in events if first(e))


def any_runs_created(n: int, window: int, terminals: int) -> int:
    """
    Runs created by a skip-till-any sequence of ``terminals`` marking
    terminals over ``n`` events that satisfy all of them.

    Every partial match of size j is a set of j positions spanning at most
    ``window`` events, created once.
    """
    total = 0
    for j in range(1, terminals + 1):
        if j == 1:
            total += n
            continue
        for span in range(j, min(window, n) + 1):
            total += comb(span - 2, j - 2) * (n - span + 1)
    return total


def geometric_run_bound(rate_window: float, terminals: int) -> float:
    """((R·w)^(i+1) − 1) / (R·w − 1): runs alive for one window, the start run included."""
    if rate_window == 1:
        return float(terminals + 1)
    return (rate_window ** (terminals + 1) - 1) / (rate_window - 1)


def simulate_any_runs(hits: Sequence[Sequence[bool]], window: int) -> Dict[str, int]:
    """
    Independent simulation of a register-free skip-till-any sequence.

    ``hits[k][j]`` says whether event k+1 satisfies terminal j.  Partial
    matches are tuples of positions; they expire once their first position
    falls out of the window.

    Returns:
        Dict[str, int]: runs_created, peak_active_runs and matches
    """
    partials: List[tuple] = []
    created = peak = matches = 0
    for k, row in enumerate(hits, 1):
        terminals = len(row)
        alive = [p for p in partials if k - p[0] + 1 <= window]
        grown = []
        for p in alive:
            grown.append(p)
            if row[len(p)]:
                created += 1
                if len(p) + 1 == terminals:
                    matches += 1
                else:
                    grown.append(p + (k,))
        if row and row[0]:
            created += 1
            if terminals == 1:
                matches += 1
            else:
                grown.append((k,))
        partials = grown
        peak = max(peak, len(partials) + 1)
    return {"runs_created": created, "peak_active_runs": max(peak, 1), "matches": matches}


def cost_per_event(active_runs: int, predicates: int, c_p: float = 1.0, c_c: float = 1.0, c_u: float = 1.0) -> float:
    """Run cost of one event: |Run| · (n_p · (c_p + c_c + c_u) − c_c)."""
    return active_runs * (predicates * (c_p + c_c + c_u) - c_c)
