"""
Streaming run management.

Keeps the set of active runs of an epsilon-free streaming automaton and
advances all of them on every event: runs with no successor are
discarded, the first successor updates a run and every further successor
clones it.  A run that reaches a final state through a marking transition
is reported and killed.  Counters record the quantities of the run cost
model (guard evaluations, clones, updates).
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple, Union

from cer_engine.compiler import CompiledPattern
from cer_engine.condition import GuardFn
from cer_engine.errors import ConfigurationError, EngineContractError, OutputAgnosticError, StreamError
from cer_engine.events import Event, Match, Valuation
from cer_engine.sremo import Output
from cer_engine.srt import Srt, Transition

logger = logging.getLogger(__name__)

MatchSink = Callable[[int, Tuple[int, ...]], None]


@dataclass
class Counters:
    predicate_evaluations: int = 0
    run_clones: int = 0
    run_updates: int = 0
    runs_created: int = 0
    runs_discarded: int = 0
    runs_merged: int = 0
    matches_emitted: int = 0

    def snapshot(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Run:
    state: int
    valuation: Valuation
    marked: Tuple[int, ...] = ()
    created_at: int = 0

    @property
    def key(self) -> Tuple[int, Tuple[int, ...], Tuple[int, ...]]:
        return self.state, self.valuation.fingerprint, self.marked


class _Step(NamedTuple):
    guard: GuardFn
    target: int
    mark: bool
    writes: Tuple[str, ...]
    accepting: bool
    alive: bool


@dataclass
class EngineState:
    """
    Active runs over one stream.

    ``automaton`` is the prepared automaton the runs live in: final states
    never have outgoing transitions there, so no active run is ever in a
    final state.
    """

    automaton: Srt
    window: Optional[int] = None
    active: List[Run] = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)
    cursor: int = 0
    peak_active_runs: int = 0
    sink: Optional[MatchSink] = None
    table: Dict[int, Tuple[_Step, ...]] = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class EngineStats:
    counters: Dict[str, int]
    active_runs: int
    peak_active_runs: int
    cursor: int


def split_finals(T: Srt) -> Srt:
    """
    Give every final state with outgoing transitions a final sink twin.

    Marking transitions into such a state are duplicated into the twin,
    and the state itself stops being final: runs that accept end in the
    twin, and the copies that keep going continue from the original.
    A final start state without outgoing transitions is left in place
    behind a fresh, non-final start, so no run ever rests in a final state.
    """
    busy = sorted(q for q in T.finals if T.outgoing(q))
    idle_start = T.start in T.finals and not T.outgoing(T.start)
    if not busy and not idle_start:
        return T
    twins = {q: max(T.states) + 1 + i for i, q in enumerate(busy)}
    extra = [
        Transition(t.source, twins[t.target], t.guard, t.output, t.writes)
        for t in T.transitions
        if t.target in twins and t.output is Output.MARK
    ]
    states = T.states | set(twins.values())
    start = T.start
    if idle_start:
        start = max(states) + 1
        states = states | {start}
    finals = (T.finals - set(busy)) | set(twins.values())
    return Srt(states, start, finals, T.registers, T.transitions + tuple(extra))


def _compile_table(T: Srt) -> Dict[int, Tuple[_Step, ...]]:
    table = {}
    for q in T.states:
        table[q] = tuple(
            _Step(
                t.guard.compile(),
                t.target,
                t.output is Output.MARK,
                tuple(sorted(t.writes)),
                t.target in T.finals,
                bool(T.outgoing(t.target)),
            )
            for t in T.outgoing(q)
        )
    return table


def engine_init(T: Srt, window: Optional[int] = None, sink: Optional[MatchSink] = None) -> EngineState:
    """
    One run at the start state with an empty valuation; counters at zero.

    Raises:
        EngineContractError: ``T`` has epsilon transitions
        OutputAgnosticError: ``T`` cannot mark events
        ConfigurationError: ``window`` is not positive
    """
    if T.has_epsilon:
        raise EngineContractError("the engine runs epsilon-free automata only")
    if T.output_agnostic:
        raise OutputAgnosticError("output-agnostic automata cannot report matches")
    if window is not None and window < 1:
        raise ConfigurationError(f"window must be positive, got {window}")
    prepared = split_finals(T)
    state = EngineState(automaton=prepared, window=window, sink=sink, table=_compile_table(prepared))
    state.active.append(Run(prepared.start, Valuation.empty(prepared.registers)))
    state.peak_active_runs = 1
    return state


def advance(st: EngineState, t: Event) -> Tuple[EngineState, List[Match]]:
    """
    Consume the next event.

    Returns the (updated) state and the matches detected at ``t.index``,
    in emission order and without duplicates.

    Raises:
        StreamError: ``t`` is not the event right after the last one consumed
    """
    k = t.index
    if k != st.cursor + 1:
        raise StreamError(f"expected event {st.cursor + 1}, got {k}", row=k)
    counters = st.counters
    window = st.window
    start = st.automaton.start
    emitted: List[Match] = []
    reported: Set[Tuple[int, ...]] = set()
    keys: Set[Tuple[int, Tuple[int, ...], Tuple[int, ...]]] = set()
    active: List[Run] = []

    for run in st.active:
        if window is not None and run.marked and k - run.marked[0] + 1 > window:
            counters.runs_discarded += 1
            continue
        successors = 0
        for step in st.table[run.state]:
            counters.predicate_evaluations += 1
            if not step.guard(t, run.valuation):
                continue
            if successors:
                counters.run_clones += 1
                counters.runs_created += 1
            else:
                counters.run_updates += 1
            successors += 1
            marked = run.marked + (k,) if step.mark else run.marked
            if step.accepting and step.mark:
                if marked not in reported:
                    reported.add(marked)
                    emitted.append(Match(k, marked))
                continue
            if not step.alive:
                continue
            valuation = run.valuation.update(step.writes, t) if step.writes else run.valuation
            successor = Run(step.target, valuation, marked, run.created_at if successors == 1 else k)
            if successor.key in keys:
                counters.runs_merged += 1
                continue
            keys.add(successor.key)
            active.append(successor)
        if not successors:
            counters.runs_discarded += 1

    empty = Valuation.empty(st.automaton.registers)
    if (start, empty.fingerprint, ()) not in keys:
        active.append(Run(start, empty, (), k))
        counters.runs_created += 1

    st.active = active
    st.cursor = k
    st.peak_active_runs = max(st.peak_active_runs, len(active))
    counters.matches_emitted += len(emitted)
    if st.sink is not None:
        for m in emitted:
            st.sink(m.detection_index, m.indices)
    return st, emitted


def engine_stats(st: EngineState) -> EngineStats:
    return EngineStats(st.counters.snapshot(), len(st.active), st.peak_active_runs, st.cursor)


def run_stream(
    automaton: Union[Srt, CompiledPattern],
    events: Iterable[Event],
    window: Optional[int] = None,
    sink: Optional[MatchSink] = None,
) -> Tuple[List[Match], EngineState]:
    """Feed a whole stream through a fresh engine; a compiled pattern brings its own window."""
    if not isinstance(automaton, Srt):
        window = automaton.window if window is None else window
        automaton = automaton.automaton
    st = engine_init(automaton, window, sink)
    matches: List[Match] = []
    for event in events:
        _, found = advance(st, event)
        matches.extend(found)
    logger.info("processed %d events, %d matches, peak %d runs", st.cursor, len(matches), st.peak_active_runs)
    return matches, st
