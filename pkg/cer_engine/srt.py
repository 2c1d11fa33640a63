"""
Symbolic register transducers.

An Srt is an immutable automaton whose transitions carry a guard (a
Condition, or EPSILON), an output (mark or skip) and a write set.  This
module holds the data model, the successor relation on configurations,
epsilon elimination and the exhaustive matcher the tests compare against
the brute-force oracle.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from cer_engine.condition import EPSILON, Guard
from cer_engine.config import EngineSettings, resolve
from cer_engine.errors import ConfigurationError, ExplosionError, OracleScaleError, OutputAgnosticError
from cer_engine.events import Event, RegisterSet, Valuation
from cer_engine.sremo import Output

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    source: int
    target: int
    guard: Guard
    output: Output = Output.SKIP
    writes: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "writes", frozenset(self.writes))
        if self.guard is EPSILON and (self.writes or self.output is not Output.SKIP):
            raise ConfigurationError("epsilon transitions cannot write registers or mark events")

    @property
    def is_epsilon(self) -> bool:
        return self.guard is EPSILON

    def label(self) -> str:
        return f"{self.guard} ↑ {self.output.symbol} ↓ {{{', '.join(sorted(self.writes))}}}"


@dataclass(frozen=True)
class Srt:
    """
    (states, start, finals, registers, transitions).

    ``output_agnostic`` automata come out of determinization and
    complement: their outputs carry no meaning and enumerating matches on
    them is refused.
    """

    states: FrozenSet[int]
    start: int
    finals: FrozenSet[int]
    registers: RegisterSet
    transitions: Tuple[Transition, ...]
    output_agnostic: bool = False
    _outgoing: Dict[int, Tuple[Transition, ...]] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if self.start not in self.states:
            raise ConfigurationError(f"start state {self.start} is not a state")
        if not self.finals <= self.states:
            raise ConfigurationError("final states must be states")
        outgoing: Dict[int, List[Transition]] = {q: [] for q in self.states}
        for t in self.transitions:
            if t.source not in self.states or t.target not in self.states:
                raise ConfigurationError(f"transition {t.source}->{t.target} leaves the state set")
            for name in list(t.writes) + list(t.guard.registers()):
                if name not in self.registers:
                    raise ConfigurationError(f"transition {t.source}->{t.target} names unknown register {name!r}")
            outgoing[t.source].append(t)
        object.__setattr__(self, "_outgoing", {q: tuple(ts) for q, ts in outgoing.items()})

    def outgoing(self, state: int) -> Tuple[Transition, ...]:
        return self._outgoing.get(state, ())

    @property
    def has_epsilon(self) -> bool:
        return any(t.is_epsilon for t in self.transitions)

    def summary(self) -> Dict[str, object]:
        return {
            "states": len(self.states),
            "transitions": len(self.transitions),
            "finals": len(self.finals),
            "registers": list(self.registers.names),
            "output_agnostic": self.output_agnostic,
        }


@dataclass(frozen=True)
class Configuration:
    """[cursor, state, valuation]; cursor is the index of the next event."""

    cursor: int
    state: int
    valuation: Valuation

    def __post_init__(self):
        if self.cursor < 1:
            raise ConfigurationError(f"cursor must be positive, got {self.cursor}")


Step = Tuple[Configuration, Transition]


def successors(T: Srt, c: Configuration, t: Optional[Event] = None) -> List[Step]:
    """
    Successor configurations of ``c``, in transition declaration order.

    Epsilon transitions keep cursor and valuation.  Consuming transitions
    need ``t`` (the event at ``c.cursor``); their guard is evaluated on it
    and the write set, if any, stores it.  ``c`` is never modified.
    """
    out: List[Step] = []
    for tr in T.outgoing(c.state):
        if tr.is_epsilon:
            out.append((Configuration(c.cursor, tr.target, c.valuation), tr))
        elif t is not None and tr.guard.evaluate(t, c.valuation):
            out.append((Configuration(c.cursor + 1, tr.target, c.valuation.update(tr.writes, t)), tr))
    return out


def run_is_accepting(T: Srt, run: Sequence[Step]) -> bool:
    """
    A run is accepting when it ends in a final state and its last
    consuming transition marks.
    """
    if not run:
        raise ConfigurationError("a run needs at least one step")
    if run[-1][0].state not in T.finals:
        return False
    for _, tr in reversed(run):
        if not tr.is_epsilon:
            return tr.output is Output.MARK
    return False


# --- epsilon elimination ----------------------------------------------------

def epsilon_closure(T: Srt, states: Iterable[int]) -> FrozenSet[int]:
    seen: Set[int] = set(states)
    stack = list(seen)
    while stack:
        q = stack.pop()
        for tr in T.outgoing(q):
            if tr.is_epsilon and tr.target not in seen:
                seen.add(tr.target)
                stack.append(tr.target)
    return frozenset(seen)


def _kernel(T: Srt, closure: FrozenSet[int]) -> FrozenSet[int]:
    # states that only pass epsilon moves along add nothing once the closure is taken
    return frozenset(q for q in closure if q in T.finals or any(not tr.is_epsilon for tr in T.outgoing(q)))


def eliminate_epsilon(T: Srt, settings: Optional[EngineSettings] = None) -> Srt:
    """
    Forward-closure construction: states become epsilon-closed subsets.

    Out of each subset, consuming transitions are grouped by (guard,
    output, write set); a group leads to the closure of all its targets.
    A subset is final if it holds a final state.  States that cannot reach
    a final state are pruned afterwards (the start always stays).

    Raises:
        ExplosionError: If the subset count exceeds the state cap
    """
    if not T.has_epsilon:
        return T
    settings = resolve(settings)

    start = _kernel(T, epsilon_closure(T, (T.start,)))
    ids: Dict[FrozenSet[int], int] = {start: 0}
    queue = deque([start])
    transitions: List[Transition] = []
    while queue:
        subset = queue.popleft()
        groups: Dict[Tuple[Guard, Output, FrozenSet[str]], Set[int]] = {}
        for q in sorted(subset):
            for tr in T.outgoing(q):
                if not tr.is_epsilon:
                    groups.setdefault((tr.guard, tr.output, tr.writes), set()).add(tr.target)
        for (guard, output, writes), targets in groups.items():
            target = _kernel(T, epsilon_closure(T, targets))
            if not target:
                continue
            if target not in ids:
                if len(ids) >= settings.state_cap:
                    raise ExplosionError("epsilon elimination exceeded the state cap", states=len(ids))
                ids[target] = len(ids)
                queue.append(target)
            transitions.append(Transition(ids[subset], ids[target], guard, output, writes))

    finals = {i for subset, i in ids.items() if subset & T.finals}
    result = prune_dead(
        Srt(frozenset(ids.values()), 0, frozenset(finals), T.registers, tuple(transitions), T.output_agnostic)
    )
    logger.debug("epsilon elimination: %d -> %d states", len(T.states), len(result.states))
    return result


# --- structural helpers -----------------------------------------------------

def reachable_states(T: Srt) -> Set[int]:
    seen = {T.start}
    stack = [T.start]
    while stack:
        q = stack.pop()
        for tr in T.outgoing(q):
            if tr.target not in seen:
                seen.add(tr.target)
                stack.append(tr.target)
    return seen


def live_states(T: Srt) -> Set[int]:
    """States from which a final state can be reached."""
    incoming: Dict[int, List[int]] = {}
    for tr in T.transitions:
        incoming.setdefault(tr.target, []).append(tr.source)
    seen = set(T.finals)
    stack = list(seen)
    while stack:
        q = stack.pop()
        for p in incoming.get(q, ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def prune_dead(T: Srt) -> Srt:
    """Drop states that are unreachable or cannot reach a final state; the start is kept."""
    keep = (reachable_states(T) & live_states(T)) | {T.start}
    if keep == set(T.states):
        return T
    transitions = tuple(tr for tr in T.transitions if tr.source in keep and tr.target in keep)
    return Srt(frozenset(keep), T.start, T.finals & keep, T.registers, transitions, T.output_agnostic)


def renumber(T: Srt, offset: int = 0) -> Srt:
    """Consecutive state ids starting at ``offset``, in breadth-first order from the start."""
    order = _bfs_order(T)
    for q in sorted(T.states):
        if q not in order:
            order[q] = len(order)
    ids = {q: offset + i for q, i in order.items()}
    return Srt(
        frozenset(ids.values()),
        ids[T.start],
        frozenset(ids[q] for q in T.finals),
        T.registers,
        tuple(Transition(ids[t.source], ids[t.target], t.guard, t.output, t.writes) for t in T.transitions),
        T.output_agnostic,
    )


def rename_registers(T: Srt, mapping: Mapping[str, str]) -> Srt:
    """Rename registers in guards, write sets and the register set."""
    registers = RegisterSet.of(mapping.get(r, r) for r in T.registers)
    transitions = tuple(
        Transition(
            t.source,
            t.target,
            t.guard if t.is_epsilon else t.guard.rename(mapping),
            t.output,
            frozenset(mapping.get(r, r) for r in t.writes),
        )
        for t in T.transitions
    )
    return Srt(T.states, T.start, T.finals, registers, transitions, T.output_agnostic)


def _sort_key(tr: Transition) -> Tuple[str, str, Tuple[str, ...]]:
    return (str(tr.guard), tr.output.value, tuple(sorted(tr.writes)))


def _bfs_order(T: Srt) -> Dict[int, int]:
    order = {T.start: 0}
    queue = deque([T.start])
    while queue:
        q = queue.popleft()
        for tr in sorted(T.outgoing(q), key=_sort_key):
            if tr.target not in order:
                order[tr.target] = len(order)
                queue.append(tr.target)
    return order


CanonicalForm = Tuple[int, FrozenSet[int], Tuple[Tuple[int, int, str, str, Tuple[str, ...]], ...]]


def canonical_form(T: Srt) -> CanonicalForm:
    """
    Label-independent description of the reachable part of ``T``.

    States are renumbered breadth-first, visiting outgoing transitions in
    order of their printed labels.  Two automata with equal canonical
    forms are isomorphic; the converse holds when no state has two
    outgoing transitions with the same label.
    """
    order = _bfs_order(T)
    edges = sorted(
        (order[t.source], order[t.target]) + _sort_key(t) for t in T.transitions if t.source in order
    )
    return len(order), frozenset(order[q] for q in T.finals if q in order), tuple(edges)


def is_isomorphic(a: Srt, b: Srt) -> bool:
    return canonical_form(a) == canonical_form(b)


def to_dot(T: Srt, name: str = "srt") -> str:
    """Graphviz rendering: finals doubled, edges labelled ``guard ↑ output ↓ {W}``."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in sorted(T.states):
        shape = "doublecircle" if q in T.finals else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    lines.append(f"  __start -> q{T.start};")
    for t in T.transitions:
        label = t.label().replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  q{t.source} -> q{t.target} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- exhaustive matching ----------------------------------------------------

# (state, valuation, marks, last consuming output marked)
_Node = Tuple[int, Valuation, FrozenSet[int], bool]


def _explore(T: Srt, events: Sequence[Event]) -> Set[_Node]:
    """Every node reachable after consuming all of ``events``."""

    def close(nodes: Set[_Node]) -> Set[_Node]:
        seen = set(nodes)
        stack = list(nodes)
        while stack:
            state, valuation, marks, marked_last = stack.pop()
            for tr in T.outgoing(state):
                if tr.is_epsilon:
                    node = (tr.target, valuation, marks, marked_last)
                    if node not in seen:
                        seen.add(node)
                        stack.append(node)
        return seen

    current = close({(T.start, Valuation.empty(T.registers), frozenset(), False)})
    for event in events:
        step: Set[_Node] = set()
        for state, valuation, marks, _ in current:
            for tr in T.outgoing(state):
                if tr.is_epsilon or not tr.guard.evaluate(event, valuation):
                    continue
                mark = tr.output is Output.MARK
                step.add(
                    (
                        tr.target,
                        valuation.update(tr.writes, event),
                        marks | {event.index} if mark else marks,
                        mark,
                    )
                )
        current = close(step)
        if not current:
            break
    return current


def _check_scale(events: Sequence[Event], settings: Optional[EngineSettings]) -> None:
    cap = resolve(settings).oracle_cap
    if len(events) > cap:
        raise OracleScaleError(f"exhaustive matching limited to {cap} events, got {len(events)}")


def exhaustive_derivations(T: Srt, events: Sequence[Event], settings: Optional[EngineSettings] = None) -> Set[FrozenSet[int]]:
    """Marked sets of all runs over ``events`` that end in a final state, whatever their last output."""
    _check_scale(events, settings)
    return {marks for state, _, marks, _ in _explore(T, events) if state in T.finals}


def exhaustive_matches(T: Srt, events: Sequence[Event], settings: Optional[EngineSettings] = None) -> Set[FrozenSet[int]]:
    """
    Match(T, S): marked sets of accepting runs.

    The empty string is matched (with the empty set) when the start
    epsilon-reaches a final state.

    Raises:
        OutputAgnosticError: ``T`` came out of determinization or complement
        OracleScaleError: ``events`` is longer than the oracle cap
    """
    if T.output_agnostic:
        raise OutputAgnosticError("output-agnostic automata do not enumerate matches")
    _check_scale(events, settings)
    nodes = _explore(T, events)
    if not events:
        return {marks for state, _, marks, _ in nodes if state in T.finals}
    return {marks for state, _, marks, marked_last in nodes if state in T.finals and marked_last}


def accepts(T: Srt, events: Sequence[Event]) -> bool:
    """Output-agnostic acceptance: some run over ``events`` ends in a final state."""
    return any(state in T.finals for state, _, _, _ in _explore(T, events))


def count_runs(T: Srt, events: Sequence[Event]) -> int:
    """
    Number of distinct runs consuming all of ``events``, accepting or not.

    Only defined for epsilon-free automata, where runs are transition paths.
    """
    if T.has_epsilon:
        raise ConfigurationError("run counting needs an epsilon-free automaton")
    counts: Dict[Tuple[int, Valuation], int] = {(T.start, Valuation.empty(T.registers)): 1}
    for event in events:
        step: Dict[Tuple[int, Valuation], int] = {}
        for (state, valuation), n in counts.items():
            for tr in T.outgoing(state):
                if tr.guard.evaluate(event, valuation):
                    key = (tr.target, valuation.update(tr.writes, event))
                    step[key] = step.get(key, 0) + n
        counts = step
    return sum(counts.values())
