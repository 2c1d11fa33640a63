"""
Window unrolling, output-agnostic determinization and complement.

A window bounds the length of the strings that matter, so the loops of a
compiled automaton can be unrolled into a tree of walks of length at
most w.  Every write in the tree gets a register of its own, which makes
the usual subset construction sound: all runs tracked by one subset state
share a valuation without overwriting each other.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import islice, product
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

from cer_engine.condition import (
    TRUE,
    Condition,
    HeadAttr,
    Literal,
    Minterm,
    RegAttr,
    completion_guard,
    entails,
    is_contradictory,
    minterms,
)
from cer_engine.config import EngineSettings, resolve
from cer_engine.errors import ConfigurationError, DeterminismError, ExplosionError, SchemaError, WindowRequiredError
from cer_engine.events import Event, RegisterSet, Valuation
from cer_engine.sremo import Output, Sremo, Windowed, desugar
from cer_engine.srt import Srt, Transition, live_states

logger = logging.getLogger(__name__)


@dataclass
class UnrollBookkeeping:
    """Where each state and register of an unrolled automaton comes from."""

    copy_of_state: Dict[int, int] = field(default_factory=dict)
    copy_of_register: Dict[str, str] = field(default_factory=dict)
    frontier: Set[int] = field(default_factory=set)


def _check_caps(states: int, transitions: int, settings: EngineSettings) -> None:
    if states > settings.state_cap or transitions > settings.transition_cap:
        raise ExplosionError(
            f"unrolling exceeded the caps ({settings.state_cap} states, {settings.transition_cap} transitions)",
            states=states,
            transitions=transitions,
        )


def unroll_with_bookkeeping(
    T: Srt, w: int, settings: Optional[EngineSettings] = None
) -> Tuple[Srt, UnrollBookkeeping]:
    """
    Expand ``T`` into a tree of walks of length at most ``w``.

    Each tree node copies an original state and remembers, for every
    original register, the copy last written on the path to it.  A
    transition's guard reads those copies; each register it writes gets a
    fresh copy ``r@node``.  Registers never written on the path keep their
    own name.  Nodes from which no final copy is reachable are dropped.

    Raises:
        ConfigurationError: ``T`` has epsilon transitions or ``w`` is negative
        ExplosionError: The tree outgrows the configured caps
    """
    settings = resolve(settings)
    if T.has_epsilon:
        raise ConfigurationError("unrolling needs an epsilon-free automaton")
    if w < 0:
        raise ConfigurationError(f"window must not be negative, got {w}")

    books = UnrollBookkeeping()
    books.copy_of_state[0] = T.start
    bindings: Dict[int, Dict[str, str]] = {0: {}}
    transitions: List[Transition] = []
    level = [0]
    for _ in range(w):
        next_level = []
        for node in level:
            binding = bindings[node]
            for tr in T.outgoing(books.copy_of_state[node]):
                child = len(books.copy_of_state)
                books.copy_of_state[child] = tr.target
                renamed = dict(binding)
                fresh = set()
                for r in sorted(tr.writes):
                    copy = f"{r}@{child}"
                    renamed[r] = copy
                    fresh.add(copy)
                    books.copy_of_register[copy] = r
                bindings[child] = renamed
                transitions.append(Transition(node, child, tr.guard.rename(binding), tr.output, frozenset(fresh)))
                next_level.append(child)
            _check_caps(len(books.copy_of_state), len(transitions), settings)
        level = next_level
    books.frontier = set(level)

    finals = {node for node, q in books.copy_of_state.items() if q in T.finals}
    full = Srt(
        frozenset(books.copy_of_state),
        0,
        frozenset(finals),
        RegisterSet.of(_used_registers(transitions, T.registers)),
        tuple(transitions),
        T.output_agnostic,
    )
    keep = live_states(full) | {0}
    if 0 not in live_states(full):
        logger.warning("window %d is shorter than every accepting walk; the language is empty", w)
    kept = tuple(t for t in transitions if t.source in keep and t.target in keep)
    books.copy_of_state = {q: p for q, p in books.copy_of_state.items() if q in keep}
    books.frontier &= keep
    registers = _used_registers(kept, T.registers)
    books.copy_of_register = {r: p for r, p in books.copy_of_register.items() if r in registers}
    result = Srt(frozenset(keep), 0, frozenset(finals & keep), RegisterSet.of(registers), kept, T.output_agnostic)
    logger.debug("unrolled to depth %d: %d states, %d registers", w, len(result.states), len(registers))
    return result, books


def _used_registers(transitions, original: RegisterSet) -> List[str]:
    names: List[str] = []
    for t in transitions:
        names.extend(t.guard.registers())
        names.extend(sorted(t.writes))
    used = set(names)
    # originals first so external registers keep their order
    return [r for r in original if r in used] + sorted(r for r in dict.fromkeys(names) if r not in original)


def unroll(T: Srt, w: int, settings: Optional[EngineSettings] = None) -> Srt:
    return unroll_with_bookkeeping(T, w, settings)[0]


def determinize(e: Sremo, settings: Optional[EngineSettings] = None) -> Srt:
    """
    Output-agnostic deterministic automaton of a windowed expression.

    The body is compiled, unrolled to the window and run through the
    subset construction, one transition per satisfiable minterm of a
    subset's outgoing guards.  Minterms that entail no transition are left
    out, so the result may be partial; ``complement`` completes it.

    Raises:
        WindowRequiredError: ``e`` is not windowed
        ExplosionError: Minterm, state or transition cap exceeded
    """
    if not isinstance(e, Windowed):
        raise WindowRequiredError("window required for determinization (add 'within N')")
    settings = resolve(settings)
    # windowing builds on the compiler for the body
    from cer_engine.compiler import compile_sremo

    body = desugar(e.inner, windowed=True)
    U = unroll(compile_sremo(body, window=e.window, settings=settings), e.window, settings)

    start: FrozenSet[int] = frozenset((U.start,))
    ids: Dict[FrozenSet[int], int] = {start: 0}
    queue = deque([start])
    transitions: List[Transition] = []
    while queue:
        subset = queue.popleft()
        outgoing = [t for q in sorted(subset) for t in U.outgoing(q)]
        if not outgoing:
            continue
        # ⊤ is entailed by every minterm; leaving it out of the base halves the work
        base = [t.guard for t in outgoing if t.guard != TRUE]
        for mt in minterms(base, settings.minterm_cap, state=ids[subset]):
            if settings.prune_contradictions and is_contradictory(mt):
                continue
            fired = [t for t in outgoing if t.guard == TRUE or entails(mt, t.guard)]
            if not fired:
                continue
            target = frozenset(t.target for t in fired)
            if target not in ids:
                if len(ids) >= settings.state_cap:
                    raise ExplosionError("determinization exceeded the state cap", states=len(ids))
                ids[target] = len(ids)
                queue.append(target)
            writes = frozenset().union(*(t.writes for t in fired))
            transitions.append(Transition(ids[subset], ids[target], mt, Output.SKIP, writes))
            if len(transitions) > settings.transition_cap:
                raise ExplosionError("determinization exceeded the transition cap", transitions=len(transitions))

    finals = {i for subset, i in ids.items() if subset & U.finals}
    D = Srt(frozenset(ids.values()), 0, frozenset(finals), U.registers, tuple(transitions), output_agnostic=True)
    logger.info("determinized: %d states, %d transitions", len(D.states), len(D.transitions))
    return D


def complement(D: Srt, settings: Optional[EngineSettings] = None) -> Srt:
    """
    Complete ``D`` with a dead state and flip its final states.

    Every state gets a transition to the dead state guarded by the
    negation of its outgoing guards; the dead state loops on ⊤.

    Raises:
        DeterminismError: ``D`` is not deterministic
    """
    if not is_deterministic(D, settings):
        raise DeterminismError("complement needs a deterministic automaton")
    dead = max(D.states) + 1
    transitions = list(D.transitions)
    for q in sorted(D.states):
        transitions.append(Transition(q, dead, completion_guard([t.guard for t in D.outgoing(q)])))
    transitions.append(Transition(dead, dead, TRUE))
    states = D.states | {dead}
    return Srt(states, D.start, states - D.finals, D.registers, tuple(transitions), output_agnostic=True)


# --- determinism checks -----------------------------------------------------

def _structurally_exclusive(guards: List[Condition]) -> bool:
    """Minterms over one base with distinct signs, each completion guard covering the guards before it."""
    if len(guards) <= 1:
        return True
    base = None
    signs = set()
    seen: List[Condition] = []
    completed = False
    for guard in guards:
        if seen and guard == completion_guard(seen):
            completed = True
        elif isinstance(guard, Minterm) and not completed and (not seen or base is not None):
            if base is None:
                base = guard.base
            if guard.base != base or guard.signs in signs:
                return False
            signs.add(guard.signs)
        elif seen:
            return False
        seen.append(guard)
    return True


def _literal_samples(value: Any) -> List[Any]:
    if isinstance(value, str):
        return [value, value + "_"]
    if isinstance(value, int):
        return [value - 1, value, value + 1]
    return [value - 0.5, value, value + 0.5]


def boundary_samples(T: Srt, cap: int = 4096) -> Iterator[Tuple[Event, Valuation]]:
    """
    (event, valuation) pairs probing the comparison boundaries of ``T``'s guards.

    Attributes compared with literals take values just around them;
    attributes seen only against registers take 0 and 1.  Registers are
    empty or hold one of the sample events.
    """
    values: Dict[str, List[Any]] = {}
    for t in T.transitions:
        for atom in t.guard.atoms():
            for operand, other in ((atom.lhs, atom.rhs), (atom.rhs, atom.lhs)):
                if isinstance(operand, (HeadAttr, RegAttr)):
                    bucket = values.setdefault(operand.attr, [])
                    if isinstance(other, Literal):
                        bucket.extend(_literal_samples(other.value))
    attrs = sorted(values)
    columns = [list(dict.fromkeys(values[a])) or [0, 1] for a in attrs]
    events = [Event(1, dict(zip(attrs, combo))) for combo in islice(product(*columns), cap)]
    if not events:
        events = [Event(1, {})]
    contents = [None] + events
    pairs = product(events, product(contents, repeat=len(T.registers)))
    for event, stored in islice(pairs, cap):
        yield event, Valuation(T.registers, tuple(stored))


def is_deterministic(T: Srt, settings: Optional[EngineSettings] = None) -> bool:
    """
    At most one outgoing transition of a state fires on any (event, valuation).

    Minterm-built states are checked syntactically; other states are
    checked on boundary samples.
    """
    if T.has_epsilon:
        return False
    pending = [q for q in sorted(T.states) if not _structurally_exclusive([t.guard for t in T.outgoing(q)])]
    if not pending:
        return True
    cap = resolve(settings).determinism_sample_cap
    for event, valuation in boundary_samples(T, cap):
        for q in pending:
            fired = 0
            for t in T.outgoing(q):
                try:
                    fired += bool(t.guard.evaluate(event, valuation))
                except SchemaError:
                    continue
            if fired > 1:
                return False
    return True
