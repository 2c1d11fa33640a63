"""
Expression to automaton compilation and closure combinators.

``compile_sremo`` follows the classic fragment construction: every
sub-expression becomes a (start, final) fragment glued with epsilon
links, and the result is epsilon-eliminated.  Registers are collected
from the whole expression up front, so a register shared by two
sub-expressions is a single register of the automaton.  The closure
combinators work on already built automata and rename registers apart
instead.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from cer_engine.condition import EPSILON, Guard, conjoin
from cer_engine.config import EngineSettings, resolve
from cer_engine.errors import ConfigurationError, ExplosionError, UnsupportedNegationError
from cer_engine.events import RegisterSet
from cer_engine.sremo import (
    AnyStrategy,
    Concat,
    Disjunction,
    Empty,
    Epsilon,
    Negation,
    NextStrategy,
    Output,
    Sremo,
    Star,
    Terminal,
    Windowed,
    desugar,
    registers_of,
    skip_all,
)
from cer_engine.srt import Srt, Transition, eliminate_epsilon, prune_dead, rename_registers

logger = logging.getLogger(__name__)

Fragment = Tuple[int, int]


class _Builder:
    """Accumulates states and transitions while fragments are glued together."""

    def __init__(self, registers: RegisterSet, window: Optional[int], settings: EngineSettings):
        self.registers = registers
        self.window = window
        self.settings = settings
        self.transitions: List[Transition] = []
        self.extra_registers: List[str] = []
        self.count = 0
        self.negations = 0

    def state(self) -> int:
        self.count += 1
        if self.count > self.settings.state_cap:
            raise ExplosionError("compilation exceeded the state cap", states=self.count)
        return self.count - 1

    def link(self, source: int, target: int, guard: Guard = EPSILON, output: Output = Output.SKIP, writes=()):
        self.transitions.append(Transition(source, target, guard, output, frozenset(writes)))

    def embed(self, T: Srt) -> Tuple[int, Set[int]]:
        """Copy ``T`` in with fresh state ids; returns its start and finals."""
        ids = {q: self.state() for q in sorted(T.states)}
        for t in T.transitions:
            self.link(ids[t.source], ids[t.target], t.guard, t.output, t.writes)
        return ids[T.start], {ids[q] for q in T.finals}

    def build(self, e: Sremo) -> Fragment:
        if isinstance(e, Empty):
            return self.state(), self.state()
        if isinstance(e, Epsilon):
            s, f = self.state(), self.state()
            self.link(s, f)
            return s, f
        if isinstance(e, Terminal):
            s, f = self.state(), self.state()
            self.link(s, f, e.condition, e.output, () if e.store is None else (e.store,))
            return s, f
        if isinstance(e, Concat):
            s1, f1 = self.build(e.left)
            s2, f2 = self.build(e.right)
            self.link(f1, s2)
            return s1, f2
        if isinstance(e, Disjunction):
            s, f = self.state(), self.state()
            for part in (e.left, e.right):
                ps, pf = self.build(part)
                self.link(s, ps)
                self.link(pf, f)
            return s, f
        if isinstance(e, Star):
            s, f = self.state(), self.state()
            ps, pf = self.build(e.inner)
            self.link(s, ps)
            self.link(s, f)
            self.link(pf, f)
            self.link(pf, ps)
            return s, f
        if isinstance(e, Negation):
            return self.negation(e)
        if isinstance(e, (AnyStrategy, NextStrategy)):
            return self.build(desugar(e, windowed=self.window is not None))
        if isinstance(e, Windowed):
            raise ConfigurationError("nested windows are not supported")
        raise ConfigurationError(f"unknown expression node {type(e).__name__}")

    def negation(self, e: Negation) -> Fragment:
        if self.window is None:
            raise UnsupportedNegationError(f"negation {e} outside a windowed pattern")
        # windowing builds on this module
        from cer_engine.windowing import complement, determinize

        D = complement(determinize(Windowed(e.inner, self.window), self.settings), self.settings)
        prefix = f"neg{self.negations}:"
        self.negations += 1
        # copies made by unrolling carry '@'; the rest are registers of the enclosing pattern
        mapping = {r: prefix + r for r in D.registers if "@" in r}
        D = rename_registers(D, mapping)
        self.extra_registers.extend(mapping.values())
        s, f = self.state(), self.state()
        start, finals = self.embed(D)
        self.link(s, start)
        for q in sorted(finals):
            self.link(q, f)
        return s, f


def build_epsilon_srt(
    e: Sremo,
    registers: Iterable[str] = (),
    window: Optional[int] = None,
    settings: Optional[EngineSettings] = None,
) -> Srt:
    """
    The automaton with epsilon links, before elimination.

    Args:
        e: Expression without a top-level window
        registers: Extra registers to declare besides those of ``e``
        window: Window of the enclosing pattern, needed to compile negation
    """
    settings = resolve(settings)
    if isinstance(e, Windowed):
        raise ConfigurationError("windowed expressions are compiled with compile_pattern")
    e = desugar(e, windowed=window is not None)
    builder = _Builder(RegisterSet.of(list(registers_of(e)) + list(registers)), window, settings)
    start, final = builder.build(e)
    return Srt(
        frozenset(range(builder.count)),
        start,
        frozenset((final,)),
        builder.registers.union(builder.extra_registers),
        tuple(builder.transitions),
    )


def compile_sremo(
    e: Sremo,
    registers: Iterable[str] = (),
    window: Optional[int] = None,
    settings: Optional[EngineSettings] = None,
) -> Srt:
    """
    Compile an expression into an epsilon-free automaton.

    Returns:
        Srt: Automaton whose match sets equal the expression's on every string

    Raises:
        ConfigurationError: ``e`` is windowed (use compile_pattern)
        UnsupportedNegationError: Negation without an enclosing window
        ExplosionError: A configured cap was exceeded
    """
    result = eliminate_epsilon(build_epsilon_srt(e, registers, window, settings), settings)
    logger.debug("compiled %s: %d states, %d transitions", e, len(result.states), len(result.transitions))
    return result


# --- closure combinators ----------------------------------------------------

def rename_apart(T: Srt, taken: Iterable[str], suffix: str = "'") -> Srt:
    """Rename the registers of ``T`` that clash with ``taken``."""
    used = set(taken)
    mapping: Dict[str, str] = {}
    for r in T.registers:
        if r in used:
            fresh = r + suffix
            while fresh in used or fresh in T.registers:
                fresh += suffix
            mapping[r] = fresh
            used.add(fresh)
    return rename_registers(T, mapping) if mapping else T


def _join(parts: Sequence[Srt]) -> Tuple[_Builder, List[Tuple[int, Set[int]]], RegisterSet]:
    builder = _Builder(RegisterSet(()), None, resolve(None))
    names: List[str] = []
    renamed = []
    for T in parts:
        T = rename_apart(T, names)
        names.extend(T.registers)
        renamed.append(T)
    embedded = [builder.embed(T) for T in renamed]
    return builder, embedded, RegisterSet.of(names)


def _finish(builder: _Builder, start: int, finals: Iterable[int], registers: RegisterSet, agnostic: bool) -> Srt:
    T = Srt(frozenset(range(builder.count)), start, frozenset(finals), registers, tuple(builder.transitions), agnostic)
    return eliminate_epsilon(T)


def union(T1: Srt, T2: Srt) -> Srt:
    """Matches of either automaton; registers of ``T2`` are renamed apart."""
    builder, [(s1, f1), (s2, f2)], registers = _join((T1, T2))
    s, f = builder.state(), builder.state()
    builder.link(s, s1)
    builder.link(s, s2)
    for q in sorted(f1 | f2):
        builder.link(q, f)
    return _finish(builder, s, (f,), registers, T1.output_agnostic or T2.output_agnostic)


def concat(T1: Srt, T2: Srt) -> Srt:
    """A string split in two, the first part run by ``T1`` and the rest by ``T2``."""
    builder, [(s1, f1), (s2, f2)], registers = _join((T1, T2))
    for q in sorted(f1):
        builder.link(q, s2)
    return _finish(builder, s1, f2, registers, T1.output_agnostic or T2.output_agnostic)


def star(T: Srt) -> Srt:
    """Zero or more consecutive runs of ``T``, with a new start and final state."""
    builder, [(s1, f1)], registers = _join((T,))
    s, f = builder.state(), builder.state()
    builder.link(s, s1)
    builder.link(s, f)
    for q in sorted(f1):
        builder.link(q, f)
        builder.link(q, s1)
    return _finish(builder, s, (f,), registers, T.output_agnostic)


def intersect(T1: Srt, T2: Srt, output_agnostic: bool = False, settings: Optional[EngineSettings] = None) -> Srt:
    """
    Product automaton over reachable state pairs.

    Guards are conjoined and write sets united.  By default only
    transitions with equal outputs are paired, so a match of the product
    is a match of both operands.  With ``output_agnostic`` every pair is
    kept and marks only where both operands mark; the product then
    recognizes the intersection of the languages.
    """
    settings = resolve(settings)
    T1, T2 = eliminate_epsilon(T1, settings), eliminate_epsilon(T2, settings)
    T2 = rename_apart(T2, T1.registers)
    start = (T1.start, T2.start)
    ids: Dict[Tuple[int, int], int] = {start: 0}
    stack = [start]
    transitions: List[Transition] = []
    while stack:
        pair = stack.pop()
        q1, q2 = pair
        for t1 in T1.outgoing(q1):
            for t2 in T2.outgoing(q2):
                if output_agnostic:
                    output = Output.MARK if t1.output is Output.MARK and t2.output is Output.MARK else Output.SKIP
                elif t1.output is t2.output:
                    output = t1.output
                else:
                    continue
                target = (t1.target, t2.target)
                if target not in ids:
                    if len(ids) >= settings.state_cap:
                        raise ExplosionError("product exceeded the state cap", states=len(ids))
                    ids[target] = len(ids)
                    stack.append(target)
                transitions.append(
                    Transition(ids[pair], ids[target], conjoin(t1.guard, t2.guard), output, t1.writes | t2.writes)
                )
                if len(transitions) > settings.transition_cap:
                    raise ExplosionError("product exceeded the transition cap", transitions=len(transitions))
    finals = {i for (q1, q2), i in ids.items() if q1 in T1.finals and q2 in T2.finals}
    T = Srt(
        frozenset(ids.values()),
        0,
        frozenset(finals),
        T1.registers.union(T2.registers),
        tuple(transitions),
        output_agnostic or T1.output_agnostic or T2.output_agnostic,
    )
    return prune_dead(T)


# --- patterns ---------------------------------------------------------------

@dataclass(frozen=True)
class CompiledPattern:
    """A streaming automaton plus the window the engine prunes with."""

    expression: Sremo
    automaton: Srt
    window: Optional[int] = None

    @property
    def registers(self) -> Tuple[str, ...]:
        return self.automaton.registers.names


def _split_window(e: Sremo) -> Tuple[Sremo, Optional[int]]:
    if isinstance(e, Windowed):
        return e.inner, e.window
    return e, None


def make_streaming(e: Sremo, settings: Optional[EngineSettings] = None) -> Srt:
    """Automaton of ⊤* · e, able to start a match at any stream position."""
    core, window = _split_window(e)
    return compile_sremo(Concat(skip_all(), core), window=window, settings=settings)


def compile_pattern(e: Sremo, streaming: bool = True, settings: Optional[EngineSettings] = None) -> CompiledPattern:
    """
    Compile a parsed pattern for the engine.

    A top-level window is split off: the body is compiled with the window
    in scope (negation needs it) and the engine enforces the span limit.
    """
    core, window = _split_window(e)
    if streaming:
        automaton = make_streaming(e, settings)
    else:
        automaton = compile_sremo(core, window=window, settings=settings)
    logger.info(
        "compiled pattern: %d states, %d transitions, registers %s",
        len(automaton.states),
        len(automaton.transitions),
        list(automaton.registers.names),
    )
    return CompiledPattern(e, automaton, window)
