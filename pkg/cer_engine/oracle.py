"""
Brute-force semantics of expressions.

Evaluates the derivation relation directly: for an expression, a string
and a starting valuation, enumerate every (marked index set, final
valuation) pair by trying all splits of the string.  Memoized on
(sub-expression, span, valuation fingerprint); intended for short strings
only and used as the reference the compiler and engine are tested against.
"""

import logging
from typing import Dict, FrozenSet, Optional, Sequence, Set, Tuple

from cer_engine.config import EngineSettings, resolve
from cer_engine.errors import ConfigurationError, OracleScaleError, UnsupportedNegationError
from cer_engine.events import Event, Match, RegisterSet, Valuation
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
)

logger = logging.getLogger(__name__)

Derivation = Tuple[FrozenSet[int], Valuation]

_NO_MARKS: FrozenSet[int] = frozenset()


def _span(marks: FrozenSet[int]) -> int:
    return max(marks) - min(marks) + 1 if marks else 0


class _Oracle:
    def __init__(self, events: Sequence[Event]):
        self.events = list(events)
        self.memo: Dict[Tuple[int, int, int, Tuple[int, ...], Optional[int]], FrozenSet[Derivation]] = {}
        # desugared strategy nodes, kept alive so their ids stay valid
        self.lowered: Dict[int, Sremo] = {}

    def derive(self, e: Sremo, i: int, j: int, v: Valuation, window: Optional[int]) -> FrozenSet[Derivation]:
        key = (id(e), i, j, v.fingerprint, window)
        cached = self.memo.get(key)
        if cached is None:
            cached = frozenset(self._derive(e, i, j, v, window))
            self.memo[key] = cached
        return cached

    def _derive(self, e: Sremo, i: int, j: int, v: Valuation, window: Optional[int]) -> Set[Derivation]:
        if isinstance(e, Empty):
            return set()
        if isinstance(e, Epsilon):
            return {(_NO_MARKS, v)} if i == j else set()
        if isinstance(e, Terminal):
            if j != i + 1:
                return set()
            event = self.events[i]
            if not e.condition.evaluate(event, v):
                return set()
            marks = frozenset((event.index,)) if e.output is Output.MARK else _NO_MARKS
            after = v.update((e.store,), event) if e.store is not None else v
            return {(marks, after)}
        if isinstance(e, Concat):
            out = set()
            for m in range(i, j + 1):
                for marks1, v1 in self.derive(e.left, i, m, v, window):
                    for marks2, v2 in self.derive(e.right, m, j, v1, window):
                        out.add((marks1 | marks2, v2))
            return out
        if isinstance(e, Disjunction):
            return set(self.derive(e.left, i, j, v, window)) | set(self.derive(e.right, i, j, v, window))
        if isinstance(e, Star):
            if i == j:
                return {(_NO_MARKS, v)}
            out = set()
            # an empty first iteration adds nothing new, so it is skipped
            for m in range(i + 1, j + 1):
                for marks1, v1 in self.derive(e.inner, i, m, v, window):
                    for marks2, v2 in self.derive(e, m, j, v1, window):
                        out.add((marks1 | marks2, v2))
            return out
        if isinstance(e, Windowed):
            if window is not None:
                raise ConfigurationError("nested windows are not supported")
            return {d for d in self.derive(e.inner, i, j, v, e.window) if _span(d[0]) <= e.window}
        if isinstance(e, Negation):
            if window is None:
                raise UnsupportedNegationError("negation outside a windowed pattern")
            if j - i <= window and self.derive(e.inner, i, j, v, window):
                return set()
            return {(_NO_MARKS, v)}
        if isinstance(e, (AnyStrategy, NextStrategy)):
            lowered = self.lowered.get(id(e))
            if lowered is None:
                lowered = desugar(e, windowed=window is not None)
                self.lowered[id(e)] = lowered
            return set(self.derive(lowered, i, j, v, window))
        raise ConfigurationError(f"unknown expression node {type(e).__name__}")


def _check_scale(events: Sequence[Event], settings: EngineSettings) -> None:
    if len(events) > settings.oracle_cap:
        raise OracleScaleError(f"oracle limited to {settings.oracle_cap} events, got {len(events)}")


def oracle_derivations(
    e: Sremo,
    events: Sequence[Event],
    registers: Optional[RegisterSet] = None,
    settings: Optional[EngineSettings] = None,
) -> Set[FrozenSet[int]]:
    """
    Every M with (e, S, M, ♯) ⊢ v' for some v', unfiltered.

    Raises:
        OracleScaleError: If the string is longer than the oracle cap
    """
    settings = resolve(settings)
    _check_scale(events, settings)
    registers = registers or RegisterSet.of(registers_of(e))
    oracle = _Oracle(events)
    return {marks for marks, _ in oracle.derive(e, 0, len(events), Valuation.empty(registers), None)}


def oracle_matches(
    e: Sremo,
    events: Sequence[Event],
    settings: Optional[EngineSettings] = None,
) -> Set[FrozenSet[int]]:
    """
    Match(e, S): derivations whose last event is marked.

    The empty string contributes its (empty) match; any other string needs
    its final event in M, the same condition an accepting run has to meet
    (its last transition outputs •).
    """
    derivations = oracle_derivations(e, events, settings=settings)
    if not events:
        return derivations
    last = events[-1].index
    return {marks for marks in derivations if last in marks}


def oracle_accepts(e: Sremo, events: Sequence[Event], settings: Optional[EngineSettings] = None) -> bool:
    """Output-agnostic acceptance: some derivation exists."""
    return bool(oracle_derivations(e, events, settings=settings))


def oracle_streaming_matches(
    e: Sremo,
    events: Sequence[Event],
    k: int,
    settings: Optional[EngineSettings] = None,
    max_length: Optional[int] = None,
) -> Set[Match]:
    """
    Matches detected at position k: the union over every suffix S_{m..k}.

    ``events`` is the stream prefix; indices are the events' own (absolute)
    positions, so no shifting is needed.  ``max_length`` restricts the
    suffixes examined, which is exact for windowed patterns whose first
    terminal always marks.
    """
    prefix = [ev for ev in events if ev.index <= k]
    found: Set[Match] = set()
    first = 0 if max_length is None else max(0, len(prefix) - max_length)
    for m in range(first, len(prefix)):
        for marks in oracle_matches(e, prefix[m:], settings):
            if marks:
                found.add(Match.of(k, marks))
    return found
