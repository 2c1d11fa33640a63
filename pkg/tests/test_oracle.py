"""Tests for the brute-force derivation relation."""

import numpy as np
import pytest

from cer_engine.condition import TRUE, Atom, HeadAttr, Literal, Not, Op, RegAttr
from cer_engine.config import EngineSettings
from cer_engine.errors import OracleScaleError, UnsupportedNegationError
from cer_engine.events import Event, Match
from cer_engine.oracle import oracle_accepts, oracle_derivations, oracle_matches, oracle_streaming_matches
from cer_engine.sremo import (
    AnyStrategy,
    Concat,
    Empty,
    Epsilon,
    Negation,
    NextStrategy,
    Output,
    Star,
    Terminal,
    Windowed,
    sequence,
    skip_all,
    terminal,
)
from tests.generators import random_events, random_terminal

IS_BUY = Atom(HeadAttr("type"), Op.EQ, Literal("B"))
IS_SELL = Atom(HeadAttr("type"), Op.EQ, Literal("S"))


def _events(types):
    return [Event.of(i, type=t) for i, t in enumerate(types, 1)]


def test_buy_sell_matches_on_the_example_stream(buy_sell, trades):
    """Matches detected at each position of the buy/sell stream."""
    expected = {
        1: set(),
        2: set(),
        3: set(),
        4: {Match(4, (1, 4)), Match(4, (2, 4))},
        5: {Match(5, (1, 5)), Match(5, (2, 5))},
        6: set(),
    }
    for k, matches in expected.items():
        assert oracle_streaming_matches(buy_sell, trades, k) == matches, k


def test_window_drops_long_matches(buy_sell, trades):
    windowed = Windowed(buy_sell, 4)
    assert oracle_streaming_matches(windowed, trades, 4) == {Match(4, (1, 4)), Match(4, (2, 4))}
    assert oracle_streaming_matches(windowed, trades, 5) == {Match(5, (2, 5))}
    assert oracle_streaming_matches(windowed, trades, 5, max_length=4) == {Match(5, (2, 5))}


def test_matches_need_the_last_event_marked():
    e = Concat(terminal(IS_BUY, mark=True), terminal(TRUE))
    events = _events("BS")
    assert oracle_derivations(e, events) == {frozenset({1})}
    assert oracle_matches(e, events) == set()
    assert oracle_accepts(e, events) is True


def test_empty_string():
    assert oracle_matches(Epsilon(), []) == {frozenset()}
    assert oracle_matches(skip_all(), []) == {frozenset()}
    assert oracle_matches(terminal(TRUE, mark=True), []) == set()
    assert oracle_matches(Empty(), _events("B")) == set()


def test_registers_flow_through_concatenation():
    e = sequence(
        terminal(IS_BUY, mark=True, store="r1"),
        skip_all(),
        terminal(Atom(HeadAttr("id"), Op.EQ, RegAttr("r1", "id")), mark=True),
    )
    events = [Event.of(1, type="B", id=1), Event.of(2, type="B", id=2), Event.of(3, type="S", id=1)]
    assert oracle_matches(e, events) == {frozenset({1, 3})}
    assert oracle_matches(e, events[1:]) == set()


def test_star_unions_iterations():
    e = Star(terminal(IS_BUY, mark=True))
    assert oracle_matches(e, _events("BBB")) == {frozenset({1, 2, 3})}
    assert oracle_matches(e, _events("BSB")) == set()


def test_negation_under_a_window():
    """!e holds on a span unless the span fits the window and e derives it."""
    e = sequence(terminal(IS_BUY, mark=True), Negation(terminal(IS_SELL)), terminal(IS_BUY, mark=True))
    windowed = Windowed(e, 3)
    assert oracle_matches(windowed, _events("BBB")) == {frozenset({1, 3})}
    assert oracle_matches(windowed, _events("BSB")) == set()
    assert oracle_matches(windowed, _events("BB")) == {frozenset({1, 2})}

    with pytest.raises(UnsupportedNegationError):
        oracle_matches(e, _events("BB"))


def test_negation_depends_on_the_window():
    """A span longer than the window always satisfies the negation."""
    e = Concat(Negation(sequence(terminal(IS_SELL), terminal(IS_SELL))), terminal(TRUE, mark=True))
    assert oracle_derivations(Windowed(e, 1), _events("SSB")) == {frozenset({3})}
    assert oracle_derivations(Windowed(e, 2), _events("SSB")) == set()
    assert oracle_derivations(Windowed(e, 2), _events("SBB")) == {frozenset({3})}


def test_scale_cap():
    with pytest.raises(OracleScaleError):
        oracle_matches(skip_all(), _events("B" * 5), EngineSettings(oracle_cap=4))


def test_strategies_equal_their_hand_expansions():
    """any() and next() derive exactly what the written-out sequences derive."""
    rng = np.random.default_rng(17)
    skip = Star(Terminal(TRUE, Output.SKIP, None))
    for case in range(100):
        t1, t2, t3 = (random_terminal(rng, registers=False) for _ in range(3))
        events = random_events(rng)

        expanded = Concat(Concat(Concat(Concat(t1, skip), t2), skip), t3)
        assert oracle_matches(AnyStrategy((t1, t2, t3)), events) == oracle_matches(expanded, events), case

        expanded = Concat(Concat(t1, Star(Terminal(Not(t2.condition), Output.SKIP, None))), t2)
        assert oracle_matches(NextStrategy((t1, t2)), events) == oracle_matches(expanded, events), case


def test_next_with_a_complex_part_needs_a_window():
    e = NextStrategy((terminal(IS_BUY, mark=True), sequence(terminal(IS_SELL), terminal(IS_SELL, mark=True))))
    with pytest.raises(UnsupportedNegationError):
        oracle_matches(e, _events("BSS"))
    assert oracle_matches(Windowed(e, 3), _events("BSS")) == {frozenset({1, 3})}
