"""Tests for window unrolling, determinization and complement."""

from itertools import product

import numpy as np
import pytest

from cer_engine.compiler import build_epsilon_srt, compile_sremo
from cer_engine.condition import TRUE, Atom, HeadAttr, Literal, Minterm, Op, RegAttr
from cer_engine.config import EngineSettings
from cer_engine.errors import ConfigurationError, DeterminismError, ExplosionError, WindowRequiredError
from cer_engine.events import Event, RegisterSet
from cer_engine.oracle import oracle_accepts
from cer_engine.parser import parse_pattern
from cer_engine.sremo import Output, Star, Windowed, choice, desugar, sequence, skip_all, terminal
from cer_engine.srt import Srt, Transition, accepts, count_runs
from cer_engine.windowing import (
    boundary_samples,
    complement,
    determinize,
    is_deterministic,
    unroll,
    unroll_with_bookkeeping,
)
from tests.generators import UNIVERSE, random_events, random_sremo

STREAMING_BUY_SELL = '{true}* ; {type=="B"}:mark->r1 ; {true}* ; {type=="S" && id==r1.id}:mark within 2'

IS_BUY = Atom(HeadAttr("type"), Op.EQ, Literal("B"))
IS_SELL = Atom(HeadAttr("type"), Op.EQ, Literal("S"))


@pytest.fixture
def streaming_buy_sell(schema):
    return parse_pattern(STREAMING_BUY_SELL, schema)


def _trade(schema, index, kind, id_):
    return schema.make_event(index, [kind, id_, 10.0, 1])


def test_unroll_streaming_buy_sell(streaming_buy_sell):
    """Only the walk buy-then-sell fits a window of two."""
    body = desugar(streaming_buy_sell.inner, windowed=True)
    T = compile_sremo(body, window=2)
    assert len(T.states) == 3

    U, books = unroll_with_bookkeeping(T, 2)
    assert len(U.states) == 3
    assert len(U.finals) == 1
    assert len(U.registers) == 1
    copy = U.registers.names[0]
    assert copy.startswith("r1@")
    assert books.copy_of_register == {copy: "r1"}
    assert set(books.copy_of_state) == set(U.states)
    assert len(books.frontier) == 1 and books.frontier <= U.states


def test_determinize_streaming_buy_sell(schema, streaming_buy_sell):
    D = determinize(streaming_buy_sell)
    assert len(D.states) == 3
    assert D.output_agnostic
    assert is_deterministic(D)
    assert all(isinstance(t.guard, Minterm) for t in D.transitions)

    assert accepts(D, [_trade(schema, 1, "B", 1), _trade(schema, 2, "S", 1)]) is True
    assert accepts(D, [_trade(schema, 1, "B", 1), _trade(schema, 2, "S", 2)]) is False
    assert accepts(D, [_trade(schema, 1, "S", 1), _trade(schema, 2, "B", 1), _trade(schema, 3, "S", 1)]) is False


def test_complement_streaming_buy_sell(schema, streaming_buy_sell):
    D = determinize(streaming_buy_sell)
    C = complement(D)
    assert len(C.states) == len(D.states) + 1
    assert C.finals == C.states - D.finals
    assert is_deterministic(C)
    assert accepts(C, []) is True
    assert accepts(C, [_trade(schema, 1, "B", 1), _trade(schema, 2, "S", 1)]) is False
    assert accepts(C, [_trade(schema, 1, "B", 1), _trade(schema, 2, "S", 2)]) is True


def test_unroll_contract():
    with pytest.raises(ConfigurationError):
        unroll(build_epsilon_srt(skip_all()), 2)
    with pytest.raises(ConfigurationError):
        unroll(compile_sremo(terminal(TRUE)), -1)


def test_unroll_to_depth_zero_keeps_the_root():
    U = unroll(compile_sremo(terminal(TRUE, mark=True)), 0)
    assert U.states == {0}
    assert U.finals == set()
    assert U.transitions == ()


def test_unroll_caps():
    with pytest.raises(ExplosionError):
        unroll(compile_sremo(skip_all()), 10, EngineSettings(state_cap=5))


def test_every_written_register_gets_a_copy():
    T = Srt({0, 1}, 0, {1}, RegisterSet(("a", "b")), (Transition(0, 1, TRUE, Output.MARK, {"a", "b"}),))
    U = unroll(T, 1)
    assert U.registers.names == ("a@1", "b@1")
    assert U.transitions[0].writes == {"a@1", "b@1"}


def test_unroll_keeps_short_strings():
    """The tree accepts exactly the strings of length at most w the automaton accepts."""
    same_id = Atom(HeadAttr("id"), Op.EQ, RegAttr("r", "id"))
    T = Srt(
        {0, 1, 2},
        0,
        {2},
        RegisterSet(("r",)),
        (
            Transition(0, 1, TRUE, writes={"r"}),
            Transition(1, 1, TRUE, writes={"r"}),
            Transition(1, 2, same_id, Output.MARK),
        ),
    )
    w = 4
    U = unroll(T, w)
    for n in range(w + 2):
        for ids in product((1, 2), repeat=n):
            events = [Event.of(i, id=x) for i, x in enumerate(ids, 1)]
            expected = accepts(T, events) and n <= w
            assert accepts(U, events) is expected, ids


def test_determinize_requires_a_window(buy_sell):
    with pytest.raises(WindowRequiredError):
        determinize(buy_sell)


def test_minterm_cap():
    e = Windowed(choice(terminal(IS_BUY), terminal(IS_SELL)), 1)
    with pytest.raises(ExplosionError):
        determinize(e, EngineSettings(minterm_cap=1))


def test_contradiction_pruning():
    e = Windowed(choice(terminal(IS_BUY), terminal(IS_SELL)), 1)
    assert len(determinize(e).states) == 4
    assert len(determinize(e, EngineSettings(prune_contradictions=True)).states) == 3


def test_determinize_agrees_with_the_oracle():
    """Random windowed expressions: same acceptance, at most one run, complement disagrees."""
    rng = np.random.default_rng(3)
    checked = 0
    for case in range(200):
        e = random_sremo(rng, depth=2)
        w = int(rng.integers(1, 4))
        try:
            D = determinize(Windowed(e, w))
        except ExplosionError:
            continue
        checked += 1
        assert is_deterministic(D), (case, str(e))
        C = complement(D)
        for _ in range(3):
            events = random_events(rng, max_length=w)
            assert accepts(D, events) == oracle_accepts(e, events), (case, str(e), events)
            assert count_runs(D, events) <= 1
            assert accepts(C, events) != accepts(D, events)
        longer = random_events(rng, length=w + 1)
        assert accepts(D, longer) is False
        assert accepts(C, longer) is True
    assert checked >= 150


def test_nondeterministic_automata():
    T = compile_sremo(sequence(skip_all(), terminal(IS_BUY)))
    assert is_deterministic(T) is False
    assert is_deterministic(build_epsilon_srt(Star(terminal(IS_BUY)))) is False
    with pytest.raises(DeterminismError):
        complement(T)


def test_sampled_determinism():
    """Guards that are not minterms are checked on boundary samples."""
    cheap = Atom(HeadAttr("price"), Op.LE, Literal(10))
    expensive = Atom(HeadAttr("price"), Op.GT, Literal(10))
    very = Atom(HeadAttr("price"), Op.GT, Literal(5))
    none = RegisterSet(())
    exclusive = Srt({0, 1}, 0, {1}, none, (Transition(0, 1, cheap), Transition(0, 1, expensive)))
    overlapping = Srt({0, 1}, 0, {1}, none, (Transition(0, 1, very), Transition(0, 1, expensive)))
    assert is_deterministic(exclusive) is True
    assert is_deterministic(overlapping) is False


def test_boundary_samples():
    T = Srt({0, 1}, 0, {1}, RegisterSet(("r",)), (Transition(0, 1, Atom(HeadAttr("price"), Op.GT, Literal(10))),))
    samples = list(boundary_samples(T, cap=5))
    assert len(samples) == 5
    prices = {event["price"] for event, _ in boundary_samples(T)}
    assert prices == {9, 10, 11}


def test_determinize_on_every_short_string():
    """Over a three-event universe, every string up to the window is checked."""
    rng = np.random.default_rng(13)
    universe = UNIVERSE[:3]
    checked = 0
    for case in range(80):
        e = random_sremo(rng, depth=2)
        w = int(rng.integers(1, 4))
        try:
            D = determinize(Windowed(e, w))
        except ExplosionError:
            continue
        checked += 1
        C = complement(D)
        for n in range(w + 1):
            for picks in product(universe, repeat=n):
                events = [Event(i, fields) for i, fields in enumerate(picks, 1)]
                assert accepts(D, events) == oracle_accepts(e, events), (case, str(e), events)
                assert count_runs(D, events) <= 1
                assert accepts(C, events) != accepts(D, events)
    assert checked >= 50
