"""Tests for the pattern DSL parser and its semantic checks."""

import pytest

from cer_engine.condition import TRUE, And, Atom, HeadAttr, Literal, Not, Op, Or, RegAttr
from cer_engine.errors import ConfigurationError, PatternSyntaxError, SchemaError, UnsupportedNegationError
from cer_engine.parser import parse_expression, parse_pattern, validate
from cer_engine.sremo import (
    AnyStrategy,
    Concat,
    Disjunction,
    Empty,
    Epsilon,
    Negation,
    NextStrategy,
    Output,
    Star,
    Terminal,
    Windowed,
    skip_all,
)
from cer_engine.workloads import BUY_SELL_PATTERN

IS_BUY = Atom(HeadAttr("type"), Op.EQ, Literal("B"))
IS_SELL = Atom(HeadAttr("type"), Op.EQ, Literal("S"))


def test_buy_sell_pattern(buy_sell):
    expected = Concat(
        Concat(Terminal(IS_BUY, Output.MARK, "r1"), skip_all()),
        Terminal(And(IS_SELL, Atom(HeadAttr("id"), Op.EQ, RegAttr("r1", "id"))), Output.MARK, None),
    )
    assert buy_sell == expected


def test_conditions():
    test_cases = [
        ("{true}", TRUE),
        ("{price > 15}", Atom(HeadAttr("price"), Op.GT, Literal(15))),
        ("{price <= 1.5e2}", Atom(HeadAttr("price"), Op.LE, Literal(150.0))),
        ("{price >= -3}", Atom(HeadAttr("price"), Op.GE, Literal(-3))),
        ("{10 < price}", Atom(HeadAttr("price"), Op.GT, Literal(10))),
        ('{type != "B"}', Atom(HeadAttr("type"), Op.NE, Literal("B"))),
        ('{!(type == "B")}', Not(IS_BUY)),
        ('{type == "B" || type == "S"}', Or(IS_BUY, IS_SELL)),
        ('{type == "B" || type == "S" && id == 1}', Or(IS_BUY, And(IS_SELL, Atom(HeadAttr("id"), Op.EQ, Literal(1))))),
        ('{type == "a\\"b"}', Atom(HeadAttr("type"), Op.EQ, Literal('a"b'))),
    ]
    for text, condition in test_cases:
        assert parse_expression(text) == Terminal(condition, Output.SKIP, None), text


def test_terminal_suffixes():
    assert parse_expression("{true}:mark") == Terminal(TRUE, Output.MARK, None)
    assert parse_expression("{true}:skip->r2") == Terminal(TRUE, Output.SKIP, "r2")
    assert parse_expression("{true}->r1") == Terminal(TRUE, Output.SKIP, "r1")


def test_operators_and_precedence():
    a = Terminal(IS_BUY, Output.MARK, None)
    b = Terminal(IS_SELL, Output.MARK, None)
    test_cases = [
        ('{type=="B"}:mark ; {type=="S"}:mark | {type=="B"}:mark', Disjunction(Concat(a, b), a)),
        ('{type=="B"}:mark ; ({type=="S"}:mark | {type=="B"}:mark)', Concat(a, Disjunction(b, a))),
        ('{type=="B"}:mark*', Star(a)),
        ('{type=="B"}:mark+', Concat(a, Star(a))),
        ('({type=="B"}:mark ; {type=="S"}:mark)*', Star(Concat(a, b))),
        ('any({type=="B"}:mark, {type=="S"}:mark)', AnyStrategy((a, b))),
        ('next({type=="B"}:mark, {type=="S"}:mark)', NextStrategy((a, b))),
        ("eps | empty", Disjunction(Epsilon(), Empty())),
        ('{type=="B"}:mark ; {type=="S"}:mark within 4', Windowed(Concat(a, b), 4)),
        ('{type=="B"}:mark ; !{type=="S"}:mark within 4', Windowed(Concat(a, Negation(b)), 4)),
    ]
    for text, expected in test_cases:
        assert parse_expression(text) == expected, text


def test_comments_and_whitespace():
    text = '# buys then sells\n{type=="B"}:mark->r1   # first\n ;\n\t{true}*\n'
    assert parse_expression(text) == Concat(Terminal(IS_BUY, Output.MARK, "r1"), skip_all())


def test_syntax_errors_carry_a_position():
    for text in ['{type=="B"', '{type=="B"} ;', "{type = 1}", "", '{true} within x']:
        with pytest.raises(PatternSyntaxError) as info:
            parse_expression(text)
        assert info.value.line >= 1
        assert info.value.column >= 1


def test_zero_window_is_rejected():
    with pytest.raises(PatternSyntaxError):
        parse_expression("{true}:mark within 0")


def test_schema_checks(schema):
    parse_pattern(BUY_SELL_PATTERN, schema)
    with pytest.raises(SchemaError):
        parse_pattern("{colour == 1}", schema)
    with pytest.raises(SchemaError):
        parse_pattern('{price == "high"}', schema)
    with pytest.raises(SchemaError):
        parse_pattern("{true}->r1 ; {id == r1.colour}", schema)


def test_registers_must_be_stored():
    with pytest.raises(ConfigurationError):
        parse_pattern("{id == r1.id}:mark")
    parse_pattern("{id == r1.id}:mark", external=["r1"])


def test_negation_needs_a_window():
    with pytest.raises(UnsupportedNegationError):
        parse_pattern('{true} ; !{type=="B"}')
    with pytest.raises(UnsupportedNegationError):
        parse_pattern('next({type=="B"}:mark, ({type=="S"} ; {type=="S"}:mark))')
    parse_pattern('next({type=="B"}:mark, ({type=="S"} ; {type=="S"}:mark)) within 3')


def test_validate_programmatic_expressions(schema):
    e = Concat(Terminal(IS_BUY, Output.MARK, "r1"), Terminal(IS_SELL, Output.MARK))
    assert validate(e, schema) is e


def test_window_bound(schema):
    e = parse_expression('{type=="B"}:mark within 3')
    assert e == Windowed(Terminal(IS_BUY, Output.MARK, None), 3)
    assert type(e.window) is int

    windowed = parse_pattern(BUY_SELL_PATTERN + " within 4  # four events", schema)
    assert isinstance(windowed, Windowed)
    assert windowed.window == 4
    assert windowed.inner == parse_pattern(BUY_SELL_PATTERN, schema)
