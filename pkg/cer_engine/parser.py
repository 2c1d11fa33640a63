"""
Pattern DSL parser.

Grammar (whitespace and ``#`` comments ignored)::

    pattern  := expr ["within" INT]
    expr     := seq {"|" seq}
    seq      := unary {";" unary}
    unary    := atom {"*" | "+"}
    atom     := "(" expr ")" | "any(" expr {"," expr} ")" | "next(" expr {"," expr} ")"
              | "!" atom | "eps" | "empty" | terminal
    terminal := "{" cond "}" [":mark" | ":skip"] ["->" REG]
    cond     := "true" | operand OP operand | "!" cond | cond "&&" cond | cond "||" cond | "(" cond ")"

Postfix ``+`` lowers to ``e ; e*``.
"""

import logging
from functools import lru_cache
from typing import Iterable, Optional

import pyparsing as pp

from cer_engine.condition import TRUE, And, Atom, Condition, HeadAttr, Literal, Not, Op, Or, RegAttr, check_types
from cer_engine.errors import ConfigurationError, PatternSyntaxError, UnsupportedNegationError
from cer_engine.events import Schema
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
    contains,
    desugar,
    plus,
    registers_of,
    stored_registers,
)

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()


def _fold_left(build):
    def action(tokens):
        items = tokens[0]
        result = items[0]
        for i in range(1, len(items), 2):
            result = build(result, items[i + 1])
        return result

    return action


def _postfix(tokens):
    items = tokens[0]
    result = items[0]
    for op in items[1:]:
        result = Star(result) if op == "*" else plus(result)
    return result


def _terminal(tokens) -> Terminal:
    output = Output.MARK if tokens.get("output") == ":mark" else Output.SKIP
    store = tokens.get("store")
    return Terminal(tokens["cond"], output, store if store else None)


def _atom(tokens) -> Atom:
    return Atom(tokens[0], Op(tokens[1]), tokens[2])


@lru_cache(maxsize=1)
def _grammar() -> pp.ParserElement:
    ident = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")

    real = pp.Regex(r"[+-]?(\d+\.\d*([eE][+-]?\d+)?|\d+[eE][+-]?\d+)").set_parse_action(lambda t: Literal(float(t[0])))
    integer = pp.Regex(r"[+-]?\d+").set_parse_action(lambda t: Literal(int(t[0])))
    string = pp.QuotedString('"', esc_char="\\", convert_whitespace_escapes=False).set_parse_action(
        lambda t: Literal(t[0])
    )
    reg_attr = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*\.[A-Za-z_][A-Za-z0-9_]*").set_parse_action(
        lambda t: RegAttr(*t[0].split("."))
    )
    head_attr = (~pp.Keyword("true") + ident).set_parse_action(lambda t: HeadAttr(t[0]))
    operand = real | integer | string | reg_attr | head_attr
    comparison = (operand + pp.one_of("== != <= >= < >") + operand).set_parse_action(_atom)
    true = pp.Keyword("true").set_parse_action(lambda: TRUE)

    cond = pp.infix_notation(
        true | comparison,
        [
            (pp.Literal("!"), 1, pp.OpAssoc.RIGHT, lambda t: Not(t[0][1])),
            (pp.Literal("&&"), 2, pp.OpAssoc.LEFT, _fold_left(And)),
            (pp.Literal("||"), 2, pp.OpAssoc.LEFT, _fold_left(Or)),
        ],
    )

    terminal = (
        pp.Suppress("{")
        + cond("cond")
        + pp.Suppress("}")
        + pp.Optional(pp.Literal(":mark") | pp.Literal(":skip"))("output")
        + pp.Optional(pp.Suppress("->") + ident("store"))
    ).set_parse_action(_terminal)

    expr = pp.Forward()
    part_list = pp.Suppress("(") + pp.DelimitedList(expr, ",") + pp.Suppress(")")
    any_call = (pp.Suppress(pp.Keyword("any")) + part_list).set_parse_action(lambda t: AnyStrategy(tuple(t)))
    next_call = (pp.Suppress(pp.Keyword("next")) + part_list).set_parse_action(lambda t: NextStrategy(tuple(t)))
    eps = pp.Keyword("eps").set_parse_action(lambda: Epsilon())
    empty = pp.Keyword("empty").set_parse_action(lambda: Empty())

    expr <<= pp.infix_notation(
        terminal | any_call | next_call | eps | empty,
        [
            (pp.Literal("!"), 1, pp.OpAssoc.RIGHT, lambda t: Negation(t[0][1])),
            (pp.one_of("* +"), 1, pp.OpAssoc.LEFT, _postfix),
            (pp.Literal(";"), 2, pp.OpAssoc.LEFT, _fold_left(Concat)),
            (pp.Literal("|"), 2, pp.OpAssoc.LEFT, _fold_left(Disjunction)),
        ],
    )

    window = pp.Suppress(pp.Keyword("within")) + pp.Regex(r"\d+").set_parse_action(lambda t: int(t[0]))
    # body, then the window bound when present
    pattern = (expr + pp.Optional(window)).set_parse_action(lambda t: Windowed(t[0], t[1]) if len(t) == 2 else t[0])
    pattern.ignore(pp.python_style_comment)
    return pattern


def parse_expression(text: str) -> Sremo:
    """Parse DSL text without schema checks."""
    try:
        result = _grammar().parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise PatternSyntaxError(exc.msg, exc.lineno, exc.col) from None
    except ConfigurationError as exc:
        # window 0 and similar value errors raised from parse actions
        raise PatternSyntaxError(str(exc), 1, 1) from None
    return result[0]


def _conditions(e: Sremo) -> Iterable[Condition]:
    return (node.condition for node in e.walk() if isinstance(node, Terminal))


def validate(e: Sremo, schema: Optional[Schema] = None, external: Iterable[str] = ()) -> Sremo:
    """
    Semantic checks shared by the parser and programmatic callers.

    Raises:
        SchemaError: Unknown attribute or incomparable types
        ConfigurationError: A register is read but never stored nor declared external
        UnsupportedNegationError: Negation outside a window
    """
    if schema is not None:
        for condition in _conditions(e):
            for atom in condition.atoms():
                for operand in (atom.lhs, atom.rhs):
                    if isinstance(operand, (HeadAttr, RegAttr)):
                        schema.type_of(operand.attr)
            check_types(condition, schema)
    known = set(stored_registers(e)) | set(external)
    unknown = [r for r in registers_of(e) if r not in known]
    if unknown:
        raise ConfigurationError(f"registers read but never stored: {', '.join(unknown)}")
    if contains(e, Negation) and not isinstance(e, Windowed):
        raise UnsupportedNegationError("negation needs a windowed pattern (add 'within N')")
    desugar(e)
    return e


def parse_pattern(text: str, schema: Optional[Schema] = None, external: Iterable[str] = ()) -> Sremo:
    """
    Parse and validate a pattern.

    Args:
        text: Pattern in the DSL
        schema: Event schema used to resolve attribute names and types
        external: Registers that may be read without being stored

    Returns:
        Sremo: The expression, strategies kept as nodes
    """
    e = parse_expression(text)
    validate(e, schema, external)
    logger.debug("parsed pattern %s", e)
    return e
