"""
Expression AST for symbolic regular expressions with memory and output.

Nodes are immutable and compare structurally.  Selection strategies are
kept as nodes after parsing and lowered by ``desugar`` into plain
concatenation/star/negation before compilation or brute-force evaluation.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

from cer_engine.condition import TRUE, Condition, negate
from cer_engine.errors import ConfigurationError, UnsupportedNegationError


class Output(str, Enum):
    MARK = "mark"
    SKIP = "skip"

    @property
    def symbol(self) -> str:
        return "•" if self is Output.MARK else "⊗"


class Sremo:
    """Base class of expression nodes."""

    def children(self) -> Tuple["Sremo", ...]:
        return ()

    def walk(self) -> Iterator["Sremo"]:
        yield self
        for child in self.children():
            yield from child.walk()

    def __str__(self) -> str:
        return unparse(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{unparse(self)}>"


@dataclass(frozen=True, repr=False)
class Empty(Sremo):
    pass


@dataclass(frozen=True, repr=False)
class Epsilon(Sremo):
    pass


@dataclass(frozen=True, repr=False)
class Terminal(Sremo):
    condition: Condition = TRUE
    output: Output = Output.SKIP
    store: Optional[str] = None


@dataclass(frozen=True, repr=False)
class Concat(Sremo):
    left: Sremo
    right: Sremo

    def children(self) -> Tuple[Sremo, ...]:
        return (self.left, self.right)


@dataclass(frozen=True, repr=False)
class Disjunction(Sremo):
    left: Sremo
    right: Sremo

    def children(self) -> Tuple[Sremo, ...]:
        return (self.left, self.right)


@dataclass(frozen=True, repr=False)
class Star(Sremo):
    inner: Sremo

    def children(self) -> Tuple[Sremo, ...]:
        return (self.inner,)


@dataclass(frozen=True, repr=False)
class Windowed(Sremo):
    inner: Sremo
    window: int

    def __post_init__(self):
        if not isinstance(self.window, int) or self.window < 1:
            raise ConfigurationError(f"window must be a positive integer, got {self.window!r}")

    def children(self) -> Tuple[Sremo, ...]:
        return (self.inner,)


@dataclass(frozen=True, repr=False)
class AnyStrategy(Sremo):
    parts: Tuple[Sremo, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigurationError("any() needs at least one part")

    def children(self) -> Tuple[Sremo, ...]:
        return self.parts


@dataclass(frozen=True, repr=False)
class NextStrategy(Sremo):
    parts: Tuple[Sremo, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigurationError("next() needs at least one part")

    def children(self) -> Tuple[Sremo, ...]:
        return self.parts


@dataclass(frozen=True, repr=False)
class Negation(Sremo):
    inner: Sremo

    def children(self) -> Tuple[Sremo, ...]:
        return (self.inner,)


# --- constructors -----------------------------------------------------------

def terminal(condition: Condition = TRUE, mark: bool = False, store: Optional[str] = None) -> Terminal:
    return Terminal(condition, Output.MARK if mark else Output.SKIP, store)


def sequence(*parts: Sremo) -> Sremo:
    """Left-nested concatenation; a single part is returned as is."""
    if not parts:
        return Epsilon()
    result = parts[0]
    for part in parts[1:]:
        result = Concat(result, part)
    return result


def choice(*parts: Sremo) -> Sremo:
    if not parts:
        return Empty()
    result = parts[0]
    for part in parts[1:]:
        result = Disjunction(result, part)
    return result


def plus(e: Sremo) -> Sremo:
    return Concat(e, Star(e))


def skip_all() -> Sremo:
    """(⊤ ↑ ⊗)*"""
    return Star(Terminal(TRUE, Output.SKIP, None))


# --- queries ----------------------------------------------------------------

def registers_of(e: Sremo) -> Tuple[str, ...]:
    """Registers read or written anywhere in ``e``, in order of first appearance."""
    names: List[str] = []
    for node in e.walk():
        if isinstance(node, Terminal):
            names.extend(node.condition.registers())
            if node.store is not None:
                names.append(node.store)
    return tuple(dict.fromkeys(names))


def stored_registers(e: Sremo) -> Tuple[str, ...]:
    return tuple(dict.fromkeys(n.store for n in e.walk() if isinstance(n, Terminal) and n.store is not None))


def contains(e: Sremo, kind: type) -> bool:
    return any(isinstance(node, kind) for node in e.walk())


def flatten_concat(e: Sremo) -> List[Sremo]:
    if isinstance(e, Concat):
        return flatten_concat(e.left) + flatten_concat(e.right)
    return [e]


# --- strategy rewrites ------------------------------------------------------

def rewrite_any(parts: Sequence[Sremo]) -> Sremo:
    """Skip-till-any-match: put (⊤↑⊗)* between consecutive parts."""
    if not parts:
        raise ConfigurationError("any() needs at least one part")
    result = parts[0]
    for part in parts[1:]:
        result = Concat(Concat(result, skip_all()), part)
    return result


def rewrite_next(parts: Sequence[Sremo], windowed: bool = False) -> Sremo:
    """
    Skip-till-next-match: put (!e_{i+1})* before every e_{i+1}.

    A terminal negand is negated logically (its condition, unmarked, no
    store).  Any other negand becomes a Negation node, which can only be
    compiled inside a window.

    Raises:
        UnsupportedNegationError: Non-terminal negand and no window
    """
    if not parts:
        raise ConfigurationError("next() needs at least one part")
    result = parts[0]
    for part in parts[1:]:
        if isinstance(part, Terminal):
            negand: Sremo = Terminal(negate(part.condition), Output.SKIP, None)
        elif windowed:
            negand = Negation(part)
        else:
            raise UnsupportedNegationError(f"next(): cannot negate non-terminal {unparse(part)} without a window")
        result = Concat(Concat(result, Star(negand)), part)
    return result


def desugar(e: Sremo, windowed: bool = False) -> Sremo:
    """Lower strategy nodes everywhere below ``e``."""
    if isinstance(e, Windowed):
        return Windowed(desugar(e.inner, True), e.window)
    if isinstance(e, AnyStrategy):
        return rewrite_any([desugar(p, windowed) for p in e.parts])
    if isinstance(e, NextStrategy):
        return rewrite_next([desugar(p, windowed) for p in e.parts], windowed)
    if isinstance(e, Concat):
        return Concat(desugar(e.left, windowed), desugar(e.right, windowed))
    if isinstance(e, Disjunction):
        return Disjunction(desugar(e.left, windowed), desugar(e.right, windowed))
    if isinstance(e, Star):
        return Star(desugar(e.inner, windowed))
    if isinstance(e, Negation):
        if not windowed:
            raise UnsupportedNegationError(f"negation {unparse(e)} outside a windowed pattern")
        return Negation(desugar(e.inner, windowed))
    return e


def apply_strategy(e: Sremo, strategy: str) -> Sremo:
    """
    Apply a selection strategy to the top-level sequence of ``e``.

    Patterns that already name a strategy, or whose top level is not a
    sequence, are returned unchanged.
    """
    if strategy == "strict":
        return e
    if strategy not in ("any", "next"):
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    if contains(e, AnyStrategy) or contains(e, NextStrategy):
        return e
    window = None
    body = e
    if isinstance(e, Windowed):
        body, window = e.inner, e.window
    parts = flatten_concat(body)
    if len(parts) < 2:
        return e
    node: Sremo = AnyStrategy(tuple(parts)) if strategy == "any" else NextStrategy(tuple(parts))
    return Windowed(node, window) if window is not None else node


# --- printing ---------------------------------------------------------------

_PREC_OR, _PREC_SEQ, _PREC_UNARY = 1, 2, 3


def _precedence(e: Sremo) -> int:
    if isinstance(e, Disjunction):
        return _PREC_OR
    if isinstance(e, Concat):
        return _PREC_SEQ
    return _PREC_UNARY


def _wrap(e: Sremo, minimum: int) -> str:
    text = _unparse(e)
    return f"({text})" if _precedence(e) < minimum else text


def _unparse(e: Sremo) -> str:
    if isinstance(e, Empty):
        return "empty"
    if isinstance(e, Epsilon):
        return "eps"
    if isinstance(e, Terminal):
        text = f"{{{e.condition}}}"
        if e.output is Output.MARK:
            text += ":mark"
        if e.store is not None:
            text += f"->{e.store}"
        return text
    if isinstance(e, Concat):
        # the parser folds to the left, so only the right operand needs parentheses
        return f"{_wrap(e.left, _PREC_SEQ)} ; {_wrap(e.right, _PREC_UNARY)}"
    if isinstance(e, Disjunction):
        return f"{_wrap(e.left, _PREC_OR)} | {_wrap(e.right, _PREC_SEQ)}"
    if isinstance(e, Star):
        inner = e.inner
        text = _unparse(inner)
        if isinstance(inner, (Concat, Disjunction, Negation)):
            text = f"({text})"
        return text + "*"
    if isinstance(e, Negation):
        inner = e.inner
        text = _unparse(inner)
        if isinstance(inner, (Concat, Disjunction, Star)):
            text = f"({text})"
        return "!" + text
    if isinstance(e, AnyStrategy):
        return "any(" + ", ".join(_unparse(p) for p in e.parts) + ")"
    if isinstance(e, NextStrategy):
        return "next(" + ", ".join(_unparse(p) for p in e.parts) + ")"
    if isinstance(e, Windowed):
        return f"{_unparse(e.inner)} within {e.window}"
    raise ConfigurationError(f"cannot print node {type(e).__name__}")


def unparse(e: Sremo) -> str:
    """Render ``e`` in the pattern DSL; the parser reads it back to an equal AST."""
    return _unparse(e)
