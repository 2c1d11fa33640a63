"""
Transition guards.

A Condition is a boolean formula over the head event and register
contents.  Atoms compare two operands (head attribute, register attribute
or literal); an atom that reads an empty register is unsatisfied.  The
module also provides the minterm machinery used by determinization and
closure compilation of guards for the streaming engine.
"""

import operator
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from cer_engine.errors import ExplosionError, LogicError, SchemaError
from cer_engine.events import AttrType, Event, Schema, Valuation

GuardFn = Callable[[Event, Valuation], bool]


class Op(str, Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    @property
    def function(self) -> Callable[[Any, Any], bool]:
        return _OP_FUNCTIONS[self]

    def flipped(self) -> "Op":
        """Operator after swapping the operands."""
        return _FLIPPED.get(self, self)

    def negated(self) -> "Op":
        return _NEGATED[self]


_OP_FUNCTIONS = {
    Op.EQ: operator.eq,
    Op.NE: operator.ne,
    Op.LT: operator.lt,
    Op.LE: operator.le,
    Op.GT: operator.gt,
    Op.GE: operator.ge,
}
_FLIPPED = {Op.LT: Op.GT, Op.GT: Op.LT, Op.LE: Op.GE, Op.GE: Op.LE}
_NEGATED = {Op.EQ: Op.NE, Op.NE: Op.EQ, Op.LT: Op.GE, Op.GE: Op.LT, Op.LE: Op.GT, Op.GT: Op.LE}


# --- operands ---------------------------------------------------------------

@dataclass(frozen=True)
class HeadAttr:
    attr: str

    def __str__(self) -> str:
        return self.attr


@dataclass(frozen=True)
class RegAttr:
    register: str
    attr: str

    def __str__(self) -> str:
        return f"{self.register}.{self.attr}"


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]

    def __str__(self) -> str:
        if isinstance(self.value, str):
            escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{escaped}"'
        return repr(self.value)


Operand = Union[HeadAttr, RegAttr, Literal]


def _comparable(a: Any, b: Any) -> bool:
    return isinstance(a, str) == isinstance(b, str)


# --- conditions -------------------------------------------------------------

class Condition(ABC):
    """Base class of guard formulas. Subclasses are frozen dataclasses."""

    @abstractmethod
    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        ...

    @abstractmethod
    def registers(self) -> Tuple[str, ...]:
        """Registers read, in order of first appearance."""

    @abstractmethod
    def rename(self, mapping: Mapping[str, str]) -> "Condition":
        ...

    @abstractmethod
    def compile(self) -> GuardFn:
        """Closure equivalent to ``evaluate`` without the interpretation overhead."""

    def atoms(self) -> Iterable["Atom"]:
        return ()


@dataclass(frozen=True)
class TrueCondition(Condition):
    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        return True

    def registers(self) -> Tuple[str, ...]:
        return ()

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        return self

    def compile(self) -> GuardFn:
        return lambda event, valuation: True

    def __str__(self) -> str:
        return "true"


TRUE = TrueCondition()


@dataclass(frozen=True)
class Atom(Condition):
    """Binary comparison. A literal operand is always kept on the right."""

    lhs: Operand
    op: Op
    rhs: Operand

    def __post_init__(self):
        if isinstance(self.lhs, Literal) and isinstance(self.rhs, Literal):
            raise SchemaError(f"comparison {self.lhs} {self.op.value} {self.rhs} references neither head nor register")
        if isinstance(self.lhs, Literal):
            lhs, rhs = self.rhs, self.lhs
            object.__setattr__(self, "lhs", lhs)
            object.__setattr__(self, "rhs", rhs)
            object.__setattr__(self, "op", self.op.flipped())

    def _resolve(self, operand: Operand, event: Event, valuation: Valuation) -> Tuple[bool, Any]:
        if isinstance(operand, Literal):
            return True, operand.value
        if isinstance(operand, HeadAttr):
            return True, event[operand.attr]
        stored = valuation.get(operand.register)
        if stored is None:
            return False, None
        return True, stored[operand.attr]

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        defined, left = self._resolve(self.lhs, event, valuation)
        if not defined:
            return False
        defined, right = self._resolve(self.rhs, event, valuation)
        if not defined:
            return False
        if not _comparable(left, right):
            raise SchemaError(f"cannot compare {left!r} with {right!r} in {self}")
        return self.op.function(left, right)

    def registers(self) -> Tuple[str, ...]:
        names = [o.register for o in (self.lhs, self.rhs) if isinstance(o, RegAttr)]
        return tuple(dict.fromkeys(names))

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        def swap(o: Operand) -> Operand:
            if isinstance(o, RegAttr) and o.register in mapping:
                return RegAttr(mapping[o.register], o.attr)
            return o

        lhs, rhs = swap(self.lhs), swap(self.rhs)
        if lhs is self.lhs and rhs is self.rhs:
            return self
        return Atom(lhs, self.op, rhs)

    def compile(self) -> GuardFn:
        compare = self.op.function
        lhs, rhs = self.lhs, self.rhs
        if isinstance(lhs, HeadAttr) and isinstance(rhs, Literal):
            attr, value = lhs.attr, rhs.value
            return lambda event, valuation: compare(event.fields[attr], value)
        if isinstance(lhs, HeadAttr) and isinstance(rhs, RegAttr):
            attr, reg, reg_attr = lhs.attr, rhs.register, rhs.attr

            def head_vs_register(event: Event, valuation: Valuation) -> bool:
                stored = valuation.get(reg)
                return stored is not None and compare(event.fields[attr], stored.fields[reg_attr])

            return head_vs_register
        # remaining shapes are rare enough to go through the interpreter
        return self.evaluate

    def atoms(self) -> Iterable["Atom"]:
        return (self,)

    def __str__(self) -> str:
        return f"{self.lhs} {self.op.value} {self.rhs}"


@dataclass(frozen=True)
class Not(Condition):
    inner: Condition

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        return not self.inner.evaluate(event, valuation)

    def registers(self) -> Tuple[str, ...]:
        return self.inner.registers()

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        return Not(self.inner.rename(mapping))

    def compile(self) -> GuardFn:
        inner = self.inner.compile()
        return lambda event, valuation: not inner(event, valuation)

    def atoms(self) -> Iterable["Atom"]:
        return self.inner.atoms()

    def __str__(self) -> str:
        return f"!({self.inner})"


@dataclass(frozen=True)
class And(Condition):
    left: Condition
    right: Condition

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        return self.left.evaluate(event, valuation) and self.right.evaluate(event, valuation)

    def registers(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(self.left.registers() + self.right.registers()))

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        return And(self.left.rename(mapping), self.right.rename(mapping))

    def compile(self) -> GuardFn:
        left, right = self.left.compile(), self.right.compile()
        return lambda event, valuation: left(event, valuation) and right(event, valuation)

    def atoms(self) -> Iterable["Atom"]:
        return tuple(self.left.atoms()) + tuple(self.right.atoms())

    def __str__(self) -> str:
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class Or(Condition):
    left: Condition
    right: Condition

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        return self.left.evaluate(event, valuation) or self.right.evaluate(event, valuation)

    def registers(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(self.left.registers() + self.right.registers()))

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        return Or(self.left.rename(mapping), self.right.rename(mapping))

    def compile(self) -> GuardFn:
        left, right = self.left.compile(), self.right.compile()
        return lambda event, valuation: left(event, valuation) or right(event, valuation)

    def atoms(self) -> Iterable["Atom"]:
        return tuple(self.left.atoms()) + tuple(self.right.atoms())

    def __str__(self) -> str:
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Minterm(Condition):
    """Conjunction of signed base conditions (True = positive literal)."""

    literals: Tuple[Tuple[Condition, bool], ...]

    @property
    def base(self) -> Tuple[Condition, ...]:
        return tuple(c for c, _ in self.literals)

    @property
    def signs(self) -> Tuple[bool, ...]:
        return tuple(s for _, s in self.literals)

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        return all(bool(c.evaluate(event, valuation)) == sign for c, sign in self.literals)

    def registers(self) -> Tuple[str, ...]:
        names: List[str] = []
        for c, _ in self.literals:
            names.extend(c.registers())
        return tuple(dict.fromkeys(names))

    def rename(self, mapping: Mapping[str, str]) -> Condition:
        return Minterm(tuple((c.rename(mapping), s) for c, s in self.literals))

    def compile(self) -> GuardFn:
        parts = [(c.compile(), s) for c, s in self.literals]
        return lambda event, valuation: all(bool(f(event, valuation)) == s for f, s in parts)

    def atoms(self) -> Iterable["Atom"]:
        out: List[Atom] = []
        for c, _ in self.literals:
            out.extend(c.atoms())
        return tuple(out)

    def as_formula(self) -> Condition:
        """Equivalent formula built from And/Not, for DSL printing."""
        return conjoin_all(c if s else negate(c) for c, s in self.literals)

    def __str__(self) -> str:
        return str(self.as_formula())


class EpsilonGuard:
    """Guard of an epsilon transition. Never part of a boolean formula."""

    _instance: Optional["EpsilonGuard"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def evaluate(self, event: Event, valuation: Valuation) -> bool:
        raise LogicError("epsilon guards are not evaluated against events")

    def registers(self) -> Tuple[str, ...]:
        return ()

    def rename(self, mapping: Mapping[str, str]) -> "EpsilonGuard":
        return self

    def __str__(self) -> str:
        return "ε"

    def __repr__(self) -> str:
        return "EPSILON"


EPSILON = EpsilonGuard()

Guard = Union[Condition, EpsilonGuard]


# --- helpers ----------------------------------------------------------------

def evaluate(condition: Condition, event: Event, valuation: Valuation) -> bool:
    if condition is EPSILON:
        raise LogicError("epsilon guards are not evaluated against events")
    return condition.evaluate(event, valuation)


def negate(condition: Condition) -> Condition:
    if isinstance(condition, Not):
        return condition.inner
    return Not(condition)


def conjoin(left: Condition, right: Condition) -> Condition:
    if left == TRUE:
        return right
    if right == TRUE:
        return left
    return And(left, right)


def conjoin_all(conditions: Iterable[Condition]) -> Condition:
    result: Condition = TRUE
    for c in conditions:
        result = conjoin(result, c)
    return result


def completion_guard(guards: Sequence[Condition]) -> Condition:
    """Conjunction of the negated guards: true exactly when none of them fires."""
    return conjoin_all(negate(g) for g in guards)


def minterms(base: Sequence[Condition], cap: int = 16, state: Any = None) -> List[Minterm]:
    """
    All signed combinations of the (deduplicated) base conditions.

    The first base condition varies fastest: for (p, q) the order is
    p∧q, ¬p∧q, p∧¬q, ¬p∧¬q.

    Args:
        base: Guards gathered from one state
        cap: Maximum number of distinct base conditions
        state: Label used in the error message

    Returns:
        List[Minterm]: 2^n minterms; a single empty (true) minterm for n = 0

    Raises:
        ExplosionError: If the base exceeds the cap
    """
    unique = list(dict.fromkeys(base))
    if len(unique) > cap:
        where = f" at state {state}" if state is not None else ""
        raise ExplosionError(f"{len(unique)} distinct guards{where} exceed the minterm cap of {cap}")
    result = []
    for combo in product((True, False), repeat=len(unique)):
        signs = combo[::-1]
        result.append(Minterm(tuple(zip(unique, signs))))
    return result


def entails(mt: Minterm, condition: Condition) -> bool:
    """Syntactic entailment: ``condition`` occurs positively in ``mt``."""
    for c, sign in mt.literals:
        if c == condition:
            return sign
    raise LogicError(f"{condition} is not a base condition of minterm {mt}")


def is_contradictory(mt: Minterm) -> bool:
    """
    Cheap syntactic check for minterms that can never fire.

    Only literals that are a single head-attribute/literal comparison are
    inspected; anything else is assumed satisfiable.
    """
    lower: Dict[str, Tuple[float, bool]] = {}
    upper: Dict[str, Tuple[float, bool]] = {}
    equal: Dict[str, Any] = {}
    different: Dict[str, set] = {}
    for c, sign in mt.literals:
        if not (isinstance(c, Atom) and isinstance(c.lhs, HeadAttr) and isinstance(c.rhs, Literal)):
            continue
        attr, value = c.lhs.attr, c.rhs.value
        op = c.op if sign else c.op.negated()
        if op is Op.EQ:
            if attr in equal and equal[attr] != value:
                return True
            equal[attr] = value
        elif op is Op.NE:
            different.setdefault(attr, set()).add(value)
        elif isinstance(value, str):
            continue
        elif op in (Op.GT, Op.GE):
            strict = op is Op.GT
            bound = lower.get(attr)
            if bound is None or value > bound[0] or (value == bound[0] and strict):
                lower[attr] = (value, strict)
        else:
            strict = op is Op.LT
            bound = upper.get(attr)
            if bound is None or value < bound[0] or (value == bound[0] and strict):
                upper[attr] = (value, strict)
    for attr, value in equal.items():
        if value in different.get(attr, ()):
            return True
        if isinstance(value, str):
            continue
        if attr in lower and (value < lower[attr][0] or (value == lower[attr][0] and lower[attr][1])):
            return True
        if attr in upper and (value > upper[attr][0] or (value == upper[attr][0] and upper[attr][1])):
            return True
    for attr in lower.keys() & upper.keys():
        (lo, lo_strict), (hi, hi_strict) = lower[attr], upper[attr]
        if lo > hi or (lo == hi and (lo_strict or hi_strict)):
            return True
    return False


def check_types(condition: Condition, schema: Schema) -> None:
    """
    Verify every atom compares attributes of comparable types.

    Raises:
        SchemaError: Unknown attribute or string/number comparison
    """
    def type_of(operand: Operand) -> bool:
        if isinstance(operand, Literal):
            return isinstance(operand.value, str)
        return schema.type_of(operand.attr) is AttrType.STRING

    for atom in condition.atoms():
        if type_of(atom.lhs) != type_of(atom.rhs):
            raise SchemaError(f"type mismatch in {atom}: string compared with number")
