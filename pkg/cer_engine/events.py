"""
Event model: schemas, events, streams, registers and valuations.

Events are immutable attribute records carrying their 1-based stream
position.  A Valuation is a value object: updating it returns a new
valuation and never touches the original.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from cer_engine.errors import ConfigurationError, SchemaError, StreamError

logger = logging.getLogger(__name__)

# Pseudo register name for the automaton head (the event being read).
HEAD = "~"


class AttrType(str, Enum):
    STRING = "string"
    INTEGER = "int"
    REAL = "real"

    @classmethod
    def parse(cls, token: str) -> "AttrType":
        aliases = {
            "string": cls.STRING,
            "str": cls.STRING,
            "int": cls.INTEGER,
            "integer": cls.INTEGER,
            "real": cls.REAL,
            "float": cls.REAL,
        }
        try:
            return aliases[token.strip().lower()]
        except KeyError:
            raise SchemaError(f"unknown attribute type {token!r}") from None

    @property
    def is_numeric(self) -> bool:
        return self is not AttrType.STRING

    def coerce(self, raw: Any) -> Any:
        """Convert a raw (usually textual) value to this type."""
        try:
            if self is AttrType.STRING:
                return str(raw)
            if self is AttrType.INTEGER:
                if isinstance(raw, float) and not raw.is_integer():
                    raise ValueError(raw)
                return int(raw)
            return float(raw)
        except (TypeError, ValueError):
            raise SchemaError(f"value {raw!r} is not a valid {self.value}") from None

    def accepts(self, value: Any) -> bool:
        if self is AttrType.STRING:
            return isinstance(value, str)
        if isinstance(value, bool):
            return False
        if self is AttrType.INTEGER:
            return isinstance(value, int)
        return isinstance(value, (int, float))


@dataclass(frozen=True)
class Attribute:
    name: str
    type: AttrType


@dataclass(frozen=True)
class Schema:
    """Ordered, typed attribute list; column order of the stream CSV."""

    attributes: Tuple[Attribute, ...]
    _types: Dict[str, AttrType] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.attributes:
            raise SchemaError("schema needs at least one attribute")
        types: Dict[str, AttrType] = {}
        for attribute in self.attributes:
            if attribute.name in types:
                raise SchemaError(f"duplicate attribute {attribute.name!r}")
            types[attribute.name] = attribute.type
        object.__setattr__(self, "_types", types)

    @classmethod
    def of(cls, *pairs: Tuple[str, Union[str, AttrType]]) -> "Schema":
        return cls(tuple(Attribute(name, t if isinstance(t, AttrType) else AttrType.parse(t)) for name, t in pairs))

    @property
    def names(self) -> List[str]:
        return [a.name for a in self.attributes]

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def type_of(self, name: str) -> AttrType:
        try:
            return self._types[name]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def make_event(self, index: int, values: Union[Mapping[str, Any], Sequence[Any]]) -> "Event":
        """Validate and coerce raw values (mapping or positional) into an Event."""
        if not isinstance(values, Mapping):
            if len(values) != len(self.attributes):
                raise SchemaError(f"expected {len(self.attributes)} values, got {len(values)}")
            values = dict(zip(self.names, values))
        missing = [name for name in self.names if name not in values]
        if missing:
            raise SchemaError(f"missing attributes: {', '.join(missing)}")
        extra = [name for name in values if name not in self._types]
        if extra:
            raise SchemaError(f"unknown attributes: {', '.join(extra)}")
        return Event(index, {a.name: a.type.coerce(values[a.name]) for a in self.attributes})

    def validate(self, event: "Event") -> None:
        for attribute in self.attributes:
            if attribute.name not in event.fields:
                raise SchemaError(f"event {event.index} lacks attribute {attribute.name!r}")
            if not attribute.type.accepts(event.fields[attribute.name]):
                raise SchemaError(f"event {event.index}: {attribute.name!r} is not {attribute.type.value}")


def parse_schema(text: str) -> Schema:
    """Parse ``name:type`` lines; blank lines and ``#`` comments are skipped."""
    pairs = []
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, type_token = line.partition(":")
        if not sep or not name.strip():
            raise SchemaError(f"schema line {number}: expected 'name:type', got {line!r}")
        pairs.append((name.strip(), AttrType.parse(type_token)))
    return Schema.of(*pairs)


def load_schema(path: Union[str, Path]) -> Schema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Event:
    """
    One stream element.

    ``fields`` is a plain dict for fast lookup on the matching hot path; it
    must be treated as read-only.
    """

    index: int
    fields: Dict[str, Any] = field(hash=False)
    _items: Tuple[Tuple[str, Any], ...] = field(init=False, repr=False, compare=False, hash=True)

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 1:
            raise SchemaError(f"event index must be a positive integer, got {self.index!r}")
        fields = dict(self.fields)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "_items", tuple(sorted(fields.items())))

    @classmethod
    def of(cls, index: int, **values: Any) -> "Event":
        return cls(index, values)

    def __getitem__(self, attr: str) -> Any:
        try:
            return self.fields[attr]
        except KeyError:
            raise SchemaError(f"event {self.index} has no attribute {attr!r}") from None

    def reindexed(self, index: int) -> "Event":
        return Event(index, self.fields)

    def __str__(self) -> str:
        body = ",".join(str(v) for _, v in self._items)
        return f"#{self.index}({body})"


def load_stream(path: Union[str, Path], schema: Schema) -> List[Event]:
    """
    Read a headerless CSV into events; row number becomes the index.

    Raises:
        StreamError: On malformed rows, naming the offending row
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as exc:
        raise StreamError(f"malformed CSV: {exc}") from exc
    if frame.shape[1] != len(schema.attributes):
        raise StreamError(f"expected {len(schema.attributes)} columns, found {frame.shape[1]}", row=1)
    return events_from_rows(frame.itertuples(index=False, name=None), schema)


def events_from_rows(rows: Iterable[Sequence[Any]], schema: Schema) -> List[Event]:
    events = []
    for row_number, row in enumerate(rows, 1):
        if any(value is None or (isinstance(value, float) and value != value) for value in row):
            raise StreamError("missing column value", row=row_number)
        try:
            events.append(schema.make_event(row_number, list(row)))
        except SchemaError as exc:
            raise StreamError(str(exc), row=row_number) from exc
    logger.debug("loaded %d events", len(events))
    return events


@dataclass(frozen=True)
class RegisterSet:
    names: Tuple[str, ...]
    _positions: Dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        positions = {}
        for position, name in enumerate(self.names):
            if name in positions:
                raise ConfigurationError(f"duplicate register {name!r}")
            positions[name] = position
        object.__setattr__(self, "_positions", positions)

    @classmethod
    def of(cls, names: Iterable[str]) -> "RegisterSet":
        return cls(tuple(dict.fromkeys(names)))

    def __contains__(self, name: str) -> bool:
        return name in self._positions

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise ConfigurationError(f"unknown register {name!r}") from None

    def union(self, other: Iterable[str]) -> "RegisterSet":
        return RegisterSet.of(list(self.names) + list(other))


class Valuation:
    """Partial assignment register -> Event; ``None`` stands for the empty register."""

    __slots__ = ("registers", "_contents", "_fingerprint")

    def __init__(self, registers: RegisterSet, contents: Optional[Tuple[Optional[Event], ...]] = None):
        if contents is None:
            contents = (None,) * len(registers)
        elif len(contents) != len(registers):
            raise ConfigurationError("valuation size does not match its register set")
        self.registers = registers
        self._contents = contents
        self._fingerprint = tuple(0 if e is None else e.index for e in contents)

    @classmethod
    def empty(cls, registers: Union[RegisterSet, Iterable[str]]) -> "Valuation":
        if not isinstance(registers, RegisterSet):
            registers = RegisterSet.of(registers)
        return cls(registers)

    @property
    def fingerprint(self) -> Tuple[int, ...]:
        """Stored event indices, 0 for empty registers."""
        return self._fingerprint

    def update(self, writes: Iterable[str], event: Event) -> "Valuation":
        contents = list(self._contents)
        changed = False
        for name in writes:
            contents[self.registers.position(name)] = event
            changed = True
        if not changed:
            return self
        return Valuation(self.registers, tuple(contents))

    def lookup(self, name: str, head: Optional[Event] = None) -> Optional[Event]:
        if name == HEAD:
            return head
        return self._contents[self.registers.position(name)]

    def get(self, name: str) -> Optional[Event]:
        """Lookup without the HEAD special case; used by compiled guards."""
        return self._contents[self.registers.position(name)]

    def as_dict(self) -> Dict[str, Event]:
        return {name: e for name, e in zip(self.registers.names, self._contents) if e is not None}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Valuation):
            return NotImplemented
        return self.registers.names == other.registers.names and self._contents == other._contents

    def __hash__(self) -> int:
        return hash((self.registers.names, self._contents))

    def __repr__(self) -> str:
        stored = ", ".join(f"{k}={v}" for k, v in self.as_dict().items())
        return f"Valuation({stored or '#'})"


def valuation_update(v: Valuation, writes: Iterable[str], event: Event) -> Valuation:
    return v.update(writes, event)


def valuation_lookup(v: Valuation, name: str, head: Optional[Event] = None) -> Optional[Event]:
    return v.lookup(name, head)


@dataclass(frozen=True, order=True)
class Match:
    """A complex event: the marked stream indices and where it was detected."""

    detection_index: int
    indices: Tuple[int, ...]

    def __post_init__(self):
        indices = tuple(self.indices)
        object.__setattr__(self, "indices", indices)
        if not indices:
            raise ConfigurationError("a reported match needs at least one index")
        if any(b <= a for a, b in zip(indices, indices[1:])) or indices[0] < 1:
            raise ConfigurationError(f"match indices must be strictly increasing positives: {indices}")
        if indices[-1] > self.detection_index:
            raise ConfigurationError("match extends past its detection index")

    @classmethod
    def of(cls, detection_index: int, indices: Iterable[int]) -> "Match":
        return cls(detection_index, tuple(sorted(indices)))

    @property
    def span(self) -> int:
        return self.indices[-1] - self.indices[0] + 1

    def to_tsv(self) -> str:
        return f"{self.detection_index}\t{','.join(str(i) for i in self.indices)}"
