"""
Synthetic stock streams and the pattern families used for benchmarking.

Streams are drawn with numpy from a seeded generator, so a (size, seed)
pair always yields the same events.  Pattern generators return DSL text.
"""

from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from cer_engine.events import Event, Schema

BUY_SELL_ROWS = [
    ("B", 1, 22, 300),
    ("B", 1, 24, 225),
    ("B", 2, 32, 1210),
    ("S", 1, 70, 760),
    ("S", 1, 68, 2000),
    ("B", 2, 33, 95),
]

BUY_SELL_PATTERN = '{type=="B"}:mark->r1 ; {true}* ; {type=="S" && id==r1.id}:mark'


def trade_schema() -> Schema:
    """type, id, price, volume: the schema of the buy/sell example stream."""
    return Schema.of(("type", "string"), ("id", "int"), ("price", "real"), ("volume", "int"))


def ticker_schema() -> Schema:
    """type, name, price, volume: the schema of synthetic ticker streams."""
    return Schema.of(("type", "string"), ("name", "string"), ("price", "real"), ("volume", "int"))


def buy_sell_stream() -> List[Event]:
    schema = trade_schema()
    return [schema.make_event(i, row) for i, row in enumerate(BUY_SELL_ROWS, 1)]


def symbol(i: int) -> str:
    return f"S{i}"


def synthetic_stream(n: int, symbols: int = 100, seed: int = 0) -> List[Event]:
    """
    ``n`` ticker events with uniformly drawn symbol, side, price and volume.

    Values are converted to plain Python types so events compare and hash
    like parsed ones.
    """
    rng = np.random.default_rng(seed)
    sides = rng.choice(np.array(["B", "S"]), size=n)
    names = rng.integers(0, symbols, size=n)
    prices = np.round(rng.uniform(1.0, 100.0, size=n), 2)
    volumes = rng.integers(1, 5000, size=n)
    return [
        Event(i + 1, {"type": str(sides[i]), "name": symbol(int(names[i])), "price": float(prices[i]), "volume": int(volumes[i])})
        for i in range(n)
    ]


def periodic_stream(n: int, period: int, hit: str = "S0", miss: str = "S1") -> List[Event]:
    """Every ``period``-th event is named ``hit``, the rest ``miss``; selectivity 1/period."""
    return [
        Event(i, {"type": "B", "name": hit if i % period == 0 else miss, "price": float(i), "volume": 1})
        for i in range(1, n + 1)
    ]


def stream_frame(events: Sequence[Event], schema: Schema) -> pd.DataFrame:
    return pd.DataFrame([[e[a] for a in schema.names] for e in events], columns=schema.names)


def write_stream_csv(events: Sequence[Event], schema: Schema, path: Union[str, Path]) -> Path:
    """Headerless CSV in schema column order, readable by ``load_stream``."""
    path = Path(path)
    stream_frame(events, schema).to_csv(path, header=False, index=False)
    return path


def write_schema(schema: Schema, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text("".join(f"{a.name}:{a.type.value}\n" for a in schema.attributes), encoding="utf-8")
    return path


# --- pattern families -------------------------------------------------------

def _local(i: int) -> str:
    return f'name=="{symbol(i)}"'


def _group(start: int, kleene: bool) -> List[str]:
    register = f"r{start // 3 + 1}"
    middle = f"{{{_local(start + 1)}}}:mark"
    if kleene:
        middle = f"({middle} ; {{true}}*)+"
    return [
        f"{{{_local(start)}}}:mark->{register}",
        middle,
        f"{{{_local(start + 2)} && price > {register}.price}}:mark",
    ]


def seq_pattern(length: int, window: int) -> str:
    """
    Skip-till-any sequence of ``length`` terminals (a multiple of 3).

    Every group of three stores its first event and requires the third to
    be priced above it.
    """
    if length < 3 or length % 3:
        raise ValueError("sequence length must be a positive multiple of 3")
    parts = [p for start in range(0, length, 3) for p in _group(start, kleene=False)]
    return f"any({', '.join(parts)}) within {window}"


def kleene_pattern(length: int, window: int) -> str:
    """Like ``seq_pattern`` with the middle terminal of every group iterated."""
    if length < 3 or length % 3:
        raise ValueError("kleene length must be a positive multiple of 3")
    parts = [p for start in range(0, length, 3) for p in _group(start, kleene=True)]
    return f"any({', '.join(parts)}) within {window}"


def nested_kleene_pattern(length: int, window: int) -> str:
    """Groups of four: store, (a ; b+)+, compare with the stored event."""
    if length < 4 or length % 4:
        raise ValueError("nested kleene length must be a positive multiple of 4")
    parts = []
    for group, start in enumerate(range(0, length, 4), 1):
        register = f"r{group}"
        inner = f"({{{_local(start + 2)}}}:mark ; {{true}}*)+"
        parts.append(f"{{{_local(start)}}}:mark->{register}")
        parts.append(f"({{{_local(start + 1)}}}:mark ; {{true}}* ; {inner})+")
        parts.append(f"{{{_local(start + 3)} && price > {register}.price}}:mark")
    return f"any({', '.join(parts)}) within {window}"


def stock_queries(window: int = 1000) -> Dict[str, str]:
    """Mixed-operator queries over the ticker schema."""
    first = '{type=="S" && name=="S0"}:mark->r1'
    last = '{type=="S" && name=="S3" && price < r1.price}:mark'
    either = '(type=="B" || type=="S")'
    return {
        "q1": f'any({first}, {{type=="B" && name=="S1"}}:mark, {{type=="B" && name=="S2"}}:mark, {last}) within {window}',
        "q2": (
            f'any({first}, {{type=="B" && name=="S1" && price > 20.0}}:mark, '
            f'{{type=="B" && name=="S2" && price < 80.0}}:mark, {last}) within {window}'
        ),
        "q3": f'any({first}, {{{either} && name=="S1"}}:mark, {{{either} && name=="S2"}}:mark, {last}) within {window}',
        "q4": (
            f'any({first}, {{{either} && name=="S1" && price > 20.0}}:mark, '
            f'{{{either} && name=="S2" && price < 80.0}}:mark, {last}) within {window}'
        ),
        "q5": (
            f'any({first}, ({{{either} && name=="S4" && volume >= 2500}}:mark ; {{true}}*)+, '
            f'{{name=="S5" && price > r1.price}}:mark) within {window}'
        ),
    }
