"""Tests for the synthetic streams and pattern families."""

import pytest

from cer_engine.events import load_schema, load_stream
from cer_engine.parser import parse_pattern
from cer_engine.sremo import Windowed, registers_of
from cer_engine.workloads import (
    BUY_SELL_ROWS,
    kleene_pattern,
    nested_kleene_pattern,
    periodic_stream,
    seq_pattern,
    stock_queries,
    stream_frame,
    symbol,
    synthetic_stream,
    buy_sell_stream,
    ticker_schema,
    trade_schema,
    write_schema,
    write_stream_csv,
)


def test_buy_sell_stream():
    events = buy_sell_stream()
    assert len(events) == len(BUY_SELL_ROWS) == 6
    assert [e["type"] for e in events] == ["B", "B", "B", "S", "S", "B"]
    assert events[3]["id"] == 1
    assert events[3]["price"] == 70.0


def test_synthetic_stream_is_reproducible():
    first = synthetic_stream(200, symbols=5, seed=42)
    assert first == synthetic_stream(200, symbols=5, seed=42)
    assert first != synthetic_stream(200, symbols=5, seed=43)
    assert [e.index for e in first] == list(range(1, 201))


def test_synthetic_stream_values():
    schema = ticker_schema()
    events = synthetic_stream(500, symbols=4, seed=0)
    for event in events:
        schema.validate(event)
        assert event["type"] in ("B", "S")
        assert event["name"] in {symbol(i) for i in range(4)}
        assert 1.0 <= event["price"] <= 100.0
        assert 1 <= event["volume"] < 5000


def test_periodic_stream():
    events = periodic_stream(12, 4)
    hits = [e.index for e in events if e["name"] == "S0"]
    assert hits == [4, 8, 12]
    assert all(e["name"] == "S1" for e in events if e.index not in hits)


def test_stream_files_round_trip(tmp_path):
    schema = ticker_schema()
    events = synthetic_stream(25, seed=3)
    schema_path = write_schema(schema, tmp_path / "ticker.schema")
    stream_path = write_stream_csv(events, schema, tmp_path / "ticker.csv")

    assert load_schema(schema_path) == schema
    assert load_stream(stream_path, schema) == events
    assert list(stream_frame(events, schema).columns) == schema.names


def test_pattern_families_parse():
    schema = ticker_schema()
    test_cases = [
        (seq_pattern(6, 100), ("r1", "r2")),
        (kleene_pattern(3, 50), ("r1",)),
        (nested_kleene_pattern(8, 50), ("r1", "r2")),
    ]
    for text, registers in test_cases:
        e = parse_pattern(text, schema)
        assert isinstance(e, Windowed)
        assert registers_of(e) == registers


def test_pattern_family_lengths():
    for build, bad in [(seq_pattern, 4), (kleene_pattern, 0), (nested_kleene_pattern, 6)]:
        with pytest.raises(ValueError):
            build(bad, 10)


def test_stock_queries_parse():
    schema = ticker_schema()
    queries = stock_queries(window=500)
    assert sorted(queries) == ["q1", "q2", "q3", "q4", "q5"]
    for text in queries.values():
        e = parse_pattern(text, schema)
        assert e.window == 500


def test_trade_schema():
    assert trade_schema().names == ["type", "id", "price", "volume"]
