"""Shared fixtures: the buy/sell example stream, its schema and pattern."""

import pytest

from cer_engine.config import EngineSettings
from cer_engine.parser import parse_pattern
from cer_engine.workloads import BUY_SELL_PATTERN, buy_sell_stream, trade_schema


@pytest.fixture
def schema():
    return trade_schema()


@pytest.fixture
def trades():
    return buy_sell_stream()


@pytest.fixture
def buy_sell(schema):
    return parse_pattern(BUY_SELL_PATTERN, schema)


@pytest.fixture
def settings():
    return EngineSettings()
