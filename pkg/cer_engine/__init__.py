"""
Complex event recognition with symbolic regular expressions.

Patterns with memory (registers) and output (marked events) are parsed,
compiled into symbolic register transducers and run over event streams.
Windowed patterns can also be determinized and complemented.
"""

from cer_engine.compiler import (
    CompiledPattern,
    compile_pattern,
    compile_sremo,
    concat,
    intersect,
    make_streaming,
    star,
    union,
)
from cer_engine.config import EngineSettings, configure_logging, get_settings, load_settings
from cer_engine.engine import Counters, EngineState, Run, advance, engine_init, engine_stats, run_stream
from cer_engine.errors import SremoError
from cer_engine.events import Event, Match, Schema, load_schema, load_stream
from cer_engine.oracle import oracle_matches, oracle_streaming_matches
from cer_engine.parser import parse_pattern
from cer_engine.srt import Srt, Transition, eliminate_epsilon, exhaustive_matches, to_dot
from cer_engine.windowing import complement, determinize, is_deterministic, unroll

__all__ = [
    "CompiledPattern",
    "Counters",
    "EngineSettings",
    "EngineState",
    "Event",
    "Match",
    "Run",
    "Schema",
    "Srt",
    "SremoError",
    "Transition",
    "advance",
    "compile_pattern",
    "compile_sremo",
    "complement",
    "concat",
    "configure_logging",
    "determinize",
    "eliminate_epsilon",
    "engine_init",
    "engine_stats",
    "exhaustive_matches",
    "get_settings",
    "intersect",
    "is_deterministic",
    "load_schema",
    "load_settings",
    "load_stream",
    "make_streaming",
    "oracle_matches",
    "oracle_streaming_matches",
    "parse_pattern",
    "run_stream",
    "star",
    "to_dot",
    "union",
    "unroll",
]
