"""
Node implementations for the command pipeline.

Each node performs one stage of a command (load, parse, compile,
execute, report) and records failures in the state instead of raising,
so the graph can route to the error node.
"""

import json
import logging
import sys
from pathlib import Path
from typing import List, Tuple

import pandas as pd

from cer_engine.bench import run_benchmark
from cer_engine.compiler import compile_pattern
from cer_engine.config import get_settings
from cer_engine.engine import run_stream
from cer_engine.errors import (
    ConfigurationError,
    ExplosionError,
    PatternSyntaxError,
    SchemaError,
    SremoError,
    StreamError,
    UnsupportedNegationError,
    WindowRequiredError,
)
from cer_engine.events import load_schema, load_stream
from cer_engine.parser import parse_pattern
from cer_engine.sremo import Windowed, apply_strategy
from cer_engine.srt import accepts, to_dot
from cer_engine.windowing import complement, determinize
from state.state import (
    EXIT_IO_ERROR,
    EXIT_MATCH_FAILURE,
    EXIT_PATTERN_ERROR,
    PipelineState,
    increment_step,
    update_state,
)

logger = logging.getLogger(__name__)

PATTERN_ERRORS = (
    PatternSyntaxError,
    SchemaError,
    UnsupportedNegationError,
    WindowRequiredError,
    ConfigurationError,
    ExplosionError,
)

STREAM_COMMANDS = ("match", "bench", "complement-check")


def _fail(state: PipelineState, message: str, exit_code: int) -> PipelineState:
    return update_state(state, error=message, exit_code=exit_code)


def _describe(exc: Exception) -> str:
    if isinstance(exc, PatternSyntaxError):
        return f"pattern syntax error at line {exc.line}, column {exc.column}: {exc}"
    if isinstance(exc, StreamError) and exc.row is not None:
        return f"stream error at row {exc.row}: {exc}"
    return str(exc)


def load_node(state: PipelineState) -> PipelineState:
    """Read the schema, the pattern text and, for streaming commands, the events."""
    args = state["args"]
    updated = increment_step(state, "load_node")
    try:
        schema = load_schema(args["schema"])
        text = Path(args["pattern"]).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(updated, f"cannot read input: {exc}", EXIT_IO_ERROR)
    except SchemaError as exc:
        return _fail(updated, f"invalid schema: {exc}", EXIT_PATTERN_ERROR)
    events = None
    if state["command"] in STREAM_COMMANDS:
        try:
            events = load_stream(args["stream"], schema)
        except OSError as exc:
            return _fail(updated, f"cannot read stream: {exc}", EXIT_IO_ERROR)
        except StreamError as exc:
            return _fail(updated, _describe(exc), EXIT_MATCH_FAILURE)
        logger.info("loaded %d events", len(events))
    return update_state(updated, schema=schema, pattern_text=text, events=events)


def parse_node(state: PipelineState) -> PipelineState:
    """Parse the pattern, apply ``--strategy`` and the ``--window`` override."""
    args = state["args"]
    updated = increment_step(state, "parse_node")
    try:
        e = parse_pattern(state["pattern_text"], state["schema"])
        e = apply_strategy(e, args.get("strategy") or "strict")
        window = args.get("window")
        if window is not None:
            e = Windowed(e.inner if isinstance(e, Windowed) else e, window)
    except PATTERN_ERRORS as exc:
        return _fail(updated, _describe(exc), EXIT_PATTERN_ERROR)
    return update_state(updated, expression=e)


def _write_dot(state: PipelineState, automaton) -> PipelineState:
    path = state["args"].get("dot")
    if not path:
        return state
    try:
        Path(path).write_text(to_dot(automaton), encoding="utf-8")
    except OSError as exc:
        return _fail(state, f"cannot write DOT file: {exc}", EXIT_IO_ERROR)
    return state


def _summary_lines(automaton, window) -> list:
    summary = automaton.summary()
    return [
        f"states={summary['states']}",
        f"transitions={summary['transitions']}",
        f"finals={summary['finals']}",
        f"registers={','.join(summary['registers'])}",
        f"window={window if window is not None else '-'}",
    ]


def compile_node(state: PipelineState) -> PipelineState:
    """Compile for the engine, or determinize for the windowing commands."""
    updated = increment_step(state, "compile_node")
    e = state["expression"]
    settings = get_settings()
    try:
        if state["command"] in ("determinize", "complement-check"):
            automaton = determinize(e, settings)
            compiled = None
        else:
            compiled = compile_pattern(e, settings=settings)
            automaton = compiled.automaton
    except PATTERN_ERRORS as exc:
        return _fail(updated, _describe(exc), EXIT_PATTERN_ERROR)
    updated = update_state(updated, compiled=compiled, automaton=automaton)
    if state["command"] in ("compile", "determinize"):
        window = e.window if isinstance(e, Windowed) else None
        updated = update_state(updated, output=_summary_lines(automaton, window))
        updated = _write_dot(updated, automaton)
    return updated


def _match_lines(state: PipelineState) -> list:
    matches, _ = run_stream(state["compiled"], state["events"])
    if state["args"].get("format") == "json":
        return [json.dumps({"detection": m.detection_index, "indices": list(m.indices)}) for m in matches]
    return [m.to_tsv() for m in matches]


def _bench_lines(state: PipelineState) -> list:
    args = state["args"]
    report = run_benchmark(state["compiled"], state["events"], repeat=args.get("repeat") or 3)
    csv_path = args.get("csv")
    if csv_path:
        path = Path(csv_path)
        pd.DataFrame([report.to_row()]).to_csv(path, mode="a", header=not path.exists(), index=False)
    return report.to_lines()


def _complement_check(state: PipelineState) -> Tuple[List[str], bool]:
    """Every window-sized suffix must be accepted by exactly one of D and its complement."""
    D = state["automaton"]
    C = complement(D, get_settings())
    window = state["expression"].window
    events = state["events"]
    for k in range(1, len(events) + 1):
        suffix = events[max(0, k - window):k]
        if accepts(D, suffix) == accepts(C, suffix):
            return [f"FAIL at={k}"], False
    return [f"PASS checked={len(events)}"], True


def execute_node(state: PipelineState) -> PipelineState:
    """Run the engine, the benchmark or the complement check."""
    updated = increment_step(state, "execute_node")
    command = state["command"]
    try:
        if command == "match":
            lines = _match_lines(state)
        elif command == "bench":
            lines = _bench_lines(state)
        elif command == "complement-check":
            lines, passed = _complement_check(state)
            if not passed:
                return _fail(update_state(updated, output=lines), "complement check failed", EXIT_MATCH_FAILURE)
        else:
            return updated
    except OSError as exc:
        return _fail(updated, f"cannot write output: {exc}", EXIT_IO_ERROR)
    except (SremoError, ValueError) as exc:
        return _fail(updated, _describe(exc), EXIT_MATCH_FAILURE)
    return update_state(updated, output=lines)


def report_node(state: PipelineState) -> PipelineState:
    """Print the collected output lines on stdout."""
    for line in state["output"]:
        print(line)
    logger.info("%s finished after %d steps", state["command"], state["step_count"])
    return increment_step(state, "report_node")


def error_handling_node(state: PipelineState) -> PipelineState:
    """Report the failure on stderr; the exit code is already set."""
    for line in state["output"]:
        print(line)
    print(f"❌ {state['command']} failed in {state['current_node']}: {state['error']}", file=sys.stderr)
    return increment_step(state, "error_handling_node")


def route_after(next_node: str):
    """Conditional edge: go to ``next_node`` unless the last node failed."""

    def route(state: PipelineState) -> str:
        return "error_handling_node" if state.get("error") else next_node

    return route


def route_after_compile(state: PipelineState) -> str:
    if state.get("error"):
        return "error_handling_node"
    return "execute_node" if state["command"] in STREAM_COMMANDS else "report_node"
