"""
State definitions for the command pipeline.

One PipelineState flows through the graph nodes of a CLI command: the
loaded inputs, the parsed and compiled pattern, the lines to print and
the exit status.
"""

from typing import Any, Dict, List, Optional, TypedDict

from cer_engine.compiler import CompiledPattern
from cer_engine.events import Event, Schema
from cer_engine.sremo import Sremo
from cer_engine.srt import Srt

# Stable exit status contract of the command line.
EXIT_OK = 0
EXIT_MATCH_FAILURE = 1
EXIT_PATTERN_ERROR = 2
EXIT_IO_ERROR = 3


class PipelineState(TypedDict):
    """
    State shared by all nodes of a command.

    ``args`` holds the parsed command line flags as a plain dict.
    """

    command: str
    args: Dict[str, Any]

    # Inputs
    schema: Optional[Schema]
    pattern_text: Optional[str]
    events: Optional[List[Event]]

    # Pattern at its successive stages
    expression: Optional[Sremo]
    compiled: Optional[CompiledPattern]
    automaton: Optional[Srt]

    # Results
    output: List[str]

    # Processing bookkeeping
    step_count: int
    current_node: str

    # Error handling
    error: Optional[str]
    exit_code: int


def create_initial_state(command: str, args: Dict[str, Any]) -> PipelineState:
    """
    Create the initial state of a command run.

    Args:
        command: Subcommand name
        args: Parsed flags

    Returns:
        PipelineState: Initial state object
    """
    return PipelineState(
        command=command,
        args=dict(args),
        schema=None,
        pattern_text=None,
        events=None,
        expression=None,
        compiled=None,
        automaton=None,
        output=[],
        step_count=0,
        current_node="start",
        error=None,
        exit_code=EXIT_OK,
    )


def update_state(state: PipelineState, **updates) -> PipelineState:
    new_state = state.copy()
    new_state.update(updates)
    return new_state


def increment_step(state: PipelineState, node_name: str) -> PipelineState:
    return update_state(state, step_count=state["step_count"] + 1, current_node=node_name)
