"""
Command line entry point.

Every subcommand runs the same LangGraph pipeline (load, parse, compile,
execute, report); nodes route to the error node as soon as a stage fails.

    python main.py compile --pattern p.sremo --schema s.schema [--dot out.dot]
    python main.py match --pattern p.sremo --schema s.schema --stream s.csv
    python main.py bench --pattern p.sremo --schema s.schema --stream s.csv --repeat 3
    python main.py determinize --pattern p.sremo --schema s.schema [--dot out.dot]
    python main.py complement-check --pattern p.sremo --schema s.schema --stream s.csv
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from langgraph.graph import END, StateGraph

from cer_engine.config import configure_logging
from cer_engine.errors import ConfigurationError
from nodes.node import (
    compile_node,
    error_handling_node,
    execute_node,
    load_node,
    parse_node,
    report_node,
    route_after,
    route_after_compile,
)
from state.state import EXIT_PATTERN_ERROR, PipelineState, create_initial_state

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


def create_workflow() -> StateGraph:
    """
    Create and configure the command pipeline.

    Returns:
        StateGraph: Configured workflow graph
    """
    workflow = StateGraph(PipelineState)

    workflow.add_node("load_node", load_node)
    workflow.add_node("parse_node", parse_node)
    workflow.add_node("compile_node", compile_node)
    workflow.add_node("execute_node", execute_node)
    workflow.add_node("report_node", report_node)
    workflow.add_node("error_handling_node", error_handling_node)

    workflow.set_entry_point("load_node")

    workflow.add_conditional_edges(
        "load_node",
        route_after("parse_node"),
        {"parse_node": "parse_node", "error_handling_node": "error_handling_node"},
    )
    workflow.add_conditional_edges(
        "parse_node",
        route_after("compile_node"),
        {"compile_node": "compile_node", "error_handling_node": "error_handling_node"},
    )
    workflow.add_conditional_edges(
        "compile_node",
        route_after_compile,
        {
            "execute_node": "execute_node",
            "report_node": "report_node",
            "error_handling_node": "error_handling_node",
        },
    )
    workflow.add_conditional_edges(
        "execute_node",
        route_after("report_node"),
        {"report_node": "report_node", "error_handling_node": "error_handling_node"},
    )

    workflow.add_edge("report_node", END)
    workflow.add_edge("error_handling_node", END)

    return workflow


def run_command(command: str, args: Dict[str, Any]) -> PipelineState:
    """
    Run one subcommand through the pipeline.

    Args:
        command: Subcommand name
        args: Parsed flags

    Returns:
        PipelineState: Final state, including output lines and exit code
    """
    logger.debug("running %s with %s", command, args)
    app = create_workflow().compile()
    return app.invoke(create_initial_state(command, args))


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sremo", description="Complex event recognition with SREMO patterns")
    parser.add_argument("--log-level", default=None, help="CRITICAL, ERROR, WARNING, INFO or DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, stream: bool) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--pattern", required=True, help="file holding the pattern")
        p.add_argument("--schema", required=True, help="file with one name:type line per attribute")
        if stream:
            p.add_argument("--stream", required=True, help="headerless CSV, one event per row")
        p.add_argument("--window", type=positive_int, default=None, help="override the pattern window")
        p.add_argument("--strategy", choices=("strict", "any", "next"), default="strict")
        return p

    p = add("compile", "compile a pattern and print automaton statistics", stream=False)
    p.add_argument("--dot", default=None, help="write the automaton as Graphviz DOT")

    p = add("match", "print the matches of a pattern over a stream", stream=True)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = add("bench", "measure throughput over a stream", stream=True)
    p.add_argument("--repeat", type=positive_int, default=3)
    p.add_argument("--csv", default=None, help="append the report as a CSV row")

    p = add("determinize", "build the deterministic automaton of a windowed pattern", stream=False)
    p.add_argument("--dot", default=None, help="write the automaton as Graphviz DOT")

    add("complement-check", "check that a windowed pattern and its complement never agree", stream=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        configure_logging(namespace.log_level)
    except (ConfigurationError, ValueError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_PATTERN_ERROR
    args = {k: v for k, v in vars(namespace).items() if k not in ("command", "log_level")}
    final_state = run_command(namespace.command, args)
    return final_state["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
