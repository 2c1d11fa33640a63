"""
Exception hierarchy for the recognition engine.

Every error raised on purpose by this package derives from SremoError so
callers (the CLI pipeline in particular) can map families of failures to
exit codes without catching bare Exception.
"""

from typing import Optional


class SremoError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(SremoError):
    """Bad settings, unknown register names, misuse of an API."""


class SchemaError(SremoError):
    """Schema violations: unknown attributes, incomparable types, bad values."""


class PatternSyntaxError(SremoError):
    """The pattern text does not conform to the DSL grammar."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedNegationError(SremoError):
    """Negation of a non-terminal expression outside a windowed pattern."""


class WindowRequiredError(SremoError):
    """Determinization was requested for an expression without a window."""


class ExplosionError(SremoError):
    """A construction exceeded one of the configured size caps."""

    def __init__(self, message: str, states: Optional[int] = None, transitions: Optional[int] = None):
        super().__init__(message)
        self.states = states
        self.transitions = transitions


class OracleScaleError(SremoError):
    """Input too long for brute-force enumeration."""


class LogicError(SremoError):
    """Internal contract violated by the caller (e.g. entailment outside the base)."""


class DeterminismError(SremoError):
    """An automaton expected to be deterministic is not."""


class OutputAgnosticError(SremoError):
    """Match enumeration requested on an automaton that no longer marks events."""


class EngineContractError(SremoError):
    """The streaming engine received an automaton it cannot run."""


class StreamError(SremoError):
    """Malformed or out-of-order stream input."""

    def __init__(self, message: str, row: Optional[int] = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
