"""
Runtime settings.

Settings come from the process environment (optionally seeded from a
``.env`` file through python-dotenv) and are validated by pydantic.  All
variables share the ``SREMO_`` prefix; see ``env_example.txt``.
"""

import logging
import os
from functools import lru_cache
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from cer_engine.errors import ConfigurationError

ENV_PREFIX = "SREMO_"

LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class EngineSettings(BaseModel):
    """Caps and switches shared by the compiler, oracle and engine."""

    model_config = ConfigDict(frozen=True)

    minterm_cap: int = Field(default=16, ge=0, le=24)
    oracle_cap: int = Field(default=14, ge=0)
    state_cap: int = Field(default=50_000, ge=1)
    transition_cap: int = Field(default=100_000, ge=1)
    prune_contradictions: bool = False
    determinism_sample_cap: int = Field(default=4096, ge=1)
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}")
        return level


def _read_environment() -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for name in EngineSettings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw is not None and raw != "":
            values[name] = raw
    return values


def load_settings(env_file: Optional[str] = None, **overrides: Any) -> EngineSettings:
    """
    Build settings from the environment.

    Args:
        env_file: Optional path of a dotenv file to load first
        **overrides: Explicit values taking precedence over the environment

    Returns:
        EngineSettings: Validated settings

    Raises:
        ConfigurationError: If a variable fails validation
    """
    if env_file:
        load_dotenv(env_file)
    else:
        load_dotenv()
    values = _read_environment()
    values.update(overrides)
    try:
        return EngineSettings(**values)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid settings: {exc}") from exc


@lru_cache(maxsize=1)
def get_settings() -> EngineSettings:
    """Process-wide settings, loaded once."""
    return load_settings()


def resolve(settings: Optional[EngineSettings]) -> EngineSettings:
    return settings if settings is not None else get_settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Install the package log format on the root logger (stderr)."""
    logging.basicConfig(level=(level or get_settings().log_level).upper(), format=LOG_FORMAT)
