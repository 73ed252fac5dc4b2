"""Run configuration: defaults, file loading, and flag-override resolution."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .llm import HttpTransport, LLMClient, Transport

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


@dataclass
class RunConfig:
    """Knobs for a reflection run or a corpus batch.

    ``text_weight``/``syntax_weight`` weight the two similarity components and
    must sum to 1. ``threshold`` is compared against each score separately;
    a trial where both reach it ends the loop early.
    """

    text_weight: float = 0.5
    syntax_weight: float = 0.5
    threshold: float = 0.9
    max_trials: int = 5
    constraint: str = "non-code"
    endpoint: str = DEFAULT_ENDPOINT
    model: str = "gpt-4o"
    credential_env: str = "OPENAI_API_KEY"
    mode: str = "live"
    cassette: str | None = None
    parallelism: int = 4
    out_dir: str = "equirep-out"
    generation_temperature: float = 0.7
    evaluation_temperature: float = 0.0
    max_output_tokens: int = 1024
    retry_attempts: int = 3
    backoff_base: float = 0.5
    request_timeout: float = 60.0
    memory_window: int | None = None
    classify: bool = False
    fail_fast: bool = False

    def validate(self) -> "RunConfig":
        if self.text_weight < 0 or self.syntax_weight < 0:
            raise ConfigError("weights must be non-negative")
        if abs(self.text_weight + self.syntax_weight - 1.0) > 1e-9:
            raise ConfigError(
                f"weights must sum to 1, got {self.text_weight},{self.syntax_weight}"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.max_trials < 1:
            raise ConfigError(f"max_trials must be >= 1, got {self.max_trials}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.mode not in ("live", "record", "replay"):
            raise ConfigError(f"mode must be live, record, or replay, got {self.mode!r}")
        if self.mode in ("record", "replay") and not self.cassette:
            raise ConfigError(f"{self.mode} mode requires a cassette path")
        if self.memory_window is not None and self.memory_window < 0:
            raise ConfigError("memory_window must be >= 0")
        return self

    def build_client(self, transport: Transport | None = None) -> LLMClient:
        """Wire up a client for this config; a transport argument overrides HTTP."""
        if transport is None and self.mode in ("live", "record"):
            transport = HttpTransport(
                endpoint=self.endpoint,
                model=self.model,
                credential_env=self.credential_env,
                timeout=self.request_timeout,
            )
        return LLMClient(
            mode=self.mode,
            transport=transport,
            cassette_path=self.cassette,
            max_in_flight=self.parallelism,
            retry_attempts=self.retry_attempts,
            backoff_base=self.backoff_base,
        )


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON config file; keys must be RunConfig field names."""
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"config file {path} has unknown keys: {sorted(unknown)}")
    return raw


def resolve_config(
    file_path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Defaults, then config-file values, then explicit flag overrides."""
    values: dict[str, Any] = {}
    if file_path is not None:
        values.update(load_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown config override {key!r}")
            values[key] = value
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()
