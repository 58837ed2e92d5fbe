"""Configuration: TOML file with environment-variable overrides.

Environment variables use the ``PRINTMERGE_`` prefix and override file
values; credentials only ever arrive through the environment and are never
echoed back.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli

from .agent import AgentConfig


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8040
    data_dir: str = "data"
    poll_timeout_s: float = 10.0
    fleet_file: str | None = None
    agent: AgentConfig = field(default_factory=AgentConfig)


_AGENT_ENV = {
    "PRINTMERGE_CLEARANCE_MM": ("clearance_mm", float),
    "PRINTMERGE_MAX_ITERATIONS": ("max_iterations", int),
    "PRINTMERGE_MEMORY_K": ("memory_k", int),
    "PRINTMERGE_INCLUDE_IMAGES": ("include_images", lambda v: v.lower() in ("1", "true", "yes")),
    "PRINTMERGE_TEMPLATE_ID": ("template_id", str),
    "PRINTMERGE_BATCH_WINDOW_COUNT": ("batch_window_count", int),
    "PRINTMERGE_BATCH_WINDOW_SECONDS": ("batch_window_seconds", float),
    "PRINTMERGE_PLANNER": ("planner_kind", str),
    "PRINTMERGE_PLANNER_ENDPOINT": ("planner_endpoint", str),
    "PRINTMERGE_PLANNER_MODEL": ("planner_model", str),
    "PRINTMERGE_PLANNER_API_KEY": ("planner_api_key", str),
    "PRINTMERGE_SCRIPTED_PATH": ("scripted_path", str),
}

_SERVICE_ENV = {
    "PRINTMERGE_HOST": ("host", str),
    "PRINTMERGE_PORT": ("port", int),
    "PRINTMERGE_DATA_DIR": ("data_dir", str),
    "PRINTMERGE_POLL_TIMEOUT_S": ("poll_timeout_s", float),
    "PRINTMERGE_FLEET_FILE": ("fleet_file", str),
}


def _apply_section(cls, base, section: dict, env_map: dict, environ) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    values = dict(section)
    for env_name, (key, cast) in env_map.items():
        if env_name in environ:
            values[key] = cast(environ[env_name])
    return values


def load_config(path: str | Path | None = None, environ=None) -> ServiceConfig:
    environ = os.environ if environ is None else environ
    doc: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    agent_values = _apply_section(
        AgentConfig, None, doc.get("agent", {}), _AGENT_ENV, environ
    )
    service_values = _apply_section(
        ServiceConfig, None, doc.get("service", {}), _SERVICE_ENV, environ
    )
    service_values.pop("agent", None)
    return ServiceConfig(agent=AgentConfig(**agent_values), **service_values)
