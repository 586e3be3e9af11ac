"""
Configuration settings and run-file parsing for Triwell.
"""
from functools import lru_cache
from typing import Any

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.models import RunConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="TRIWELL_",
    )

    # Process
    log_level: str = "INFO"
    output_dir: str = "output"

    # Evolution defaults
    dt: float = 0.01
    t_max: float = 300.0
    sc_tol: float = 1e-12
    sc_max_iter: int = 50
    output_stride: int = 100

    # Equilibrium defaults
    eq_damping: float = 0.5
    eq_max_iter: int = 500
    eq_tol: float = 1e-12

    # Memory-check defaults
    memory_epsilons: tuple[float, ...] = (0.01, 0.005, 0.0025)
    memory_k_points: int = 2000
    memory_s_step: float = 0.005
    memory_window_factor: float = 50.0
    memory_ir_fraction: float = 0.5
    memory_accuracy_tol: float = 1e-3

    # Sweep default
    gbar_list: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)


@lru_cache
def get_settings() -> Settings:
    return Settings()


# ============================================================
# Run Files
# ============================================================

MANDATORY_KEYS = ("N_total", "beta", "Delta", "gbar_before", "gbar_after")
LIST_KEYS = ("memory_epsilons", "gbar_list")


def _key_to_field() -> dict[str, str]:
    """Map every accepted file key (alias or field name) to its field name."""
    mapping = {}
    for name, field in RunConfig.model_fields.items():
        mapping[field.alias or name] = name
    return mapping


def _file_key(name: str) -> str:
    field = RunConfig.model_fields[name]
    return field.alias or name


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Parse a flat `key = value` run file.

    `#` starts a comment. Physical keys are mandatory; omitted solver keys
    take their defaults from Settings.
    """
    key_map = _key_to_field()
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")

        key, value = (part.strip() for part in line.split("=", 1))
        if key not in key_map:
            raise ConfigError(f"{source}:{line_no}: unknown key '{key}'")
        if key in lines:
            raise ConfigError(f"{source}:{line_no}: key '{key}' already set on line {lines[key]}")
        if not value:
            raise ConfigError(f"{source}:{line_no}: key '{key}' has no value")

        if key_map[key] in LIST_KEYS:
            values[key] = tuple(item.strip() for item in value.split(",") if item.strip())
        else:
            values[key] = value
        lines[key] = line_no

    missing = [key for key in MANDATORY_KEYS if key not in values]
    if missing:
        raise ConfigError(f"{source}: missing mandatory key(s): {', '.join(missing)}")

    settings = get_settings()
    for name in RunConfig.model_fields:
        key = _file_key(name)
        if key not in values and hasattr(settings, name):
            values[key] = getattr(settings, name)

    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        problems = []
        for error in e.errors():
            key = str(error["loc"][0]) if error["loc"] else "?"
            where = f"line {lines[key]}" if key in lines else "default"
            problems.append(f"'{key}' ({where}): {error['msg']}")
        raise ConfigError(f"{source}: invalid value for " + "; ".join(problems)) from e


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(item)) for item in value)
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_config(cfg: RunConfig) -> str:
    """Write a RunConfig back as a run file that parses to the same config."""
    lines = ["# resolved run configuration"]
    for name in RunConfig.model_fields:
        lines.append(f"{_file_key(name)} = {_render_value(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"
