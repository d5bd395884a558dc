"""Runtime settings and run-spec loading helpers."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from functools import lru_cache
import os
from pathlib import Path
import sys
from typing import Any

from pydantic import ValidationError

from rdal.core.errors import ConfigError
from rdal.schemas.config import PRESETS
from rdal.schemas.config import RunSpec
from rdal.schemas.error import ErrorDetail

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib

DEFAULT_CACHE_DIR = Path("~/.cache/rdal")
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_DEVICE = "cpu"
DEFAULT_NUM_THREADS = 1


def _get_int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    return int(raw)


def _get_path_env(name: str, default: Path) -> Path:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default.expanduser()
    return Path(raw).expanduser()


@dataclass(frozen=True)
class RuntimeSettings:
    """Process-wide settings that do not belong to an experiment config."""

    cache_dir: Path
    log_level: str
    device: str
    num_threads: int

    def safe_for_logging(self) -> dict[str, str | int]:
        """Return settings as plain values for log lines."""
        return {
            "cache_dir": str(self.cache_dir),
            "log_level": self.log_level,
            "device": self.device,
            "num_threads": self.num_threads,
        }


@lru_cache(maxsize=1)
def get_runtime_settings() -> RuntimeSettings:
    """Load runtime settings from the environment."""
    return RuntimeSettings(
        cache_dir=_get_path_env("RDAL_CACHE_DIR", DEFAULT_CACHE_DIR),
        log_level=os.getenv("RDAL_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        device=os.getenv("RDAL_DEVICE", DEFAULT_DEVICE),
        num_threads=_get_int_env("RDAL_NUM_THREADS", DEFAULT_NUM_THREADS),
    )


def _deep_merge(base: dict[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def _format_location(location: tuple[Any, ...] | list[Any] | Any) -> str:
    if not isinstance(location, (tuple, list)):
        return str(location)
    if not location:
        return "config"
    return ".".join(str(part) for part in location)


def _validation_details(exc: ValidationError) -> list[ErrorDetail]:
    details: list[ErrorDetail] = []
    for issue in exc.errors():
        field = _format_location(issue.get("loc", ()))
        message = str(issue.get("msg", "Invalid value"))
        details.append(ErrorDetail(field=field, issue=message))
    return details


def build_run_spec(raw: Mapping[str, Any], *, overrides: Mapping[str, Any] | None = None) -> RunSpec:
    """Validate a raw mapping (optionally naming a preset) into a run spec."""
    document = dict(raw)
    preset_name = str(document.pop("preset", "full"))
    if preset_name not in PRESETS:
        raise ConfigError(
            "Unknown preset",
            details=[ErrorDetail(field="preset", issue=f"expected one of {sorted(PRESETS)}")],
        )

    merged = _deep_merge(PRESETS[preset_name], document)
    if overrides:
        merged = _deep_merge(merged, overrides)

    try:
        return RunSpec.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError("Configuration validation failed", details=_validation_details(exc)) from exc


def load_run_spec(path: Path | None, *, overrides: Mapping[str, Any] | None = None) -> RunSpec:
    """Load a TOML run spec; ``None`` yields the full-scale defaults plus overrides."""
    if path is None:
        return build_run_spec({}, overrides=overrides)

    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config file is not valid TOML: {path}: {exc}") from exc

    return build_run_spec(raw, overrides=overrides)
