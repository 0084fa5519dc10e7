"""Layered settings: CLI flags, STATCURV_* env vars, project and home .statcurv.toml."""

from __future__ import annotations

import functools
import os
import tomllib
import typing
from pathlib import Path

import pydantic

CONFIG_FILE_NAME: typing.Final = ".statcurv.toml"


class ConfigError(Exception): ...


def _get_home_config_file() -> Path | None:
    """~/.statcurv.toml, if present."""
    home_config = Path.home() / CONFIG_FILE_NAME
    if home_config.exists():
        return home_config
    return None


@functools.cache
def _get_home_config() -> dict | None:
    if home_config_path := _get_home_config_file():
        return _read_toml(home_config_path)
    return None


def _get_project_config_file() -> Path | None:
    """Search upward from cwd for .statcurv.toml, stopping at git root."""
    current = Path.cwd()
    for directory in [current, *current.parents]:
        config_path = directory / CONFIG_FILE_NAME
        if config_path.exists():
            return config_path
        # never look above the repository
        if (directory / ".git").exists():
            break
    return None


@functools.cache
def _get_project_config() -> dict | None:
    if project_config_path := _get_project_config_file():
        return _read_toml(project_config_path)
    return None


def _read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


class _PartialConfig(typing.TypedDict, total=False):
    threads: object
    seed: object
    points: object
    trials: object
    tolerance: object
    identity_tolerance: object
    flatness_tolerance: object


_ENV_VARS: typing.Final = {
    "threads": "STATCURV_THREADS",
    "seed": "STATCURV_SEED",
    "points": "STATCURV_POINTS",
    "trials": "STATCURV_TRIALS",
}


def _load_config(
    **flags_: typing.Unpack[_PartialConfig],
) -> dict[str, object]:
    """
    Collect raw setting values from every source, first hit wins.

    Priority: CLI flags > env vars > project config > home config

    Unset keys are left out, so the Settings defaults apply.
    """
    home_config = _get_home_config() or {}
    project_config = _get_project_config() or {}

    # project file shadows the home file key by key
    file_config = {**home_config, **project_config}

    config: dict[str, object] = {}
    for key in Settings.model_fields:
        # seed=0 is a real value, so test for None rather than truthiness
        value = flags_.get(key)
        if value is None and (env_var := _ENV_VARS.get(key)):
            value = os.environ.get(env_var)
        if value is None:
            value = file_config.get(key)
        if value is not None:
            config[key] = value
    return config


class Settings(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="ignore", frozen=True)

    threads: int = pydantic.Field(default=1, ge=1)
    seed: int = pydantic.Field(default=0, ge=0)
    points: int = pydantic.Field(default=20, ge=1)
    trials: int = pydantic.Field(default=50, ge=1)
    tolerance: float = pydantic.Field(default=1e-9, gt=0.0)
    identity_tolerance: float = pydantic.Field(default=1e-9, gt=0.0)
    flatness_tolerance: float = pydantic.Field(default=1e-8, gt=0.0)


def get_settings(**flags_: typing.Unpack[_PartialConfig]) -> Settings:
    config = _load_config(**flags_)
    try:
        return Settings.model_validate(config)
    except pydantic.ValidationError as e:
        raise ConfigError(str(e)) from e
