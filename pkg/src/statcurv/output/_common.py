"""Shared helpers used across output implementations."""

import humanize
import numpy as np
import pydantic

from .. import service


def split_values(
    values: dict[str, pydantic.JsonValue],
) -> tuple[dict[str, pydantic.JsonValue], dict[str, pydantic.JsonValue]]:
    """Separate scalar values from array-valued ones."""
    scalars = {k: v for k, v in values.items() if not isinstance(v, list)}
    arrays = {k: v for k, v in values.items() if isinstance(v, list)}
    return scalars, arrays


def format_number(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{value:.3e}"


def format_array(value: pydantic.JsonValue) -> str:
    return np.array2string(np.asarray(value, dtype=np.float64), precision=6)


def format_wall_time(report: service.RunReport) -> str | None:
    if report.wall_time_seconds is None:
        return None
    return humanize.precisedelta(report.wall_time_seconds, minimum_unit="milliseconds")


def residual_status(residual: service.Residual) -> str:
    if residual.value is None:
        return "skipped"
    return "ok" if residual.passed else "FAIL"
