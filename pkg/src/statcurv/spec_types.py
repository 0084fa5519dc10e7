"""Declarative spec-file schema (canonical encoding: JSON)."""

from __future__ import annotations

import hashlib
import typing
from pathlib import Path

import pydantic


class SpecError(Exception): ...


class _BaseModel(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", frozen=True)


class ClosedFormMetricSpec(_BaseModel):
    kind: typing.Literal["closed_form"] = "closed_form"
    components: list[list[str]]


class ConformalMetricSpec(_BaseModel):
    """g = factor * identity"""

    kind: typing.Literal["conformal"] = "conformal"
    factor: str


class PotentialMetricSpec(_BaseModel):
    """g = Hess(potential)"""

    kind: typing.Literal["potential"] = "potential"
    potential: str


MetricSpec = typing.Annotated[
    ClosedFormMetricSpec | ConformalMetricSpec | PotentialMetricSpec,
    pydantic.Field(discriminator="kind"),
]


class FlatConnectionSpec(_BaseModel):
    kind: typing.Literal["flat"] = "flat"


class LeviCivitaConnectionSpec(_BaseModel):
    kind: typing.Literal["levi_civita"] = "levi_civita"


class CoefficientConnectionSpec(_BaseModel):
    # coefficients[k][i][j] is Γ^k_ij
    kind: typing.Literal["coefficients"] = "coefficients"
    coefficients: list[list[list[str]]]


class CubicConnectionSpec(_BaseModel):
    """Γ = Γ^LC - ½ g⁻¹C for a totally symmetric cubic[k][i][j] = C_kij."""

    kind: typing.Literal["cubic"] = "cubic"
    cubic: list[list[list[str]]]


ConnectionSpec = typing.Annotated[
    FlatConnectionSpec
    | LeviCivitaConnectionSpec
    | CoefficientConnectionSpec
    | CubicConnectionSpec,
    pydantic.Field(discriminator="kind"),
]


class ManifoldSpec(_BaseModel):
    name: str | None = None
    dimension: int = pydantic.Field(ge=2)
    domain: list[tuple[float, float]]
    metric: MetricSpec
    connection: ConnectionSpec
    # Seeds, amplitudes and bases of generated entries.
    provenance: dict[str, str | int | float] | None = None

    @pydantic.model_validator(mode="after")
    def _check_shapes(self) -> ManifoldSpec:
        n = self.dimension
        if len(self.domain) != n:
            raise ValueError(f"domain has {len(self.domain)} axes, expected {n}")
        for axis, (lo, hi) in enumerate(self.domain):
            if not lo < hi:
                raise ValueError(f"domain axis {axis + 1} is degenerate: [{lo}, {hi}]")
        if isinstance(self.metric, ClosedFormMetricSpec):
            _check_square(self.metric.components, n, "metric.components")
        match self.connection:
            case CoefficientConnectionSpec(coefficients=array):
                _check_cube(array, n, "connection.coefficients")
            case CubicConnectionSpec(cubic=array):
                _check_cube(array, n, "connection.cubic")
        return self

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()[:16]


def _check_square(rows: list[list[str]], n: int, where: str) -> None:
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"{where} must be {n}x{n}")


def _check_cube(array: list[list[list[str]]], n: int, where: str) -> None:
    if len(array) != n:
        raise ValueError(f"{where} must be {n}x{n}x{n}")
    for k, rows in enumerate(array):
        _check_square(rows, n, f"{where}[{k}]")


def load_spec(path: Path) -> ManifoldSpec:
    try:
        return ManifoldSpec.model_validate_json(path.read_text())
    except pydantic.ValidationError as e:
        raise SpecError(f"{path}: {e}") from e
    except OSError as e:
        raise SpecError(f"{path}: {e.strerror}") from e


def dump_spec(spec: ManifoldSpec) -> str:
    return spec.model_dump_json(indent=2, exclude_none=True)
