"""Conformal-projective and α-conformal changes of a statistical structure.

Both changes are one shape of connection shift, so each transform is a
:class:`~statcurv.structure.ShiftedConnection` over a
:class:`~statcurv.structure.ScaledMetric`:

- cp(φ, ψ):  ḡ = e^{φ+ψ} g,  Γ̄ = Γ + (dφ ⊗ δ + δ ⊗ dφ) − g ⊗ grad_g ψ
- α(φ):      ḡ = e^{φ} g,    Γ̄ = Γ + ((1−α)/2)(dφ ⊗ δ + δ ⊗ dφ) − ((1+α)/2) g ⊗ grad_g φ
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import typing

import numpy as np
import pydantic

from . import expr as ex
from .conformal_projective import W_at
from .sampling import ChartPoint
from .spec_types import (
    ClosedFormMetricSpec,
    CoefficientConnectionSpec,
    ConformalMetricSpec,
    FlatConnectionSpec,
    LeviCivitaConnectionSpec,
    ManifoldSpec,
)
from .structure import (
    ScaledMetric,
    ShiftedConnection,
    StatisticalStructure,
)
from .sweep import parallel_map

logger = logging.getLogger(__name__)


class TransformError(Exception): ...


class _BaseModel(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", frozen=True)


class CPParams(_BaseModel):
    kind: typing.Literal["cp"] = "cp"
    phi: str = "0"
    psi: str = "0"


class AlphaParams(_BaseModel):
    kind: typing.Literal["alpha"] = "alpha"
    alpha: float
    phi: str = "0"


TransformParams = typing.Annotated[
    CPParams | AlphaParams, pydantic.Field(discriminator="kind")
]


@dataclasses.dataclass(frozen=True)
class _Shift:
    """Parsed form of either transform."""

    log_factors: tuple[ex.Expr, ...]
    projective: ex.Expr
    projective_weight: float
    gradient: ex.Expr
    gradient_weight: float


def _parse(source: str, n: int, name: str) -> ex.Expr:
    try:
        return ex.parse_expression(source, n)
    except ex.ExprError as e:
        raise TransformError(f"{name}: {e}") from e


def _shift(params: CPParams | AlphaParams, n: int) -> _Shift:
    match params:
        case CPParams(phi=phi_source, psi=psi_source):
            phi = _parse(phi_source, n, "phi")
            psi = _parse(psi_source, n, "psi")
            return _Shift((phi, psi), phi, 1.0, psi, 1.0)
        case AlphaParams(alpha=alpha, phi=phi_source):
            phi = _parse(phi_source, n, "phi")
            return _Shift((phi,), phi, (1.0 - alpha) / 2.0, phi, (1.0 + alpha) / 2.0)


def _apply(
    s: StatisticalStructure, params: CPParams | AlphaParams, suffix: str
) -> StatisticalStructure:
    shift = _shift(params, s.dimension)
    logger.debug("Applying %s to %s", params, s.label)
    return dataclasses.replace(
        s,
        metric=ScaledMetric(s.metric, shift.log_factors),
        connection=ShiftedConnection(
            metric=s.metric,
            base=s.connection,
            projective=shift.projective,
            projective_weight=shift.projective_weight,
            gradient=shift.gradient,
            gradient_weight=shift.gradient_weight,
        ),
        spec=None,
        label=f"{s.label}~{suffix}",
    )


def cp_transform(s: StatisticalStructure, params: CPParams) -> StatisticalStructure:
    return _apply(s, params, "cp")


def alpha_transform(
    s: StatisticalStructure, params: AlphaParams
) -> StatisticalStructure:
    return _apply(s, params, f"alpha({params.alpha:g})")


def apply_transform(
    s: StatisticalStructure, params: CPParams | AlphaParams
) -> StatisticalStructure:
    match params:
        case CPParams():
            return cp_transform(s, params)
        case AlphaParams():
            return alpha_transform(s, params)


def one_conformal_embed(params: AlphaParams) -> CPParams:
    """The cp parameters (0, φ) reproducing a 1-conformal change exactly."""
    if params.alpha != 1.0:
        raise TransformError(
            f"only alpha = 1 embeds into conformal-projective changes, got {params.alpha}"
        )
    return CPParams(phi="0", psi=params.phi)


def compose(first: CPParams, second: CPParams, dimension: int) -> CPParams:
    """cp(φ₁, ψ₁) followed by cp(φ₂, ψ₂) is cp(φ₁ + φ₂, ψ₁ + ψ₂)."""

    def total(a: str, b: str, name: str) -> str:
        return ex.to_source(
            ex.add(_parse(a, dimension, name), _parse(b, dimension, name))
        )

    return CPParams(
        phi=total(first.phi, second.phi, "phi"),
        psi=total(first.psi, second.psi, "psi"),
    )


def transform_fingerprint(
    base: StatisticalStructure, params: CPParams | AlphaParams
) -> str:
    base_json = base.spec.model_dump_json() if base.spec is not None else base.label
    digest = hashlib.sha256((base_json + params.model_dump_json()).encode())
    return digest.hexdigest()[:16]


def w_change(
    s: StatisticalStructure,
    transformed: StatisticalStructure,
    sample: list[ChartPoint],
    threads: int = 1,
) -> float:
    """max |W̄ − W| over the sample; measured only, nothing is claimed about it."""
    return max(
        parallel_map(
            lambda p: float(np.max(np.abs(W_at(transformed, p) - W_at(s, p)))),
            sample,
            threads,
        )
    )


# Spec emission. Only g = f·δ bases have closed-form transformed coefficients:
# there g_ij (grad_g χ)^k = δ_ij ∂_k χ, with no inverse metric left over.


def _conformal_factor(spec: ManifoldSpec) -> ex.Expr | None:
    n = spec.dimension
    match spec.metric:
        case ConformalMetricSpec(factor=source):
            return _parse(source, n, "metric.factor")
        case ClosedFormMetricSpec(components=rows):
            entries = [[_parse(c, n, "metric.components") for c in row] for row in rows]
            diagonal = entries[0][0]
            if all(
                entries[i][j] == (diagonal if i == j else ex.ZERO)
                for i in range(n)
                for j in range(n)
            ):
                return diagonal
    return None


type _Cube = list[list[list[ex.Expr]]]


def _shifted(
    base: _Cube,
    n: int,
    projective: ex.Expr,
    projective_weight: float,
    gradient: ex.Expr,
    gradient_weight: float,
) -> _Cube:
    def weighted(weight: float, e: ex.Expr) -> ex.Expr:
        return ex.mul(ex.Const(weight), e) if weight != 0.0 else ex.ZERO

    d_proj = [
        weighted(projective_weight, ex.differentiate(projective, i)) for i in range(n)
    ]
    d_grad = [
        weighted(gradient_weight, ex.differentiate(gradient, k)) for k in range(n)
    ]
    out: _Cube = [[[ex.ZERO] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                term = base[k][i][j]
                term = ex.add(term, d_proj[i] if k == j else ex.ZERO)
                term = ex.add(term, d_proj[j] if k == i else ex.ZERO)
                term = ex.sub(term, d_grad[k] if i == j else ex.ZERO)
                out[k][i][j] = out[k][j][i] = term
    return out


def to_spec(base: StatisticalStructure, params: CPParams | AlphaParams) -> ManifoldSpec:
    """The transformed structure as a spec file, when it has a closed form."""
    spec = base.spec
    if spec is None:
        raise TransformError("structure has no spec form (it is itself composed)")
    n = spec.dimension
    factor = _conformal_factor(spec)
    if factor is None:
        raise TransformError("only conformal (f·δ) metrics can be re-emitted")

    base_coefficients: _Cube
    match spec.connection:
        case FlatConnectionSpec():
            base_coefficients = [[[ex.ZERO] * n for _ in range(n)] for _ in range(n)]
        case CoefficientConnectionSpec(coefficients=array):
            base_coefficients = [
                [[_parse(c, n, "connection.coefficients") for c in row] for row in rows]
                for rows in array
            ]
        case LeviCivitaConnectionSpec():
            # Levi-Civita of f·δ is the same shift of the flat connection with
            # both weights ½ and χ = log f.
            flat = [[[ex.ZERO] * n for _ in range(n)] for _ in range(n)]
            log_f = ex.Call("log", factor)
            base_coefficients = _shifted(flat, n, log_f, 0.5, log_f, 0.5)
        case _:
            raise TransformError(
                f"connection kind {spec.connection.kind!r} cannot be re-emitted"
            )

    shift = _shift(params, n)
    log_factor = shift.log_factors[0]
    for term in shift.log_factors[1:]:
        log_factor = ex.add(log_factor, term)
    coefficients = _shifted(
        base_coefficients,
        n,
        shift.projective,
        shift.projective_weight,
        shift.gradient,
        shift.gradient_weight,
    )
    provenance: dict[str, str | int | float] = {
        "base": spec.name or "",
        "base_fingerprint": spec.fingerprint(),
        "transform": params.kind,
        "phi": params.phi,
    }
    match params:
        case CPParams(psi=psi):
            provenance["psi"] = psi
        case AlphaParams(alpha=alpha):
            provenance["alpha"] = alpha
    return ManifoldSpec(
        name=f"{spec.name or 'structure'}-{params.kind}",
        dimension=n,
        domain=spec.domain,
        metric=ConformalMetricSpec(
            factor=ex.to_source(ex.mul(ex.Call("exp", log_factor), factor))
        ),
        connection=CoefficientConnectionSpec(
            coefficients=[
                [[ex.to_source(c) for c in row] for row in rows] for rows in coefficients
            ]
        ),
        provenance=provenance,
    )
