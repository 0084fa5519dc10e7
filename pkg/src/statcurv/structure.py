"""Statistical structures (g, ∇): jet evaluation, dual connection, validation.

Index convention, used everywhere in the package:

- ``g[i, j]``, metric derivatives ``first[a, i, j] = ∂_a g_ij`` and
  ``second[a, b, i, j] = ∂_a ∂_b g_ij``;
- ``gamma[k, i, j] = Γ^k_ij`` with ``∇_{∂_i} ∂_j = Γ^k_ij ∂_k``, derivatives
  ``first[a, k, i, j] = ∂_a Γ^k_ij``;
- ``cubic[k, i, j] = C_kij = (∇_k g)_ij``.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import typing

import numpy as np
import numpy.typing as npt
import pydantic
import scipy.linalg

from . import expr as ex
from .jets import eval_jet2
from .sampling import Box, ChartPoint, as_chart_point, check_in_box
from .spec_types import (
    ClosedFormMetricSpec,
    CoefficientConnectionSpec,
    ConformalMetricSpec,
    CubicConnectionSpec,
    FlatConnectionSpec,
    LeviCivitaConnectionSpec,
    ManifoldSpec,
    PotentialMetricSpec,
    SpecError,
)
from .sweep import parallel_map

logger = logging.getLogger(__name__)

type Array = npt.NDArray[np.float64]

DEFAULT_TOLERANCE: typing.Final = 1e-9


class TorsionError(SpecError): ...


class StructureError(Exception):
    """The metric is not positive definite (or not finite) at a point."""


@dataclasses.dataclass(frozen=True, eq=False)
class MetricJet:
    value: Array
    first: Array
    second: Array


@dataclasses.dataclass(frozen=True, eq=False)
class ConnectionJet:
    value: Array
    first: Array


class MetricField(typing.Protocol):
    def jet(self, p: ChartPoint) -> MetricJet: ...


class ConnectionField(typing.Protocol):
    def jet(self, p: ChartPoint) -> ConnectionJet: ...


# Metric fields


@dataclasses.dataclass(frozen=True)
class ExprMetric:
    entries: tuple[tuple[ex.Expr, ...], ...]

    def jet(self, p: ChartPoint) -> MetricJet:
        n = len(self.entries)
        value = np.empty((n, n))
        first = np.empty((n, n, n))
        second = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(i, n):
                jet = eval_jet2(self.entries[i][j], p)
                value[i, j] = value[j, i] = jet.value
                first[:, i, j] = first[:, j, i] = jet.gradient
                second[:, :, i, j] = second[:, :, j, i] = jet.hessian
        return MetricJet(value, first, second)


@dataclasses.dataclass(frozen=True)
class ConformalMetric:
    """g = f δ"""

    factor: ex.Expr
    dimension: int

    def jet(self, p: ChartPoint) -> MetricJet:
        f = eval_jet2(self.factor, p)
        eye = np.eye(self.dimension)
        return MetricJet(
            f.value * eye,
            np.einsum("a,ij->aij", f.gradient, eye),
            np.einsum("ab,ij->abij", f.hessian, eye),
        )


@dataclasses.dataclass(frozen=True)
class ScaledMetric:
    """ḡ = exp(u₁ + u₂ + ...) g for scalar fields u."""

    base: MetricField
    log_factors: tuple[ex.Expr, ...]

    def jet(self, p: ChartPoint) -> MetricJet:
        u = eval_jet2(self.log_factors[0], p)
        for term in self.log_factors[1:]:
            u = u + eval_jet2(term, p)
        s = u.exp()
        g = self.base.jet(p)
        second = (
            np.einsum("ab,ij->abij", s.hessian, g.value)
            + np.einsum("a,bij->abij", s.gradient, g.first)
            + np.einsum("b,aij->abij", s.gradient, g.first)
            + s.value * g.second
        )
        return MetricJet(
            s.value * g.value,
            np.einsum("a,ij->aij", s.gradient, g.value) + s.value * g.first,
            second,
        )


# Connection fields


@dataclasses.dataclass(frozen=True)
class FlatConnection:
    dimension: int

    def jet(self, p: ChartPoint) -> ConnectionJet:
        n = self.dimension
        return ConnectionJet(np.zeros((n, n, n)), np.zeros((n, n, n, n)))


@dataclasses.dataclass(frozen=True)
class ExprConnection:
    # coefficients[k][i][j] is Γ^k_ij, symmetric in i, j as written
    coefficients: tuple[tuple[tuple[ex.Expr, ...], ...], ...]

    def jet(self, p: ChartPoint) -> ConnectionJet:
        n = len(self.coefficients)
        value = np.empty((n, n, n))
        first = np.empty((n, n, n, n))
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    jet = eval_jet2(self.coefficients[k][i][j], p)
                    value[k, i, j] = value[k, j, i] = jet.value
                    first[:, k, i, j] = first[:, k, j, i] = jet.gradient
        return ConnectionJet(value, first)


@dataclasses.dataclass(frozen=True)
class LeviCivitaConnection:
    metric: MetricField

    def jet(self, p: ChartPoint) -> ConnectionJet:
        return levi_civita_jet(self.metric.jet(p))


@dataclasses.dataclass(frozen=True)
class CubicConnection:
    """Γ = Γ^LC - ½ g⁻¹C; Codazzi holds by construction for symmetric C."""

    metric: MetricField
    cubic: tuple[tuple[tuple[ex.Expr, ...], ...], ...]

    def jet(self, p: ChartPoint) -> ConnectionJet:
        m = self.metric.jet(p)
        n = len(self.cubic)
        c = np.empty((n, n, n))
        dc = np.empty((n, n, n, n))
        for k, i, j in itertools.combinations_with_replacement(range(n), 3):
            jet = eval_jet2(self.cubic[k][i][j], p)
            for a, b, d in set(itertools.permutations((k, i, j))):
                c[a, b, d] = jet.value
                dc[:, a, b, d] = jet.gradient
        ginv, dginv = inverse_metric(m)
        lc = levi_civita_jet(m, ginv, dginv)
        return ConnectionJet(
            lc.value - 0.5 * np.einsum("kl,lij->kij", ginv, c),
            lc.first
            - 0.5
            * (
                np.einsum("akl,lij->akij", dginv, c)
                + np.einsum("kl,alij->akij", ginv, dc)
            ),
        )


@dataclasses.dataclass(frozen=True)
class DualConnection:
    metric: MetricField
    base: ConnectionField

    def jet(self, p: ChartPoint) -> ConnectionJet:
        return dual_jet(self.metric.jet(p), self.base.jet(p))


@dataclasses.dataclass(frozen=True)
class ShiftedConnection:
    """Γ̄^k_ij = Γ^k_ij + a (∂_iφ δ^k_j + ∂_jφ δ^k_i) - b g_ij (grad_g χ)^k.

    ``metric`` is the metric of the structure being changed, not the new one.
    """

    metric: MetricField
    base: ConnectionField
    projective: ex.Expr
    projective_weight: float
    gradient: ex.Expr
    gradient_weight: float

    def jet(self, p: ChartPoint) -> ConnectionJet:
        m = self.metric.jet(p)
        base = self.base.jet(p)
        n = len(m.value)
        eye = np.eye(n)
        value = base.value.copy()
        first = base.first.copy()
        if self.projective_weight != 0.0:
            phi = eval_jet2(self.projective, p)
            w = self.projective_weight
            value += w * (
                np.einsum("i,kj->kij", phi.gradient, eye)
                + np.einsum("j,ki->kij", phi.gradient, eye)
            )
            first += w * (
                np.einsum("ai,kj->akij", phi.hessian, eye)
                + np.einsum("aj,ki->akij", phi.hessian, eye)
            )
        if self.gradient_weight != 0.0:
            chi = eval_jet2(self.gradient, p)
            w = self.gradient_weight
            ginv, dginv = inverse_metric(m)
            v = ginv @ chi.gradient
            dv = np.einsum("akl,l->ak", dginv, chi.gradient) + np.einsum(
                "kl,la->ak", ginv, chi.hessian
            )
            value -= w * np.einsum("ij,k->kij", m.value, v)
            first -= w * (
                np.einsum("aij,k->akij", m.first, v)
                + np.einsum("ij,ak->akij", m.value, dv)
            )
        return ConnectionJet(value, first)


# Jet-level formulas


def inverse_metric(m: MetricJet) -> tuple[Array, Array]:
    """g⁻¹ via Cholesky, and its derivatives ∂_a g⁻¹ = -g⁻¹ (∂_a g) g⁻¹."""
    g = m.value
    try:
        factor = scipy.linalg.cho_factor(g, lower=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise StructureError(f"metric is not positive definite: {e}") from e
    ginv = scipy.linalg.cho_solve(factor, np.eye(len(g)))
    ginv = 0.5 * (ginv + ginv.T)
    dginv = -np.einsum("kp,apq,qm->akm", ginv, m.first, ginv)
    return ginv, dginv


def levi_civita_jet(
    m: MetricJet, ginv: Array | None = None, dginv: Array | None = None
) -> ConnectionJet:
    if ginv is None or dginv is None:
        ginv, dginv = inverse_metric(m)
    # Christoffel symbols of the first kind, T[l, i, j] = Γ_lij
    t = (
        np.einsum("ijl->lij", m.first)
        + np.einsum("jil->lij", m.first)
        - m.first
    )
    dt = (
        np.einsum("aijl->alij", m.second)
        + np.einsum("ajil->alij", m.second)
        - m.second
    )
    return ConnectionJet(
        0.5 * np.einsum("kl,lij->kij", ginv, t),
        0.5
        * (np.einsum("akl,lij->akij", dginv, t) + np.einsum("kl,alij->akij", ginv, dt)),
    )


def cubic_tensor(m: MetricJet, c: ConnectionJet) -> Array:
    g = m.value
    return (
        m.first
        - np.einsum("lki,lj->kij", c.value, g)
        - np.einsum("lkj,il->kij", c.value, g)
    )


def dual_jet(m: MetricJet, c: ConnectionJet) -> ConnectionJet:
    """Γ*^l_kj = g^li (∂_k g_ij - Γ^m_ki g_mj), with exact first derivatives."""
    g = m.value
    ginv, dginv = inverse_metric(m)
    a = m.first - np.einsum("mki,mj->kij", c.value, g)
    da = (
        m.second
        - np.einsum("amki,mj->akij", c.first, g)
        - np.einsum("mki,amj->akij", c.value, m.first)
    )
    return ConnectionJet(
        np.einsum("li,kij->lkj", ginv, a),
        np.einsum("ali,kij->alkj", dginv, a) + np.einsum("li,akij->alkj", ginv, da),
    )


# Structures


@dataclasses.dataclass(frozen=True, eq=False)
class StatisticalStructure:
    dimension: int
    domain: Box
    metric: MetricField
    connection: ConnectionField
    # None for composed structures (duals, transforms) that have no spec form.
    spec: ManifoldSpec | None = None
    label: str = ""

    def point(self, coords: npt.ArrayLike) -> ChartPoint:
        p = as_chart_point(coords, self.dimension)
        check_in_box(p, self.domain)
        return p

    def metric_jet(self, p: ChartPoint) -> MetricJet:
        return self.metric.jet(self.point(p))

    def connection_jet(self, p: ChartPoint) -> ConnectionJet:
        return self.connection.jet(self.point(p))

    def dual(self) -> StatisticalStructure:
        return dataclasses.replace(
            self,
            connection=DualConnection(self.metric, self.connection),
            spec=None,
            label=f"{self.label}*",
        )


@dataclasses.dataclass(frozen=True, eq=False)
class PointTensors:
    g: Array
    g_inv: Array
    gamma: Array
    gamma_star: Array
    cubic: Array


def _parse(source: str, n: int, where: str) -> ex.Expr:
    try:
        return ex.parse_expression(source, n)
    except ex.ExprError as e:
        raise SpecError(f"{where}: {e}") from e


def _parse_square(rows: list[list[str]], n: int, where: str) -> list[list[ex.Expr]]:
    return [
        [_parse(source, n, f"{where}[{i}][{j}]") for j, source in enumerate(row)]
        for i, row in enumerate(rows)
    ]


def _parse_cube(
    array: list[list[list[str]]], n: int, where: str
) -> tuple[tuple[tuple[ex.Expr, ...], ...], ...]:
    return tuple(
        tuple(map(tuple, _parse_square(rows, n, f"{where}[{k}]")))
        for k, rows in enumerate(array)
    )


def potential_hessian(potential: ex.Expr, n: int) -> tuple[tuple[ex.Expr, ...], ...]:
    """Second partials of a potential as expressions, shared across (i, j) and (j, i)."""
    firsts = [ex.differentiate(potential, i) for i in range(n)]
    entries: list[list[ex.Expr]] = [[ex.ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            entries[i][j] = entries[j][i] = ex.differentiate(firsts[i], j)
    return tuple(map(tuple, entries))


def build_structure(spec: ManifoldSpec) -> StatisticalStructure:
    n = spec.dimension
    metric: MetricField
    match spec.metric:
        case ClosedFormMetricSpec(components=rows):
            entries = _parse_square(rows, n, "metric.components")
            for i, j in itertools.combinations(range(n), 2):
                if entries[i][j] != entries[j][i]:
                    raise SpecError(
                        f"metric.components is not symmetric at ({i + 1}, {j + 1})"
                    )
            metric = ExprMetric(tuple(map(tuple, entries)))
        case ConformalMetricSpec(factor=source):
            metric = ConformalMetric(_parse(source, n, "metric.factor"), n)
        case PotentialMetricSpec(potential=source):
            potential = _parse(source, n, "metric.potential")
            metric = ExprMetric(potential_hessian(potential, n))

    connection: ConnectionField
    match spec.connection:
        case FlatConnectionSpec():
            connection = FlatConnection(n)
        case LeviCivitaConnectionSpec():
            connection = LeviCivitaConnection(metric)
        case CoefficientConnectionSpec(coefficients=array):
            coefficients = _parse_cube(array, n, "connection.coefficients")
            for k in range(n):
                for i, j in itertools.combinations(range(n), 2):
                    if coefficients[k][i][j] != coefficients[k][j][i]:
                        raise TorsionError(
                            f"torsion: Γ^{k + 1}_{i + 1}{j + 1} differs from "
                            f"Γ^{k + 1}_{j + 1}{i + 1}"
                        )
            connection = ExprConnection(coefficients)
        case CubicConnectionSpec(cubic=array):
            cubic = _parse_cube(array, n, "connection.cubic")
            for k, i, j in itertools.product(range(n), repeat=3):
                if cubic[k][i][j] != cubic[min(k, i, j)][sorted((k, i, j))[1]][max(k, i, j)]:
                    raise SpecError(
                        f"connection.cubic is not totally symmetric at "
                        f"({k + 1}, {i + 1}, {j + 1})"
                    )
            connection = CubicConnection(metric, cubic)

    logger.debug("Built structure %s (n=%d)", spec.name, n)
    return StatisticalStructure(
        dimension=n,
        domain=np.array(spec.domain, dtype=np.float64),
        metric=metric,
        connection=connection,
        spec=spec,
        label=spec.name or "",
    )


def metric_at(s: StatisticalStructure, p: ChartPoint) -> tuple[Array, Array]:
    m = s.metric_jet(p)
    ginv, _ = inverse_metric(m)
    return m.value, ginv


def levi_civita_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    return levi_civita_jet(s.metric_jet(p)).value


def cubic_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    return cubic_tensor(s.metric_jet(p), s.connection_jet(p))


def dual_connection_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    return dual_jet(s.metric_jet(p), s.connection_jet(p)).value


def grad_scalar_at(s: StatisticalStructure, psi: ex.Expr, p: ChartPoint) -> Array:
    """(grad_g ψ)^k = g^kl ∂_l ψ"""
    _, ginv = metric_at(s, p)
    return ginv @ eval_jet2(psi, s.point(p)).gradient


def point_tensors(s: StatisticalStructure, p: ChartPoint) -> PointTensors:
    m = s.metric_jet(p)
    c = s.connection_jet(p)
    ginv, _ = inverse_metric(m)
    return PointTensors(
        g=m.value,
        g_inv=ginv,
        gamma=c.value,
        gamma_star=dual_jet(m, c).value,
        cubic=cubic_tensor(m, c),
    )


def total_symmetry_residual(t: Array) -> float:
    return max(
        float(np.max(np.abs(t - t.transpose(perm))))
        for perm in itertools.permutations(range(3))
    )


def torsion_residual(gamma: Array) -> float:
    return float(np.max(np.abs(gamma - gamma.transpose(0, 2, 1))))


class ValidationReport(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    points: int
    spd: list[bool]
    torsion: float
    codazzi: float
    dual_torsion: float
    duality: float
    tolerance: float
    passed: bool


@dataclasses.dataclass(frozen=True)
class _PointResiduals:
    spd: bool
    torsion: float = 0.0
    codazzi: float = 0.0
    dual_torsion: float = 0.0
    duality: float = 0.0


def _point_residuals(s: StatisticalStructure, p: ChartPoint) -> _PointResiduals:
    try:
        t = point_tensors(s, p)
    except StructureError as e:
        logger.info("Validation failed at %s: %s", p.tolist(), e)
        return _PointResiduals(spd=False)
    reconstructed = np.einsum("lki,lj->kij", t.gamma, t.g) + np.einsum(
        "lkj,il->kij", t.gamma_star, t.g
    )
    dg = s.metric_jet(p).first
    return _PointResiduals(
        spd=True,
        torsion=torsion_residual(t.gamma),
        codazzi=total_symmetry_residual(t.cubic),
        dual_torsion=torsion_residual(t.gamma_star),
        duality=float(np.max(np.abs(dg - reconstructed))),
    )


def validate_structure(
    s: StatisticalStructure,
    sample: list[ChartPoint],
    tol: float = DEFAULT_TOLERANCE,
    threads: int = 1,
) -> ValidationReport:
    logger.info("Validating %s on %d points", s.label or "structure", len(sample))
    rows = parallel_map(lambda p: _point_residuals(s, p), sample, threads)
    torsion = max(r.torsion for r in rows)
    codazzi = max(r.codazzi for r in rows)
    dual_torsion = max(r.dual_torsion for r in rows)
    duality = max(r.duality for r in rows)
    spd = [r.spd for r in rows]
    return ValidationReport(
        points=len(sample),
        spd=spd,
        torsion=torsion,
        codazzi=codazzi,
        dual_torsion=dual_torsion,
        duality=duality,
        tolerance=tol,
        passed=all(spd) and max(torsion, codazzi, dual_torsion, duality) <= tol,
    )
