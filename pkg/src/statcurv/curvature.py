"""Curvature of ∇ and ∇*: Riemann, Ricci, Ricci operators, scalar curvature.

Conventions: ``riemann[l, k, i, j] = R^l_kij`` with
R(∂_i, ∂_j)∂_k = R^l_kij ∂_l and R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z.
Ric(Y, Z) = tr{X ↦ R(X,Y)Z}, so ``ricci[j, k] = R^i_kij``; it is not assumed
symmetric.
"""

from __future__ import annotations

import dataclasses
import enum
import logging

import numpy as np
import pydantic

from .sampling import ChartPoint, unit_vectors
from .structure import (
    Array,
    ConnectionJet,
    StatisticalStructure,
    dual_jet,
    inverse_metric,
)
from .sweep import parallel_map

logger = logging.getLogger(__name__)


class Side(enum.StrEnum):
    primal = "primal"
    dual = "dual"


@dataclasses.dataclass(frozen=True, eq=False)
class CurvatureBundle:
    g: Array
    g_inv: Array
    riemann: Array
    riemann_star: Array
    ricci: Array
    ricci_star: Array
    ricci_op: Array
    ricci_star_op: Array
    sigma: float
    sigma_star: float


class ConstantCurvatureFit(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    K: float
    residual: float = pydantic.Field(ge=0.0)
    points: int


def riemann_from_jet(c: ConnectionJet) -> Array:
    # a[l,k,i,j] = ∂_i Γ^l_jk + Γ^l_im Γ^m_jk; R is its antisymmetric part in (i, j)
    a = np.einsum("iljk->lkij", c.first) + np.einsum("lim,mjk->lkij", c.value, c.value)
    return a - a.transpose(0, 1, 3, 2)


def ricci_from_riemann(r: Array) -> Array:
    return np.einsum("ikij->jk", r)


def sharp(g_inv: Array, bilinear: Array) -> Array:
    """The endomorphism B♯ with g(B♯X, Y) = B(X, Y); B need not be symmetric."""
    return g_inv @ bilinear.T


def scalar_from(g_inv: Array, ricci: Array) -> float:
    return float(np.einsum("jk,jk", g_inv, ricci))


def lowered_pairing(
    r: Array, g: Array, x: Array, y: Array, z: Array, u: Array
) -> Array:
    """g(R(X,Y)Z, U) for batches of vectors (one row per trial)."""
    return np.einsum("lkij,lm,ti,tj,tk,tm->t", r, g, x, y, z, u)


def _connection_jet(s: StatisticalStructure, p: ChartPoint, which: Side) -> ConnectionJet:
    match which:
        case Side.primal:
            return s.connection_jet(p)
        case Side.dual:
            return dual_jet(s.metric_jet(p), s.connection_jet(p))


def riemann_at(
    s: StatisticalStructure, p: ChartPoint, which: Side = Side.primal
) -> Array:
    return riemann_from_jet(_connection_jet(s, p, which))


def ricci_at(s: StatisticalStructure, p: ChartPoint, which: Side = Side.primal) -> Array:
    return ricci_from_riemann(riemann_at(s, p, which))


def ricci_operator_at(
    s: StatisticalStructure, p: ChartPoint, which: Side = Side.primal
) -> Array:
    g_inv, _ = inverse_metric(s.metric_jet(p))
    return sharp(g_inv, ricci_at(s, p, which))


def scalar_at(s: StatisticalStructure, p: ChartPoint, which: Side = Side.primal) -> float:
    g_inv, _ = inverse_metric(s.metric_jet(p))
    return scalar_from(g_inv, ricci_at(s, p, which))


def curvature_bundle(s: StatisticalStructure, p: ChartPoint) -> CurvatureBundle:
    """Both sides at once, sharing the metric and connection jets."""
    m = s.metric_jet(p)
    c = s.connection_jet(p)
    g_inv, _ = inverse_metric(m)
    riemann = riemann_from_jet(c)
    riemann_star = riemann_from_jet(dual_jet(m, c))
    ricci = ricci_from_riemann(riemann)
    ricci_star = ricci_from_riemann(riemann_star)
    return CurvatureBundle(
        g=m.value,
        g_inv=g_inv,
        riemann=riemann,
        riemann_star=riemann_star,
        ricci=ricci,
        ricci_star=ricci_star,
        ricci_op=sharp(g_inv, ricci),
        ricci_star_op=sharp(g_inv, ricci_star),
        sigma=scalar_from(g_inv, ricci),
        sigma_star=scalar_from(g_inv, ricci_star),
    )


def sigma_duality_residual(
    s: StatisticalStructure, sample: list[ChartPoint], threads: int = 1
) -> float:
    """max |σ − σ*| / (1 + |σ|) over the sample."""

    def one(p: ChartPoint) -> float:
        b = curvature_bundle(s, p)
        return abs(b.sigma - b.sigma_star) / (1.0 + abs(b.sigma))

    return max(parallel_map(one, sample, threads))


def dual_curvature_residual(
    s: StatisticalStructure,
    p: ChartPoint,
    trials: int,
    rng_seed: int | np.random.Generator,
) -> float:
    """max |g(R(X,Y)Z,U) + g(R*(X,Y)U,Z)| over random g-unit X, Y, Z, U."""
    rng = np.random.default_rng(rng_seed)
    b = curvature_bundle(s, p)
    x, y, z, u = (unit_vectors(rng, b.g, trials) for _ in range(4))
    total = lowered_pairing(b.riemann, b.g, x, y, z, u) + lowered_pairing(
        b.riemann_star, b.g, x, y, u, z
    )
    return float(np.max(np.abs(total)))


def constant_curvature_pattern(g: Array) -> Array:
    """P[l,k,i,j] = g_jk δ^l_i − g_ik δ^l_j.

    R = K·P means R(X,Y)Z = K{g(Y,Z)X − g(X,Z)Y}.
    """
    eye = np.eye(len(g))
    return np.einsum("jk,li->lkij", g, eye) - np.einsum("ik,lj->lkij", g, eye)


def constant_curvature_fit(
    s: StatisticalStructure, sample: list[ChartPoint], threads: int = 1
) -> ConstantCurvatureFit:
    """Least-squares K over the whole sample, and the worst deviation from it."""

    def one(p: ChartPoint) -> tuple[Array, Array]:
        return riemann_at(s, p), constant_curvature_pattern(s.metric_jet(p).value)

    pairs = parallel_map(one, sample, threads)
    numerator = sum(float(np.sum(r * pattern)) for r, pattern in pairs)
    denominator = sum(float(np.sum(pattern * pattern)) for _, pattern in pairs)
    k = numerator / denominator
    residual = max(float(np.max(np.abs(r - k * pattern))) for r, pattern in pairs)
    logger.info("Constant-curvature fit: K=%.6g residual=%.3g", k, residual)
    return ConstantCurvatureFit(K=k, residual=residual, points=len(sample))
