"""Conformal-projective curvature W, its dual W*, and the flatness decision.

With X = ∂_i, Y = ∂_j, Z = ∂_k the production form is

    W(X,Y)Z = R(X,Y)Z + Y L(X,Z) − X L(Y,Z) + L*♯(Y) g(X,Z) − L*♯(X) g(Y,Z)

and :func:`W_direct_at` assembles the defining Ricci/scalar form term by term
as a cross-check.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import typing

import numpy as np
import pydantic

from .curvature import (
    CurvatureBundle,
    Side,
    curvature_bundle,
    lowered_pairing,
    sharp,
)
from .sampling import (
    DEFAULT_POINTS,
    DEFAULT_TRIALS,
    ChartPoint,
    sample_points,
    unit_vectors,
)
from .structure import Array, StatisticalStructure, metric_at
from .sweep import seeded_sweep

logger = logging.getLogger(__name__)

DEFAULT_FLATNESS_TOLERANCE: typing.Final = 1e-8


class DimensionError(Exception): ...


class Verdict(enum.StrEnum):
    flat = "flat"
    not_flat = "not_flat"
    undetermined = "undetermined"


@dataclasses.dataclass(frozen=True, eq=False)
class CPTensors:
    L: Array
    L_star: Array
    L_sharp: Array
    L_star_sharp: Array
    W: Array
    W_star: Array


class FlatnessReport(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    max_residual: float | None
    samples: int
    trials: int
    verdict: Verdict
    tolerance: float


def _require_dimension(n: int, minimum: int = 3) -> None:
    if n < minimum:
        raise DimensionError(f"dimension {n} is not supported here (need n >= {minimum})")


def _l_pair(b: CurvatureBundle) -> tuple[Array, Array]:
    n = len(b.g)
    scale = 1.0 / (n - 2)
    lam = 1.0 / (2 * (n - 1))
    l_primal = scale * (((n - 1) * b.ricci + b.ricci_star) / n - lam * b.sigma * b.g)
    l_dual = scale * (((n - 1) * b.ricci_star + b.ricci) / n - lam * b.sigma_star * b.g)
    return l_primal, l_dual


def _assemble(r: Array, l: Array, l_other_sharp: Array, g: Array) -> Array:
    # B[l,k,i,j] = δ^l_j L_ik + (L'♯)^l_j g_ik; W = R + B − B with i, j swapped
    eye = np.eye(len(g))
    b = np.einsum("lj,ik->lkij", eye, l) + np.einsum("lj,ik->lkij", l_other_sharp, g)
    return r + (b - b.transpose(0, 1, 3, 2))


def _cp_from_bundle(b: CurvatureBundle) -> CPTensors:
    l_primal, l_dual = _l_pair(b)
    l_sharp = sharp(b.g_inv, l_primal)
    l_star_sharp = sharp(b.g_inv, l_dual)
    return CPTensors(
        L=l_primal,
        L_star=l_dual,
        L_sharp=l_sharp,
        L_star_sharp=l_star_sharp,
        W=_assemble(b.riemann, l_primal, l_star_sharp, b.g),
        W_star=_assemble(b.riemann_star, l_dual, l_sharp, b.g),
    )


def cp_tensors(s: StatisticalStructure, p: ChartPoint) -> CPTensors:
    _require_dimension(s.dimension)
    return _cp_from_bundle(curvature_bundle(s, p))


def L_at(
    s: StatisticalStructure, p: ChartPoint, which: Side = Side.primal
) -> Array:
    _require_dimension(s.dimension)
    l_primal, l_dual = _l_pair(curvature_bundle(s, p))
    return l_primal if which == Side.primal else l_dual


def sharp_at(s: StatisticalStructure, p: ChartPoint, bilinear: Array) -> Array:
    _, g_inv = metric_at(s, p)
    return sharp(g_inv, np.asarray(bilinear, dtype=np.float64))


def W_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    return cp_tensors(s, p).W


def W_direct_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    _require_dimension(s.dimension)
    b = curvature_bundle(s, p)
    n = s.dimension
    g = b.g
    eye = np.eye(n)
    m = (n - 1) * b.ricci + b.ricci_star
    op = (n - 1) * b.ricci_star_op + b.ricci_op
    bracket = (
        np.einsum("lj,ik->lkij", eye, m)
        - np.einsum("li,jk->lkij", eye, m)
        + np.einsum("lj,ik->lkij", op, g)
        - np.einsum("li,jk->lkij", op, g)
    )
    scalar_term = np.einsum("li,jk->lkij", eye, g) - np.einsum("lj,ik->lkij", eye, g)
    return (
        b.riemann
        + bracket / (n * (n - 2))
        + b.sigma / ((n - 1) * (n - 2)) * scalar_term
    )


def weyl_self_dual_at(s: StatisticalStructure, p: ChartPoint) -> Array:
    """Riemannian Weyl-type combination from Ric and σ alone (exact only when C = 0)."""
    _require_dimension(s.dimension)
    b = curvature_bundle(s, p)
    n = s.dimension
    schouten = (b.ricci - b.sigma / (2 * (n - 1)) * b.g) / (n - 2)
    return _assemble(b.riemann, schouten, sharp(b.g_inv, schouten), b.g)


def forms_gap(s: StatisticalStructure, p: ChartPoint) -> float:
    return float(np.max(np.abs(W_at(s, p) - W_direct_at(s, p))))


def cp_duality_residual(
    s: StatisticalStructure,
    p: ChartPoint,
    trials: int,
    rng_seed: int | np.random.Generator,
) -> float:
    """max |g(W(X,Y)Z,U) + g(W*(X,Y)U,Z)| over random g-unit vectors."""
    _require_dimension(s.dimension)
    rng = np.random.default_rng(rng_seed)
    b = curvature_bundle(s, p)
    t = _cp_from_bundle(b)
    x, y, z, u = (unit_vectors(rng, b.g, trials) for _ in range(4))
    total = lowered_pairing(t.W, b.g, x, y, z, u) + lowered_pairing(
        t.W_star, b.g, x, y, u, z
    )
    return float(np.max(np.abs(total)))


def _flatness_at(
    s: StatisticalStructure, p: ChartPoint, rng: np.random.Generator, trials: int
) -> float:
    b = curvature_bundle(s, p)
    w = _cp_from_bundle(b).W
    x, y, z, u = (unit_vectors(rng, b.g, trials) for _ in range(4))
    # Unit g-norms make this the residual normalized by |X||Y||Z||U|.
    return float(np.max(np.abs(lowered_pairing(w, b.g, x, y, z, u))))


def flatness_report(
    s: StatisticalStructure,
    points: int = DEFAULT_POINTS,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_FLATNESS_TOLERANCE,
    rng_seed: int = 0,
    threads: int = 1,
) -> FlatnessReport:
    n = s.dimension
    if n < 3:
        logger.info("W is undefined for n=%d; flatness undetermined", n)
        return FlatnessReport(
            max_residual=None,
            samples=0,
            trials=trials,
            verdict=Verdict.undetermined,
            tolerance=tol,
        )
    sample = sample_points(s.domain, points)
    logger.info(
        "Flatness sweep of %s: %d points x %d trials",
        s.label or "structure",
        points,
        trials,
    )
    residual = max(
        seeded_sweep(
            lambda p, rng: _flatness_at(s, p, rng, trials), sample, rng_seed, threads
        )
    )
    if n < 4:
        verdict = Verdict.undetermined
    elif residual <= tol:
        verdict = Verdict.flat
    else:
        verdict = Verdict.not_flat
    return FlatnessReport(
        max_residual=residual,
        samples=len(sample),
        trials=trials,
        verdict=verdict,
        tolerance=tol,
    )
