"""Built-in example structures: space forms, dually flat entries, perturbations."""

from __future__ import annotations

import enum
import itertools
import logging
import math
import re
import typing

import numpy as np
import pydantic

from . import expr as ex
from .conformal_projective import Verdict
from .spec_types import (
    ClosedFormMetricSpec,
    ConformalMetricSpec,
    CubicConnectionSpec,
    FlatConnectionSpec,
    LeviCivitaConnectionSpec,
    ManifoldSpec,
    PotentialMetricSpec,
)
from .structure import potential_hessian

logger = logging.getLogger(__name__)


class GalleryError(Exception): ...


class Family(enum.StrEnum):
    euclidean = "euclidean"
    poincare_ball = "poincare_ball"
    sphere_stereographic = "sphere_stereographic"
    exp_family = "exp_family"
    hessian_potential = "hessian_potential"


class Expectation(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    K: float | None = None
    sigma: float | None = None
    flat_verdict: Verdict | None = None


class GalleryEntry(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    name: str
    family: Family
    spec: ManifoldSpec
    expected: Expectation | None = None


class _Perturbation(typing.NamedTuple):
    base: str
    amplitude: float
    seed: int
    bump: float


# Negative controls used by the test suite; seeds are part of the emitted spec.
PERTURBATIONS: typing.Final = {
    "perturbed_euclidean4": _Perturbation("euclidean4", 0.5, 7, 0.5),
    "perturbed_poincare_ball4": _Perturbation("poincare_ball4", 0.1, 7, 0.0),
}

_NAME_RE = re.compile(rf"^({'|'.join(f.value for f in Family)})(\d+)$")


def default_potential(n: int) -> str:
    coordinates = " + ".join(f"x{i + 1}" for i in range(n))
    return f"0.5 * normsq + 0.25 * exp({coordinates})"


def _box(half_width: float, n: int) -> list[tuple[float, float]]:
    return [(-half_width, half_width)] * n


def _identity_components(n: int) -> list[list[str]]:
    return [["1" if i == j else "0" for j in range(n)] for i in range(n)]


def construct(family: Family, n: int, potential: str | None = None) -> GalleryEntry:
    if n < 2:
        raise GalleryError(f"dimension must be at least 2, got {n}")
    flat_verdict = Verdict.flat if n >= 4 else Verdict.undetermined
    name = f"{family}{n}"
    k: float
    match family:
        case Family.euclidean:
            spec = ManifoldSpec(
                name=name,
                dimension=n,
                domain=_box(1.0, n),
                metric=ClosedFormMetricSpec(components=_identity_components(n)),
                connection=FlatConnectionSpec(),
            )
            k = 0.0
        case Family.poincare_ball:
            spec = ManifoldSpec(
                name=name,
                dimension=n,
                domain=_box(round(0.8 / math.sqrt(n), 6), n),
                metric=ConformalMetricSpec(factor="4 / pow(1 - normsq, 2)"),
                connection=LeviCivitaConnectionSpec(),
            )
            k = -1.0
        case Family.sphere_stereographic:
            spec = ManifoldSpec(
                name=name,
                dimension=n,
                domain=_box(1.0, n),
                metric=ConformalMetricSpec(factor="4 / pow(1 + normsq, 2)"),
                connection=LeviCivitaConnectionSpec(),
            )
            k = 1.0
        case Family.exp_family:
            spec = ManifoldSpec(
                name=name,
                dimension=n,
                domain=_box(1.0, n),
                metric=PotentialMetricSpec(
                    potential=" + ".join(f"exp(x{i + 1})" for i in range(n))
                ),
                connection=FlatConnectionSpec(),
            )
            k = 0.0
        case Family.hessian_potential:
            spec = ManifoldSpec(
                name=name,
                dimension=n,
                domain=_box(0.5, n),
                metric=PotentialMetricSpec(potential=potential or default_potential(n)),
                connection=FlatConnectionSpec(),
            )
            k = 0.0
    return GalleryEntry(
        name=name,
        family=family,
        spec=spec,
        expected=Expectation(K=k, sigma=n * (n - 1) * k, flat_verdict=flat_verdict),
    )


def _parse(source: str, n: int) -> ex.Expr:
    try:
        return ex.parse_expression(source, n)
    except ex.ExprError as e:
        raise GalleryError(str(e)) from e


def _metric_entries(spec: ManifoldSpec) -> list[list[ex.Expr]]:
    n = spec.dimension
    match spec.metric:
        case ClosedFormMetricSpec(components=rows):
            return [[_parse(c, n) for c in row] for row in rows]
        case ConformalMetricSpec(factor=source):
            f = _parse(source, n)
            return [[f if i == j else ex.ZERO for j in range(n)] for i in range(n)]
        case PotentialMetricSpec(potential=source):
            return [list(row) for row in potential_hessian(_parse(source, n), n)]


def _base_cubic(spec: ManifoldSpec) -> dict[tuple[int, int, int], ex.Expr]:
    """C of the base structure on sorted index triples."""
    n = spec.dimension
    triples = list(itertools.combinations_with_replacement(range(n), 3))
    match spec.connection:
        case LeviCivitaConnectionSpec():
            return dict.fromkeys(triples, ex.ZERO)
        case FlatConnectionSpec():
            # Γ = 0, so C_kij = ∂_k g_ij
            g = _metric_entries(spec)
            cubic: dict[tuple[int, int, int], ex.Expr] = {}
            for k, i, j in triples:
                c = ex.differentiate(g[i][j], k)
                for a, b, d in itertools.permutations((k, i, j)):
                    if ex.differentiate(g[b][d], a) != c:
                        raise GalleryError(
                            f"{spec.name}: flat connection is not Codazzi for this metric"
                        )
                cubic[k, i, j] = c
            return cubic
        case CubicConnectionSpec(cubic=array):
            return {(k, i, j): _parse(array[k][i][j], n) for k, i, j in triples}
        case _:
            raise GalleryError(f"{spec.name}: cannot perturb a coefficient connection")


def _random_linear(rng: np.random.Generator, n: int, amplitude: float) -> ex.Expr:
    coefficients = np.round(amplitude * rng.uniform(-1.0, 1.0, size=n + 1), 6)
    poly: ex.Expr = ex.Const(float(coefficients[0]))
    for a in range(n):
        poly = ex.add(poly, ex.mul(ex.Const(float(coefficients[a + 1])), ex.Coord(a)))
    return poly


def _bumped_metric(
    spec: ManifoldSpec, bump: float
) -> ClosedFormMetricSpec | ConformalMetricSpec:
    bump_factor = ex.Call(
        "exp", ex.mul(ex.Const(bump), ex.Call("exp", ex.Neg(ex.NormSq())))
    )
    match spec.metric:
        case ConformalMetricSpec(factor=source):
            return ConformalMetricSpec(
                factor=ex.to_source(ex.mul(bump_factor, _parse(source, spec.dimension)))
            )
        case _:
            return ClosedFormMetricSpec(
                components=[
                    [ex.to_source(ex.mul(bump_factor, c)) for c in row]
                    for row in _metric_entries(spec)
                ]
            )


def perturb(
    entry: GalleryEntry, amplitude: float, seed: int, bump: float = 0.0
) -> GalleryEntry:
    """Add a random symmetric cubic field (and optionally a conformal bump to g).

    The result is Codazzi by construction: the connection is Γ^LC − ½ g⁻¹C with
    C totally symmetric.
    """
    if amplitude < 0.0:
        raise GalleryError(f"amplitude must be non-negative, got {amplitude}")
    if amplitude == 0.0 and bump == 0.0:
        return entry
    spec = entry.spec
    n = spec.dimension
    rng = np.random.default_rng(seed)
    base = _base_cubic(spec)
    cube = [[[""] * n for _ in range(n)] for _ in range(n)]
    for triple, c in base.items():
        total = ex.to_source(ex.add(c, _random_linear(rng, n, amplitude)))
        for k, i, j in itertools.permutations(triple):
            cube[k][i][j] = total
    metric = _bumped_metric(spec, bump) if bump != 0.0 else spec.metric
    name = f"perturbed_{entry.name}"
    logger.debug(
        "Perturbed %s (amplitude=%g, seed=%d, bump=%g)", entry.name, amplitude, seed, bump
    )
    return GalleryEntry(
        name=name,
        family=entry.family,
        spec=ManifoldSpec(
            name=name,
            dimension=n,
            domain=spec.domain,
            metric=metric,
            connection=CubicConnectionSpec(cubic=cube),
            provenance={
                "base": entry.name,
                "amplitude": amplitude,
                "seed": seed,
                "bump": bump,
            },
        ),
    )


def resolve(name: str) -> GalleryEntry:
    if (perturbation := PERTURBATIONS.get(name)) is not None:
        return perturb(
            resolve(perturbation.base),
            perturbation.amplitude,
            perturbation.seed,
            perturbation.bump,
        )
    found = _NAME_RE.match(name)
    if found is None:
        raise GalleryError(f"unknown gallery entry {name!r}")
    return construct(Family(found[1]), int(found[2]))


def list_entries() -> list[GalleryEntry]:
    """Every family at n = 4, then the frozen perturbations."""
    entries = [construct(family, 4) for family in Family]
    entries.extend(resolve(name) for name in PERTURBATIONS)
    return entries
