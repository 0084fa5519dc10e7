"""Chart points, deterministic sample plans and per-point random streams."""

from __future__ import annotations

import dataclasses
import typing

import numpy as np
import numpy.typing as npt
from scipy.stats import qmc

type ChartPoint = npt.NDArray[np.float64]
type Box = npt.NDArray[np.float64]

DEFAULT_POINTS: typing.Final = 20
DEFAULT_TRIALS: typing.Final = 50
# Fraction of each half-width trimmed off before sampling.
SHRINK: typing.Final = 0.1


class PointError(Exception): ...


@dataclasses.dataclass(frozen=True)
class SamplePlan:
    points: int = DEFAULT_POINTS
    trials: int = DEFAULT_TRIALS
    seed: int = 0


def as_chart_point(coords: npt.ArrayLike, dimension: int) -> ChartPoint:
    p = np.array(coords, dtype=np.float64).reshape(-1)
    if len(p) != dimension:
        raise PointError(f"point has {len(p)} coordinates, expected {dimension}")
    if not np.all(np.isfinite(p)):
        raise PointError(f"point has non-finite coordinates: {p.tolist()}")
    p.setflags(write=False)
    return p


def check_in_box(p: ChartPoint, domain: Box) -> None:
    if np.any(p < domain[:, 0]) or np.any(p > domain[:, 1]):
        raise PointError(f"point {p.tolist()} lies outside the chart domain")


def shrink_box(domain: Box, shrink: float = SHRINK) -> Box:
    center = 0.5 * (domain[:, 0] + domain[:, 1])
    half = 0.5 * (domain[:, 1] - domain[:, 0]) * (1.0 - shrink)
    return np.stack([center - half, center + half], axis=1)


def sample_points(domain: Box, count: int, shrink: float = SHRINK) -> list[ChartPoint]:
    """Unscrambled Halton points over the shrunk box; identical on every call."""
    if count < 1:
        raise PointError("sample must contain at least one point")
    box = shrink_box(domain, shrink)
    sampler = qmc.Halton(d=len(domain), scramble=False)
    # The first Halton point is the lower corner.
    sampler.fast_forward(1)
    unit = sampler.random(count)
    scaled = qmc.scale(unit, box[:, 0], box[:, 1])
    return [as_chart_point(row, len(domain)) for row in scaled]


def point_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators, one per sample point, so parallel runs match serial ones."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def unit_vectors(
    rng: np.random.Generator, g: npt.NDArray[np.float64], count: int
) -> npt.NDArray[np.float64]:
    """``count`` random vectors, each of unit length in the metric ``g``."""
    v = rng.standard_normal((count, len(g)))
    norms = np.sqrt(np.einsum("ti,ij,tj->t", v, g, v))
    return v / norms[:, None]


def g_norm(g: npt.NDArray[np.float64], v: npt.NDArray[np.float64]) -> float:
    return float(np.sqrt(v @ g @ v))
