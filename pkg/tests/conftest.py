from __future__ import annotations

from pathlib import Path

import numpy as np

from statcurv import gallery, structure
from statcurv.spec_types import ManifoldSpec

SPECS_DIR = Path(__file__).parent.parent / "specs"

ORIGIN4 = np.zeros(4)


def make_spec(**overrides) -> ManifoldSpec:
    """A flat 2-dimensional Euclidean spec; overrides replace whole top-level fields."""
    defaults = dict(
        name="test",
        dimension=2,
        domain=[[-1.0, 1.0], [-1.0, 1.0]],
        metric=dict(kind="closed_form", components=[["1", "0"], ["0", "1"]]),
        connection=dict(kind="flat"),
    )
    return ManifoldSpec.model_validate(defaults | overrides)


def make_structure(**overrides) -> structure.StatisticalStructure:
    return structure.build_structure(make_spec(**overrides))


def make_gallery_structure(name: str) -> structure.StatisticalStructure:
    return structure.build_structure(gallery.resolve(name).spec)


def point(*coords: float) -> np.ndarray:
    return np.array(coords, dtype=np.float64)


def non_codazzi_structure() -> structure.StatisticalStructure:
    """g = δ with Γ^1_12 = Γ^1_21 = 1: torsion-free, but C_211 = -2 while C_121 = -1."""
    return make_structure(
        connection=dict(
            kind="coefficients",
            coefficients=[[["0", "1"], ["1", "0"]], [["0", "0"], ["0", "0"]]],
        ),
    )


# (base, amplitude, seed, bump) for Codazzi perturbations beyond the frozen gallery ones
SEEDED_PERTURBATIONS = [
    ("euclidean4", 0.5, 0, 0.5),
    ("poincare_ball4", 0.1, 1, 0.0),
    ("sphere_stereographic4", 0.2, 2, 0.2),
    ("exp_family4", 0.3, 3, 0.2),
    ("hessian_potential4", 0.2, 4, 0.3),
]
