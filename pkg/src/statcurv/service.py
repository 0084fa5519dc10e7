from __future__ import annotations

import dataclasses
import logging
import typing
from pathlib import Path

import numpy as np
import pydantic

from . import conformal_projective as cp
from . import curvature, equivalence, gallery, structure
from .config import Settings
from .sampling import SamplePlan, sample_points
from .spec_types import ManifoldSpec, dump_spec, load_spec
from .sweep import parallel_map, seeded_sweep

logger = logging.getLogger(__name__)

GALLERY_PREFIX: typing.Final = "gallery:"
# Both transform routes evaluate the same float operations, so they agree exactly.
EMBEDDING_TOLERANCE: typing.Final = 1e-12


class AppError(Exception):
    pass


class _BaseModel(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="ignore", frozen=True)


class Residual(_BaseModel):
    # None when the check does not apply (e.g. W for n < 3)
    value: float | None
    tolerance: float
    passed: bool


class RunReport(_BaseModel):
    command: list[str] = []
    spec: str
    fingerprint: str
    seed: int
    plan: SamplePlan
    residuals: dict[str, Residual] = {}
    verdicts: dict[str, str] = {}
    values: dict[str, pydantic.JsonValue] = {}
    notes: list[str] = []
    passed: bool
    wall_time_seconds: float | None = None


class GalleryListing(_BaseModel):
    name: str
    family: gallery.Family
    dimension: int
    expected: gallery.Expectation | None


def _residual(value: float | None, tolerance: float) -> Residual:
    return Residual(
        value=value,
        tolerance=tolerance,
        passed=value is None or value <= tolerance,
    )


def _validation_residuals(result: structure.ValidationReport) -> dict[str, Residual]:
    tol = result.tolerance
    return {
        "torsion": _residual(result.torsion, tol),
        "codazzi": _residual(result.codazzi, tol),
        "dual_torsion": _residual(result.dual_torsion, tol),
        "duality": _residual(result.duality, tol),
    }


def _spd_verdict(result: structure.ValidationReport) -> str:
    bad_points = result.spd.count(False)
    return "ok" if bad_points == 0 else f"failed at {bad_points} points"


def _matrix(a: np.ndarray) -> pydantic.JsonValue:
    return typing.cast(pydantic.JsonValue, a.tolist())


@dataclasses.dataclass(frozen=True)
class LoadedStructure:
    reference: str
    structure: structure.StatisticalStructure
    spec: ManifoldSpec


@dataclasses.dataclass(frozen=True)
class LabService:
    settings: Settings

    @property
    def plan(self) -> SamplePlan:
        return SamplePlan(
            points=self.settings.points,
            trials=self.settings.trials,
            seed=self.settings.seed,
        )

    def load(self, reference: str) -> LoadedStructure:
        """Resolve ``gallery:<name>`` or a spec file path and build it."""
        if reference.startswith(GALLERY_PREFIX):
            spec = gallery.resolve(reference.removeprefix(GALLERY_PREFIX)).spec
        else:
            spec = load_spec(Path(reference))
        s = structure.build_structure(spec)
        if not s.label:
            s = dataclasses.replace(s, label=reference)
        return LoadedStructure(reference=reference, structure=s, spec=spec)

    def _sample(self, s: structure.StatisticalStructure) -> list[np.ndarray]:
        return sample_points(s.domain, self.settings.points)

    def _report(self, loaded: LoadedStructure, **fields: typing.Any) -> RunReport:
        return RunReport(
            spec=loaded.reference,
            fingerprint=loaded.spec.fingerprint(),
            seed=self.settings.seed,
            plan=self.plan,
            **fields,
        )

    def validate(self, reference: str) -> RunReport:
        loaded = self.load(reference)
        s = loaded.structure
        tol = self.settings.tolerance
        result = structure.validate_structure(
            s, self._sample(s), tol, self.settings.threads
        )
        return self._report(
            loaded,
            residuals=_validation_residuals(result),
            verdicts={"spd": _spd_verdict(result)},
            passed=result.passed,
        )

    def curvature_at_point(self, reference: str, at: list[float]) -> RunReport:
        loaded = self.load(reference)
        s = loaded.structure
        p = s.point(at)
        b = curvature.curvature_bundle(s, p)
        values: dict[str, pydantic.JsonValue] = {
            "point": _matrix(p),
            "g": _matrix(b.g),
            "riemann": _matrix(b.riemann),
            "riemann_star": _matrix(b.riemann_star),
            "ricci": _matrix(b.ricci),
            "ricci_star": _matrix(b.ricci_star),
            "ricci_op": _matrix(b.ricci_op),
            "ricci_star_op": _matrix(b.ricci_star_op),
            "sigma": b.sigma,
            "sigma_star": b.sigma_star,
        }
        notes = []
        if s.dimension >= 3:
            t = cp.cp_tensors(s, p)
            values |= {
                "L": _matrix(t.L),
                "L_star": _matrix(t.L_star),
                "L_sharp": _matrix(t.L_sharp),
                "L_star_sharp": _matrix(t.L_star_sharp),
            }
        else:
            notes.append("L and W need n >= 3; omitted")
        tol = self.settings.identity_tolerance
        sigma_gap = abs(b.sigma - b.sigma_star) / (1.0 + abs(b.sigma))
        residuals = {"sigma_eq": _residual(sigma_gap, tol)}
        return self._report(
            loaded,
            residuals=residuals,
            values=values,
            notes=notes,
            passed=all(r.passed for r in residuals.values()),
        )

    def identities(self, reference: str) -> RunReport:
        return self.identity_suite(self.load(reference))

    def identity_suite(self, loaded: LoadedStructure) -> RunReport:
        """σ = σ*, the R/R* and W/W* pairings, and agreement of the two W forms."""
        s = loaded.structure
        settings = self.settings
        tol = settings.identity_tolerance
        sample = self._sample(s)
        threads = settings.threads
        logger.info("Identity suite on %s: %d points", s.label, len(sample))

        sigma_eq = curvature.sigma_duality_residual(s, sample, threads)
        rr_star = max(
            seeded_sweep(
                lambda p, rng: curvature.dual_curvature_residual(
                    s, p, settings.trials, rng
                ),
                sample,
                settings.seed,
                threads,
            )
        )
        notes = []
        ww_star: float | None = None
        w_forms: float | None = None
        if s.dimension >= 3:
            ww_star = max(
                seeded_sweep(
                    lambda p, rng: cp.cp_duality_residual(s, p, settings.trials, rng),
                    sample,
                    settings.seed,
                    threads,
                )
            )
            w_forms = max(parallel_map(lambda p: cp.forms_gap(s, p), sample, threads))
        else:
            notes.append("ww_star and w_forms skipped: W needs n >= 3")
        residuals = {
            "sigma_eq": _residual(sigma_eq, tol),
            "rr_star": _residual(rr_star, tol),
            "ww_star": _residual(ww_star, tol),
            "w_forms": _residual(w_forms, tol),
        }
        return self._report(
            loaded,
            residuals=residuals,
            notes=notes,
            passed=all(r.passed for r in residuals.values()),
        )

    def flatness(
        self,
        reference: str,
        tol: float | None = None,
        expect: cp.Verdict | None = None,
    ) -> RunReport:
        loaded = self.load(reference)
        s = loaded.structure
        tol = tol if tol is not None else self.settings.flatness_tolerance
        report = cp.flatness_report(
            s,
            points=self.settings.points,
            trials=self.settings.trials,
            tol=tol,
            rng_seed=self.settings.seed,
            threads=self.settings.threads,
        )
        fit = curvature.constant_curvature_fit(
            s, self._sample(s), self.settings.threads
        )
        verdicts = {"flatness": report.verdict.value}
        notes = []
        if expect is not None:
            verdicts["expected"] = expect.value
            if report.verdict != expect:
                notes.append(f"expected {expect}, got {report.verdict}")
        return self._report(
            loaded,
            residuals={"flatness": _residual(report.max_residual, tol)},
            verdicts=verdicts,
            values={
                "constant_curvature_K": fit.K,
                "constant_curvature_residual": fit.residual,
            },
            notes=notes,
            passed=expect is None or report.verdict == expect,
        )

    def transform(
        self,
        reference: str,
        params: equivalence.CPParams | equivalence.AlphaParams,
        emit: Path | None = None,
    ) -> RunReport:
        loaded = self.load(reference)
        s = loaded.structure
        transformed = equivalence.apply_transform(s, params)
        sample = self._sample(s)
        tol = self.settings.tolerance
        threads = self.settings.threads
        check = structure.validate_structure(transformed, sample, tol, threads)
        residuals = _validation_residuals(check)
        verdicts: dict[str, str] = {"spd": _spd_verdict(check)}
        values: dict[str, pydantic.JsonValue] = {}
        notes: list[str] = []

        if isinstance(params, equivalence.AlphaParams) and params.alpha == 1.0:
            via_cp = equivalence.cp_transform(
                s, equivalence.one_conformal_embed(params)
            )
            gap = max(
                parallel_map(
                    lambda p: _structure_gap(transformed, via_cp, p), sample, threads
                )
            )
            residuals["one_conformal_embedding"] = _residual(gap, EMBEDDING_TOLERANCE)

        if s.dimension >= 3:
            values["w_change"] = equivalence.w_change(s, transformed, sample, threads)
            for name, target in (("base", s), ("transformed", transformed)):
                verdicts[f"flatness_{name}"] = cp.flatness_report(
                    target,
                    points=self.settings.points,
                    trials=self.settings.trials,
                    tol=self.settings.flatness_tolerance,
                    rng_seed=self.settings.seed,
                    threads=threads,
                ).verdict.value

        if emit is not None:
            try:
                spec = equivalence.to_spec(s, params)
            except equivalence.TransformError as e:
                notes.append(f"not serializable: {e}")
                verdicts["emitted"] = "no"
            else:
                _write(emit, dump_spec(spec))
                verdicts["emitted"] = str(emit)

        return RunReport(
            spec=loaded.reference,
            fingerprint=equivalence.transform_fingerprint(s, params),
            seed=self.settings.seed,
            plan=self.plan,
            residuals=residuals,
            verdicts=verdicts,
            values=values,
            notes=notes,
            passed=all(check.spd) and all(r.passed for r in residuals.values()),
        )

    def gallery_list(self) -> list[GalleryListing]:
        return [
            GalleryListing(
                name=entry.name,
                family=entry.family,
                dimension=entry.spec.dimension,
                expected=entry.expected,
            )
            for entry in gallery.list_entries()
        ]

    def gallery_emit(self, name: str) -> str:
        return dump_spec(gallery.resolve(name).spec)


def _structure_gap(
    a: structure.StatisticalStructure,
    b: structure.StatisticalStructure,
    p: np.ndarray,
) -> float:
    ga, gb = a.metric_jet(p), b.metric_jet(p)
    ca, cb = a.connection_jet(p), b.connection_jet(p)
    return float(
        max(
            np.max(np.abs(ga.value - gb.value)),
            np.max(np.abs(ca.value - cb.value)),
            np.max(np.abs(ca.first - cb.first)),
        )
    )


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text + "\n")
    except OSError as e:
        raise AppError(f"cannot write {path}: {e.strerror}") from e
