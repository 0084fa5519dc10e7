import numpy as np
import pytest

from statcurv import conformal_projective as cp
from statcurv import gallery
from statcurv.conformal_projective import DimensionError, Verdict
from statcurv.curvature import Side, curvature_bundle
from statcurv.gallery import Family, construct
from statcurv.sampling import sample_points
from statcurv.structure import build_structure
from tests.conftest import (
    ORIGIN4,
    SEEDED_PERTURBATIONS,
    make_gallery_structure,
    make_structure,
    point,
)


def _three_dimensional(name: str):
    return build_structure(construct(Family(name), 3).spec)


class TestL:
    def test_poincare_at_origin(self):
        s = make_gallery_structure("poincare_ball4")
        assert np.allclose(cp.L_at(s, ORIGIN4), -2.0 * np.eye(4))
        assert np.allclose(cp.L_at(s, ORIGIN4, Side.dual), -2.0 * np.eye(4))
        assert np.allclose(
            cp.sharp_at(s, ORIGIN4, cp.L_at(s, ORIGIN4)), -0.5 * np.eye(4)
        )

    def test_tensors_bundle(self):
        s = make_gallery_structure("poincare_ball4")
        t = cp.cp_tensors(s, ORIGIN4)
        assert np.allclose(t.L_sharp, -0.5 * np.eye(4))
        assert np.allclose(t.L_star_sharp, t.L_sharp)

    def test_dually_flat_has_vanishing_l(self):
        s = make_gallery_structure("exp_family4")
        p = point(0.2, 0.4, -0.6, 0.1)
        assert np.allclose(cp.L_at(s, p), 0.0)
        assert np.allclose(cp.L_at(s, p, Side.dual), 0.0)

    def test_two_dimensions_are_rejected(self):
        s = make_structure()
        with pytest.raises(DimensionError, match="n >= 3"):
            cp.L_at(s, point(0.0, 0.0))
        with pytest.raises(DimensionError):
            cp.W_at(s, point(0.0, 0.0))


class TestConstantCurvature:
    @pytest.mark.parametrize(
        "name, k",
        [
            ("poincare_ball4", -1.0),
            ("sphere_stereographic4", 1.0),
            ("euclidean4", 0.0),
            ("exp_family4", 0.0),
        ],
    )
    def test_ricci_l_and_scalar_follow_k(self, name, k):
        s = make_gallery_structure(name)
        n = s.dimension
        for p in sample_points(s.domain, 20):
            g = s.metric_jet(p).value
            b = curvature_bundle(s, p)
            t = cp.cp_tensors(s, p)
            assert np.max(np.abs(b.ricci - (n - 1) * k * g)) <= 1e-9
            assert np.max(np.abs(b.ricci_star - (n - 1) * k * g)) <= 1e-9
            assert np.max(np.abs(t.L - 0.5 * k * g)) <= 1e-9
            assert np.max(np.abs(t.L_star - 0.5 * k * g)) <= 1e-9
            assert np.max(np.abs(t.L_sharp - 0.5 * k * np.eye(n))) <= 1e-9
            assert np.max(np.abs(t.L_star_sharp - 0.5 * k * np.eye(n))) <= 1e-9
            assert abs(b.sigma - n * (n - 1) * k) <= 1e-9
            assert abs(b.sigma_star - n * (n - 1) * k) <= 1e-9


class TestW:
    @pytest.mark.parametrize(
        "name", ["poincare_ball4", "sphere_stereographic4", "euclidean4", "exp_family4"]
    )
    def test_vanishes_on_flat_examples(self, name):
        s = make_gallery_structure(name)
        for p in sample_points(s.domain, 3):
            t = cp.cp_tensors(s, p)
            assert np.max(np.abs(t.W)) <= 1e-9
            assert np.max(np.abs(t.W_star)) <= 1e-9

    @pytest.mark.parametrize(
        "name",
        [
            "poincare_ball4",
            "hessian_potential4",
            "perturbed_euclidean4",
            "perturbed_poincare_ball4",
        ],
    )
    def test_agrees_with_direct_form(self, name):
        s = make_gallery_structure(name)
        for p in sample_points(s.domain, 3):
            assert cp.forms_gap(s, p) <= 1e-9
            assert np.allclose(cp.W_at(s, p), cp.W_direct_at(s, p), atol=1e-9)

    def test_direct_form_in_three_dimensions(self):
        s = _three_dimensional("hessian_potential")
        p = point(0.1, -0.2, 0.3)
        assert cp.forms_gap(s, p) <= 1e-9

    def test_self_dual_weyl_matches_for_levi_civita(self):
        s = make_gallery_structure("sphere_stereographic4")
        p = point(0.3, 0.1, -0.2, 0.5)
        assert np.allclose(cp.weyl_self_dual_at(s, p), cp.W_at(s, p), atol=1e-9)

    def test_self_dual_weyl_differs_off_levi_civita(self):
        s = make_gallery_structure("perturbed_euclidean4")
        p = point(0.3, 0.1, -0.2, 0.5)
        assert np.max(np.abs(cp.weyl_self_dual_at(s, p) - cp.W_at(s, p))) > 1e-6

    @pytest.mark.parametrize(
        "name", ["perturbed_euclidean4", "perturbed_poincare_ball4"]
    )
    def test_w_and_w_star_are_dual(self, name):
        s = make_gallery_structure(name)
        for p in sample_points(s.domain, 10):
            assert cp.cp_duality_residual(s, p, 50, rng_seed=5) <= 1e-9

    @pytest.mark.parametrize("base, amplitude, seed, bump", SEEDED_PERTURBATIONS)
    def test_w_and_w_star_are_dual_after_perturbation(self, base, amplitude, seed, bump):
        entry = gallery.perturb(gallery.resolve(base), amplitude, seed, bump)
        s = build_structure(entry.spec)
        for p in sample_points(s.domain, 10):
            assert cp.cp_duality_residual(s, p, 50, rng_seed=seed) <= 1e-9

    def test_duality_residual_accepts_generators(self):
        s = make_gallery_structure("perturbed_euclidean4")
        p = point(0.1, 0.2, 0.3, 0.4)
        assert cp.cp_duality_residual(
            s, p, 10, np.random.default_rng(9)
        ) == cp.cp_duality_residual(s, p, 10, 9)


class TestFlatnessReport:
    @pytest.mark.parametrize(
        "name",
        [
            "euclidean4",
            "poincare_ball4",
            "sphere_stereographic4",
            "exp_family4",
            "hessian_potential4",
        ],
    )
    def test_flat_entries(self, name):
        report = cp.flatness_report(make_gallery_structure(name), points=6, trials=10)
        assert report.verdict == Verdict.flat
        assert report.max_residual is not None
        assert report.max_residual <= cp.DEFAULT_FLATNESS_TOLERANCE
        assert report.samples == 6

    def test_perturbed_entry_is_not_flat(self):
        s = make_gallery_structure("perturbed_euclidean4")
        report = cp.flatness_report(s, points=20, trials=50)
        assert report.verdict == Verdict.not_flat
        assert report.max_residual is not None
        assert report.max_residual >= 1e-3

    def test_dual_has_the_same_verdict(self):
        s = make_gallery_structure("perturbed_euclidean4")
        primal = cp.flatness_report(s, points=4, trials=10)
        dual = cp.flatness_report(s.dual(), points=4, trials=10)
        assert primal.verdict == dual.verdict == Verdict.not_flat

    def test_three_dimensions_are_undetermined(self):
        report = cp.flatness_report(_three_dimensional("poincare_ball"), points=4)
        assert report.verdict == Verdict.undetermined
        assert report.max_residual is not None
        assert report.samples == 4

    def test_two_dimensions_are_undetermined(self):
        report = cp.flatness_report(make_structure())
        assert report.verdict == Verdict.undetermined
        assert report.max_residual is None
        assert report.samples == 0

    def test_is_deterministic(self):
        s = make_gallery_structure("perturbed_poincare_ball4")
        first = cp.flatness_report(s, points=5, trials=8, rng_seed=11)
        second = cp.flatness_report(s, points=5, trials=8, rng_seed=11, threads=4)
        assert first == second

    def test_tolerance_decides(self):
        s = make_gallery_structure("perturbed_euclidean4")
        report = cp.flatness_report(s, points=4, trials=10, tol=1e6)
        assert report.verdict == Verdict.flat
        assert report.tolerance == 1e6
