import math

import numpy as np
import pytest

from statcurv import structure
from statcurv.expr import parse_expression
from statcurv.jets import ExprDomainError
from statcurv.sampling import PointError, sample_points
from statcurv.spec_types import SpecError, load_spec
from tests.conftest import (
    ORIGIN4,
    SPECS_DIR,
    make_gallery_structure,
    make_spec,
    make_structure,
    non_codazzi_structure,
    point,
)


def _diagonal_delta(value: float, n: int) -> np.ndarray:
    out = np.zeros((n, n, n))
    for i in range(n):
        out[i, i, i] = value
    return out


class TestBuildStructure:
    @pytest.mark.parametrize(
        "file_name",
        ["euclidean4", "poincare_ball4", "sphere_stereographic4", "exp_family4"],
    )
    def test_example_specs(self, file_name):
        spec = load_spec(SPECS_DIR / f"{file_name}.json")
        s = structure.build_structure(spec)
        assert s.dimension == 4
        assert s.label == file_name
        assert s.spec == spec

    def test_broken_torsion_is_rejected(self):
        spec = load_spec(SPECS_DIR / "broken_torsion.json")
        with pytest.raises(structure.TorsionError, match="torsion"):
            structure.build_structure(spec)

    def test_torsion_error_is_a_spec_error(self):
        assert issubclass(structure.TorsionError, SpecError)

    def test_asymmetric_metric(self):
        with pytest.raises(SpecError, match="not symmetric"):
            make_structure(
                metric=dict(kind="closed_form", components=[["1", "x1"], ["0", "1"]])
            )

    def test_asymmetric_cubic(self):
        with pytest.raises(SpecError, match="totally symmetric"):
            make_structure(
                connection=dict(
                    kind="cubic",
                    cubic=[[["1", "0"], ["0", "0"]], [["1", "0"], ["0", "0"]]],
                )
            )

    def test_bad_expression_names_its_location(self):
        with pytest.raises(SpecError, match=r"metric\.components\[1\]\[1\]"):
            make_structure(
                metric=dict(kind="closed_form", components=[["1", "0"], ["0", "x3"]])
            )

    def test_wrong_shape(self):
        with pytest.raises(ValueError, match="2x2"):
            make_spec(metric=dict(kind="closed_form", components=[["1"]]))

    def test_potential_hessian_shares_entries(self):
        h = structure.potential_hessian(parse_expression("x1 * x1 * x2", 2), 2)
        assert h[0][1] is h[1][0]


class TestPointTensors:
    def test_poincare_metric_at_origin(self):
        s = make_gallery_structure("poincare_ball4")
        g, g_inv = structure.metric_at(s, ORIGIN4)
        assert np.allclose(g, 4.0 * np.eye(4))
        assert np.allclose(g_inv, 0.25 * np.eye(4))

    def test_poincare_metric_off_origin(self):
        s = make_gallery_structure("poincare_ball4")
        g, _ = structure.metric_at(s, point(0.1, 0.0, 0.0, 0.0))
        assert g[0, 0] == pytest.approx(4.0 / 0.99**2)

    def test_exp_family_metric_at_origin(self):
        s = make_gallery_structure("exp_family4")
        g, _ = structure.metric_at(s, ORIGIN4)
        assert np.allclose(g, np.eye(4))

    def test_levi_civita_of_exponential_diagonal(self):
        s = make_gallery_structure("exp_family4")
        gamma = structure.levi_civita_at(s, point(0.3, -0.2, 0.1, 0.5))
        assert np.allclose(gamma, _diagonal_delta(0.5, 4))

    def test_cubic_of_exp_family(self):
        s = make_gallery_structure("exp_family4")
        assert np.allclose(structure.cubic_at(s, ORIGIN4), _diagonal_delta(1.0, 4))

    def test_dual_of_exp_family(self):
        # Γ*^i_ii = g^ii ∂_i g_ii = 1 at every point
        s = make_gallery_structure("exp_family4")
        gamma_star = structure.dual_connection_at(s, point(0.7, -0.4, 0.0, 0.2))
        assert np.allclose(gamma_star, _diagonal_delta(1.0, 4))

    def test_levi_civita_is_self_dual(self):
        s = make_gallery_structure("poincare_ball4")
        p = point(0.1, -0.2, 0.05, 0.3)
        assert np.allclose(
            structure.dual_connection_at(s, p), s.connection_jet(p).value, atol=1e-12
        )

    def test_dual_is_an_involution(self):
        s = make_gallery_structure("perturbed_euclidean4")
        p = point(0.2, 0.1, -0.3, 0.4)
        c, cc = s.connection_jet(p), s.dual().dual().connection_jet(p)
        assert np.allclose(c.value, cc.value, atol=1e-12)
        assert np.allclose(c.first, cc.first, atol=1e-10)

    def test_dual_label(self):
        assert make_gallery_structure("euclidean4").dual().label == "euclidean4*"

    def test_grad_scalar(self):
        s = make_gallery_structure("poincare_ball4")
        v = structure.grad_scalar_at(s, parse_expression("x1 + 2 * x3", 4), ORIGIN4)
        assert np.allclose(v, [0.25, 0.0, 0.5, 0.0])

    def test_point_tensors(self):
        s = make_gallery_structure("exp_family4")
        t = structure.point_tensors(s, ORIGIN4)
        assert np.allclose(t.g_inv @ t.g, np.eye(4))
        assert not t.gamma.any()
        assert np.allclose(t.cubic, _diagonal_delta(1.0, 4))

    def test_connection_derivatives_match_finite_differences(self):
        s = make_gallery_structure("perturbed_poincare_ball4")
        p = point(0.1, -0.05, 0.2, 0.0)
        h = 1e-5
        first = s.connection_jet(p).first
        for a in range(4):
            step = np.zeros(4)
            step[a] = h
            fd = (
                s.connection_jet(p + step).value - s.connection_jet(p - step).value
            ) / (2 * h)
            assert np.allclose(first[a], fd, atol=1e-6)


class TestErrors:
    def test_not_positive_definite(self):
        s = make_structure(
            metric=dict(kind="closed_form", components=[["x1", "0"], ["0", "1"]])
        )
        with pytest.raises(structure.StructureError):
            structure.metric_at(s, point(-0.5, 0.0))

    def test_point_outside_domain(self):
        s = make_gallery_structure("poincare_ball4")
        with pytest.raises(PointError, match="outside"):
            structure.metric_at(s, point(0.5, 0.0, 0.0, 0.0))

    def test_wrong_point_dimension(self):
        s = make_gallery_structure("poincare_ball4")
        with pytest.raises(PointError, match="expected 4"):
            s.point([0.0, 0.0])

    def test_non_finite_point(self):
        s = make_structure()
        with pytest.raises(PointError, match="non-finite"):
            s.point([math.nan, 0.0])


class TestValidateStructure:
    @pytest.mark.parametrize(
        "name",
        [
            "euclidean4",
            "poincare_ball4",
            "sphere_stereographic4",
            "exp_family4",
            "hessian_potential4",
            "perturbed_euclidean4",
            "perturbed_poincare_ball4",
        ],
    )
    def test_gallery_entries_pass(self, name):
        s = make_gallery_structure(name)
        report = structure.validate_structure(s, sample_points(s.domain, 8))
        assert report.passed, report
        assert report.points == 8
        assert all(report.spd)

    def test_non_codazzi_fails(self):
        s = non_codazzi_structure()
        report = structure.validate_structure(s, sample_points(s.domain, 4))
        assert not report.passed
        assert report.torsion == 0.0
        assert report.codazzi == pytest.approx(1.0)

    def test_non_positive_definite_points_are_flagged(self):
        s = make_structure(
            metric=dict(kind="closed_form", components=[["x1", "0"], ["0", "1"]])
        )
        report = structure.validate_structure(s, sample_points(s.domain, 6))
        assert not report.passed
        assert False in report.spd
        assert True in report.spd

    def test_domain_errors_are_raised_not_counted(self):
        s = make_structure(
            domain=[[380.0, 400.0], [-1.0, 1.0]],
            metric=dict(kind="conformal", factor="2 + sin(exp(x1) * exp(x1))"),
        )
        with pytest.raises(ExprDomainError, match="non-finite"):
            structure.validate_structure(s, sample_points(s.domain, 4))

    def test_threads_do_not_change_the_result(self):
        s = make_gallery_structure("perturbed_euclidean4")
        sample = sample_points(s.domain, 6)
        serial = structure.validate_structure(s, sample, threads=1)
        parallel = structure.validate_structure(s, sample, threads=4)
        assert serial == parallel

    def test_residual_helpers(self):
        gamma = np.zeros((2, 2, 2))
        gamma[0, 0, 1] = 1.0
        assert structure.torsion_residual(gamma) == 1.0
        assert structure.total_symmetry_residual(_diagonal_delta(3.0, 2)) == 0.0
