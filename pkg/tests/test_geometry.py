import math

import numpy as np
import pytest

from bislant.curvature import (base_curvature, fiber_curvature, horizontal_values, verify_curvature_inequalities,
                               verify_curvature_equations, verify_sectional_relations,
                               verify_slant_plane_curvature)
from bislant.errors import MissingComplexStructure, NotVertical
from bislant.oneill import OneillContext, hat_connection, tensor_A, tensor_T, verify_fundamental_identities
from bislant.report import PREMISE
from bislant.submersion import scenario_samples, vertical_frame
from bislant.theorems import (csc2, geodesic_foliation_report, integrability_report, parallelism_report,
                              verify_gauss_weingarten, verify_structure_equations)

from conftest import cached_octx, samples_for

TORUS_ANCHOR = np.array([3.0, 4.0, 1.0, 0.0])


class TestOneill:
    def test_torus_T_on_circle_direction(self):
        octx = cached_octx("torus-fibration")
        U = np.array([-0.8, 0.6, 0.0, 0.0])
        # unit circle of radius 5: T_U U = -x/25 toward the origin
        np.testing.assert_allclose(tensor_T(octx, U, U, TORUS_ANCHOR), [-3 / 25, -4 / 25, 0, 0], atol=1e-12)

    def test_torus_A_vanishes(self):
        octx = cached_octx("torus-fibration")
        X, Y = np.array([0.6, 0.8, 0, 0]), np.array([0, 0, 1.0, 0])
        np.testing.assert_allclose(tensor_A(octx, X, Y, TORUS_ANCHOR), 0.0, atol=1e-12)

    def test_hopf_A_is_unit(self):
        octx = cached_octx("hopf-s3")
        pc = octx.at(octx.s.anchor)
        h = pc.loc.hframe.value
        A = pc.a(h[:, 0], h[:, 1])
        assert pc.g(A, A) == pytest.approx(1.0, abs=1e-6)

    def test_hat_connection_rejects_horizontal(self):
        octx = cached_octx("torus-fibration")
        with pytest.raises(NotVertical):
            hat_connection(octx, np.array([0.6, 0.8, 0, 0]), np.array([-0.8, 0.6, 0, 0]), TORUS_ANCHOR)

    @pytest.mark.parametrize("sid", ["paper-r8", "torus-fibration", "hopf-s3", "identity-trivial"])
    def test_identities_hold(self, sid):
        rep = verify_fundamental_identities(cached_octx(sid), samples_for(sid, 2))
        assert rep.ok, [r.name for r in rep.results if r.failed]

    def test_identities_on_twisted(self, twisted):
        octx = OneillContext(twisted.submersion)
        rep = verify_fundamental_identities(octx, [twisted.submersion.anchor])
        assert rep.ok


class TestDistributionCriteria:
    def test_csc(self):
        assert csc2(0.25) == pytest.approx(4 / 3)

    @pytest.mark.parametrize("sid", ["paper-r8", "torus-fibration"])
    def test_structure_and_gauss_weingarten(self, sid):
        octx, smp = cached_octx(sid), samples_for(sid, 2)
        assert verify_structure_equations(octx, smp).ok
        assert verify_gauss_weingarten(octx, smp).ok

    @pytest.mark.parametrize("sid", ["paper-r8", "torus-fibration", "identity-trivial"])
    def test_criteria_agree_with_direct(self, sid):
        octx, smp = cached_octx(sid), samples_for(sid, 2)
        for rep in (integrability_report(octx, smp), geodesic_foliation_report(octx, smp),
                    parallelism_report(octx, smp)):
            assert rep.ok, [r.name for r in rep.results if r.failed and not r.informational]
            agreements = [r for r in rep.results if r.name.endswith(".agreement")]
            assert all(r.status in ("pass", PREMISE) for r in agreements)

    def test_torus_vertical_not_totally_geodesic(self):
        octx = cached_octx("torus-fibration")
        rep = geodesic_foliation_report(octx, [TORUS_ANCHOR])
        direct = rep.worst("foliation.vertical.direct")
        assert direct.informational and direct.failed
        assert rep.worst("foliation.vertical.agreement").passed

    def test_hopf_needs_complex_structure(self):
        with pytest.raises(MissingComplexStructure):
            integrability_report(cached_octx("hopf-s3"), samples_for("hopf-s3", 1))

    def test_twisted_distribution_criteria(self, twisted):
        octx = OneillContext(twisted.submersion)
        smp = [twisted.submersion.anchor]
        for rep in (integrability_report(octx, smp), geodesic_foliation_report(octx, smp)):
            assert rep.ok


class TestCurvature:
    @pytest.mark.parametrize("sid", ["paper-r8", "torus-fibration", "hopf-s3"])
    def test_equations_close(self, sid):
        rep = verify_curvature_equations(cached_octx(sid), samples_for(sid, 2))
        assert rep.ok, [r.name for r in rep.results if r.failed and not r.informational]

    def test_hopf_sectional_values(self):
        octx = cached_octx("hopf-s3")
        vals = horizontal_values(octx, octx.s.anchor)
        assert vals["K_total"] == pytest.approx(1.0, abs=1e-6)
        assert vals["K_base"] == pytest.approx(4.0, abs=1e-6)
        assert vals["A_norm_sq"] == pytest.approx(1.0, abs=1e-6)
        # K = K* - 3|A|^2
        assert vals["K_total"] == pytest.approx(vals["K_base"] - 3 * vals["A_norm_sq"], abs=1e-6)

    def test_hopf_base_is_round(self):
        s = cached_octx("hopf-s3").s
        q = np.array([1.0, 0.3])
        E1 = np.array([2.0, 0.0])
        E2 = np.array([0.0, 2.0 / math.sin(1.0)])
        assert base_curvature(s, q, E1, E2, E2, E1) == pytest.approx(4.0, abs=1e-9)

    def test_fiber_curvature_methods_agree_on_torus(self):
        octx = cached_octx("torus-fibration")
        U, W = vertical_frame(octx.s, TORUS_ANCHOR)
        a = fiber_curvature(octx, TORUS_ANCHOR, U, W, W, U)
        b = fiber_curvature(octx, TORUS_ANCHOR, U, W, W, U, method="gauss")
        assert a == pytest.approx(0.0, abs=1e-9)
        assert b == pytest.approx(a, abs=1e-9)

    def test_fiber_curvature_rejects_horizontal(self):
        octx = cached_octx("torus-fibration")
        X = np.array([0.6, 0.8, 0, 0])
        with pytest.raises(NotVertical):
            fiber_curvature(octx, TORUS_ANCHOR, X, X, X, X)

    def test_sectional_relations(self):
        for sid in ("paper-r8", "hopf-s3"):
            assert verify_sectional_relations(cached_octx(sid), samples_for(sid, 2)).ok

    def test_slant_planes_on_flat_linear(self):
        octx, smp = cached_octx("paper-r8"), samples_for("paper-r8", 2)
        assert verify_slant_plane_curvature(octx, smp).ok
        assert verify_curvature_inequalities(octx, smp).ok

    def test_slant_planes_need_proper_angles(self):
        rep = verify_slant_plane_curvature(cached_octx("torus-fibration"), [TORUS_ANCHOR])
        assert all(r.status == PREMISE for r in rep.results)

    def test_hopf_inequality_analogue(self):
        rep = verify_curvature_inequalities(cached_octx("hopf-s3"), samples_for("hopf-s3", 1))
        assert rep.names() == ["inequalities.horizontal_analogue"]
        assert rep.ok


@pytest.fixture(scope="module")
def octx(twisted):
    return OneillContext(twisted.submersion)


@pytest.fixture(scope="module")
def smp(twisted):
    return scenario_samples(twisted.submersion, 1, 7)


class TestTwistedQuotient:
    """Flat R^4 divided by a screw motion: T and A are both nonzero."""

    def test_standard_relations_hold(self, octx, smp):
        rep = verify_curvature_equations(octx, smp)
        assert rep.ok
        for name in ("curvature.horizontal_three_vertical_one_literal", "curvature.alternating_literal"):
            worst = rep.worst(name)
            assert worst.informational and worst.failed

    def test_tensors_nonzero(self, octx, twisted):
        pc = octx.at(twisted.submersion.anchor)
        assert np.max(np.abs(pc.Tc)) > 1e-2
        assert np.max(np.abs(pc.Ac)) > 1e-2

    def test_slant_plane_decomposition_as_stated_fails_horizontally(self, octx, smp):
        rep = verify_slant_plane_curvature(octx, smp)
        assert rep.worst("theorem41.mixed_plane").status == PREMISE
        assert rep.worst("theorem41.horizontal_plane").failed
