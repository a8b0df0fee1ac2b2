import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bislant.catalog import (builtin, dump_scenario, load_scenario, make_linear_bislant, resolve,
                             scenario_from_dict)
from bislant.complex_structure import canonical_J, canonical_matrix, check_hermitian, check_kaehler
from bislant.errors import (DegenerateAngle, DomainError, MissingComplexStructure, NotHorizontal, ParseError,
                            RankDeficient, SchemaError, UnknownScenario)
from bislant.slant import SlantStructure, classify, distributions, slant_angle, verify_slant_algebra
from bislant.submersion import (check_pushforward_consistency, check_riemannian_submersion, differential,
                                horizontal_frame, projectors, pushforward, vertical_frame)
from bislant.tensor_engine import ConnectionContext, ManifoldModel, euclidean_metric, matrix_field

from conftest import cached_builtin, samples_for


def flat_model(J):
    return ManifoldModel(2, [[-1, 1], [-1, 1]], euclidean_metric(2), J)


BASE_DOC = {
    "dim_total": 2, "dim_base": 1, "domain": [[-1, 1], [-1, 1]],
    "metric_total": "euclidean", "metric_base": "euclidean", "complex_structure": "canonical",
    "map": ["x1"],
}


class TestComplexStructure:
    def test_canonical_squares_to_minus_one(self):
        J = canonical_matrix(6)
        np.testing.assert_array_equal(J @ J, -np.eye(6))

    def test_canonical_passes(self):
        m = flat_model(canonical_J(2))
        assert check_hermitian(m, [np.zeros(2)]).passed

    def test_non_hermitian_fails(self):
        m = flat_model(matrix_field([["0", "-2"], ["0.5", "0"]], 2))
        res = check_hermitian(m, [np.zeros(2), np.array([0.3, 0.1])])
        assert res.failed
        # J^2 = -I still holds; only the metric compatibility breaks
        assert res.context["j_squared_residual"] < 1e-15

    def test_position_dependent_J_fails_kaehler(self):
        # rotation of the canonical J by an angle depending on x1
        c, s = "cos(x1)", "sin(x1)"
        Jf = matrix_field([["0", "0", f"-{c}", f"-{s}"], ["0", "0", f"-{s}", c],
                           [c, s, "0", "0"], [s, f"-{c}", "0", "0"]], 4)
        m = ManifoldModel(4, [[-1, 1]] * 4, euclidean_metric(4), Jf)
        pts = [np.zeros(4), np.array([0.2, -0.1, 0.3, 0.0])]
        assert check_hermitian(m, pts).passed
        assert check_kaehler(ConnectionContext(m), pts).failed

    def test_missing_J(self):
        with pytest.raises(MissingComplexStructure):
            check_hermitian(flat_model(None), [np.zeros(2)])


class TestSubmersion:
    def test_torus_differential(self):
        s = cached_builtin("torus-fibration").submersion
        np.testing.assert_allclose(differential(s, [3.0, 4.0, 1.0, 0.0]),
                                   [[0.6, 0.8, 0, 0], [0, 0, 1, 0]], atol=1e-15)

    def test_torus_frames_and_projectors(self):
        s = cached_builtin("torus-fibration").submersion
        p = np.array([3.0, 4.0, 1.0, 0.0])
        V = vertical_frame(s, p)
        H = horizontal_frame(s, p)
        assert len(V) == 2 and len(H) == 2
        for v in V:
            np.testing.assert_allclose(differential(s, p) @ v, 0.0, atol=1e-14)
        pr = projectors(s, p)
        np.testing.assert_allclose(pr.vertical + pr.horizontal, np.eye(4), atol=1e-14)
        np.testing.assert_allclose(pr.vertical @ pr.vertical, pr.vertical, atol=1e-14)

    def test_pushforward_is_isometric(self, rng):
        s = cached_builtin("paper-r8").submersion
        p = s.anchor
        H = projectors(s, p).horizontal
        X = H @ rng.standard_normal(8)
        np.testing.assert_allclose(np.linalg.norm(pushforward(s, p, X)), np.linalg.norm(X), rtol=1e-12)
        with pytest.raises(NotHorizontal):
            pushforward(s, p, vertical_frame(s, p)[0])

    @pytest.mark.parametrize("sid", ["paper-r8", "torus-fibration", "hopf-s3", "identity-trivial"])
    def test_builtins_are_riemannian(self, sid):
        assert check_riemannian_submersion(cached_builtin(sid).submersion, samples_for(sid, 4)).passed

    def test_rank_deficient(self):
        doc = dict(BASE_DOC, dim_base=2, map=["x1", "x1^2"], metric_base="euclidean")
        s = scenario_from_dict(doc).submersion
        with pytest.raises(RankDeficient):
            vertical_frame(s, [0.1, 0.2])

    def test_pushforward_metric(self, twisted):
        s = twisted.submersion
        res = check_pushforward_consistency(s, [s.anchor], fiber_points=3)
        assert res.passed


class TestCatalog:
    def test_unknown(self):
        with pytest.raises(UnknownScenario):
            builtin("nope")

    def test_round_trip(self, tmp_path):
        sc = builtin("hopf-s3")
        path = tmp_path / "hopf.json"
        dump_scenario(sc, path)
        again = load_scenario(path)
        assert dump_scenario(again) == dump_scenario(sc)
        assert again.submersion.diff_engine == sc.submersion.diff_engine

    def test_round_trip_pushforward(self, twisted, tmp_path):
        path = tmp_path / "t.json"
        dump_scenario(twisted, path)
        assert json.loads(path.read_text())["metric_base"] == "pushforward"
        assert dump_scenario(load_scenario(path)) == dump_scenario(twisted)

    def test_odd_dimension_with_J(self):
        doc = dict(BASE_DOC, dim_total=3, domain=[[-1, 1]] * 3)
        with pytest.raises(SchemaError, match="odd"):
            scenario_from_dict(doc)

    def test_not_positive_definite(self):
        doc = dict(BASE_DOC, metric_total=[["1", "0"], ["0", "x1"]])
        with pytest.raises(DomainError, match="positive definite"):
            scenario_from_dict(doc)

    def test_json_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "dim_total": 2,\n  "dim_base": \n}\n')
        with pytest.raises(ParseError) as err:
            load_scenario(path)
        assert err.value.line == 4

    def test_bad_expression_names_field(self):
        with pytest.raises(ParseError) as err:
            scenario_from_dict(dict(BASE_DOC, map=["x1 +* 2"]))
        assert err.value.field == "map"

    def test_unknown_key(self):
        with pytest.raises(SchemaError):
            scenario_from_dict(dict(BASE_DOC, colour="blue"))

    def test_resolve_requires_exactly_one(self):
        with pytest.raises(SchemaError):
            resolve()
        with pytest.raises(SchemaError):
            resolve("paper-r8", "x.json")

    @pytest.mark.parametrize("t", [0.0, math.pi / 2, -0.1])
    def test_degenerate_angles(self, t):
        with pytest.raises(DegenerateAngle):
            make_linear_bislant(t, 0.5)


class TestSlant:
    def test_linear_r8_angles(self):
        s = cached_builtin("paper-r8").submersion
        label, summary = classify(s, samples_for("paper-r8", 3))
        assert label == "proper_bi_slant"
        assert summary["theta1"] == pytest.approx(math.pi / 4, abs=1e-12)
        assert summary["theta2"] == pytest.approx(math.pi / 6, abs=1e-12)
        assert (summary["m1"], summary["m2"]) == (2, 2)

    @pytest.mark.parametrize("sid,label", [("torus-fibration", "anti_invariant"), ("identity-trivial", "invariant")])
    def test_special_classes(self, sid, label):
        assert classify(cached_builtin(sid).submersion, samples_for(sid, 3))[0] == label

    def test_equal_angles_are_proper_slant(self):
        sc = make_linear_bislant(math.pi / 3, math.pi / 3, seed=3)
        label, summary = classify(sc.submersion, [sc.submersion.anchor])
        assert label == "proper_slant"
        theta = [summary[k] for k in ("theta1", "theta2") if summary[k] is not None]
        assert theta == [pytest.approx(math.pi / 3, abs=1e-9)]

    def test_slant_angle_of_vector(self):
        s = cached_builtin("paper-r8").submersion
        st_ = SlantStructure(s)
        D = distributions(st_, s.anchor)
        for lab, theta in (("D_theta1", math.pi / 4), ("D_theta2", math.pi / 6)):
            X = D[lab].vectors()[0] + 0.3 * D[lab].vectors()[1]
            assert slant_angle(s, D[lab], s.anchor, X) == pytest.approx(theta, abs=1e-12)

    def test_algebra_on_linear_r8(self):
        s = cached_builtin("paper-r8").submersion
        rep = verify_slant_algebra(s, samples_for("paper-r8", 3))
        assert rep.ok
        assert len(set(rep.names())) == 8

    def test_algebra_on_torus(self):
        s = cached_builtin("torus-fibration").submersion
        rep = verify_slant_algebra(s, samples_for("torus-fibration", 3))
        assert rep.ok
        assert rep.summary["premise_not_met"] > 0


@settings(max_examples=15, deadline=None)
@given(t1=st.floats(0.05, 1.5), t2=st.floats(0.05, 1.5), seed=st.integers(0, 10_000))
def test_generator_angles_recovered(t1, t2, seed):
    if abs(math.cos(t1) ** 2 - math.cos(t2) ** 2) < 1e-3:
        return
    sc = make_linear_bislant(t1, t2, seed=seed)
    label, summary = classify(sc.submersion, [sc.submersion.anchor])
    assert label == "proper_bi_slant"
    got = sorted([summary["theta1"], summary["theta2"]])
    np.testing.assert_allclose(got, sorted([t1, t2]), atol=1e-9)
    assert verify_slant_algebra(sc.submersion, [sc.submersion.anchor]).ok
