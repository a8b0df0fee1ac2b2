import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bislant.errors import DegeneratePlane, OutOfDomain, ParseError, SingularMetric
from bislant.expressions import evaluate_batch, parse
from bislant.tensor_engine import (DUAL, FD, ConnectionContext, ManifoldModel, christoffel,
                                   covariant_derivative, euclidean_metric, lie_bracket, matrix_field,
                                   riemann, sample_points, sectional_curvature, taylor, vector_field)

POLAR = ManifoldModel(2, [[0.5, 3.0], [-3.0, 3.0]], matrix_field([["1", "0"], ["0", "x1^2"]], 2))
SPHERE = ManifoldModel(2, [[0.3, 2.8], [-3.0, 3.0]], matrix_field([["1", "0"], ["0", "sin(x1)^2"]], 2))
# hyperbolic upper half plane, K = -1
HYPERBOLIC = ManifoldModel(2, [[-2, 2], [0.2, 3]], matrix_field([["1/x2^2", "0"], ["0", "1/x2^2"]], 2))
WARPED = ManifoldModel(3, [[-1, 1], [-1, 1], [-1, 1]],
                       matrix_field([["1 + x2^2", "x1*x3/4", "0"], ["x1*x3/4", "2", "x2/5"],
                                     ["0", "x2/5", "exp(x1)"]], 3))


class TestExpressions:
    def test_evaluation(self):
        e = parse("sqrt(x1^2 + x2^2) * cos(x2)", 2)
        assert e([3.0, 4.0]) == pytest.approx(5 * np.cos(4.0))

    def test_batch(self):
        es = [parse("x1 + x2", 2), parse("3", 2)]
        out = evaluate_batch(es, np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_allclose(out, [[4, 3], [6, 3]])

    @pytest.mark.parametrize("bad", ["x3", "import os", "x1 +", "", "log(x1)", "x1 ** x2", "__import__('os')"])
    def test_rejected(self, bad):
        with pytest.raises(ParseError):
            parse(bad, 2)

    def test_degree_tracking(self):
        assert parse("2*x1 - x2/3", 2).is_affine
        assert not parse("x1*x2", 2).is_affine


class TestChristoffel:
    def test_polar_oracle(self):
        ctx = ConnectionContext(POLAR)
        G = christoffel(ctx, [2.0, 0.3])
        # Gamma^r_tt = -r, Gamma^t_rt = 1/r
        assert G[0, 1, 1] == pytest.approx(-2.0)
        assert G[1, 0, 1] == pytest.approx(0.5)
        assert G[1, 1, 0] == pytest.approx(0.5)
        assert abs(G[0, 0, 0]) < 1e-14

    @pytest.mark.parametrize("engine", [DUAL, FD])
    def test_symmetric_in_lower_indices(self, engine):
        G = christoffel(ConnectionContext(WARPED, engine), [0.2, -0.4, 0.3])
        np.testing.assert_allclose(G, G.transpose(0, 2, 1), atol=1e-9)

    def test_engines_agree(self):
        p = [0.1, 0.5, -0.2]
        a = christoffel(ConnectionContext(WARPED, DUAL), p)
        b = christoffel(ConnectionContext(WARPED, FD), p)
        np.testing.assert_allclose(a, b, atol=1e-6)


class TestCurvature:
    def test_round_sphere(self):
        ctx = ConnectionContext(SPHERE)
        p = [1.0, 0.2]
        U = np.array([1.0, 0.0])
        V = np.array([0.0, 1.0 / np.sin(1.0)])
        assert sectional_curvature(ctx, p, U, V) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("engine,tol", [(DUAL, 1e-12), (FD, 1e-4)])
    def test_hyperbolic_plane(self, engine, tol):
        ctx = ConnectionContext(HYPERBOLIC, engine)
        y = 1.3
        K = sectional_curvature(ctx, [0.2, y], [y, 0.0], [0.0, y])
        assert K == pytest.approx(-1.0, abs=tol)

    def test_flat_polar(self):
        ctx = ConnectionContext(POLAR)
        assert riemann(ctx, [1.5, 0.0], [1, 0], [0, 1], [0, 1], [1, 0]) == pytest.approx(0.0, abs=1e-13)

    def test_degenerate_plane(self):
        ctx = ConnectionContext(SPHERE)
        with pytest.raises(DegeneratePlane):
            sectional_curvature(ctx, [1.0, 0.0], [1, 0], [2, 0])
        with pytest.raises(DegeneratePlane):
            sectional_curvature(ctx, [1.0, 0.0], [1, 0], [1, 1])

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            christoffel(ConnectionContext(SPHERE), [3.1, 0.0])

    def test_singular_metric(self):
        bad = ManifoldModel(2, [[-1, 1], [-1, 1]], matrix_field([["1", "0"], ["0", "x1^2"]], 2))
        with pytest.raises(SingularMetric):
            christoffel(ConnectionContext(bad), [0.0, 0.0])


@settings(max_examples=25, deadline=None)
@given(p=st.tuples(*[st.floats(-0.9, 0.9)] * 3), seed=st.integers(0, 2**32 - 1))
def test_riemann_symmetries(p, seed):
    ctx = ConnectionContext(WARPED)
    R = ctx.local(np.array(p), order=2).riemann
    np.testing.assert_allclose(R, -R.transpose(1, 0, 2, 3), atol=1e-11)
    np.testing.assert_allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-11)
    np.testing.assert_allclose(R, R.transpose(2, 3, 0, 1), atol=1e-11)
    bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
    np.testing.assert_allclose(bianchi, 0.0, atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(p=st.tuples(*[st.floats(-0.9, 0.9)] * 3))
def test_metric_compatibility(p):
    # X g(Y, Y) = 2 g(nabla_X Y, Y) for coordinate-polynomial fields
    ctx = ConnectionContext(WARPED)
    Y = vector_field(["x2", "1 + x1*x3", "x1^2"], 3)
    loc = ctx.local(np.array(p), order=2)
    Yj = loc.field(Y)
    X = np.array([0.3, -0.7, 0.5])
    lhs = np.einsum("ijk,i,j,k->", taylor(WARPED.metric, np.array(p), 1).c[1:4].transpose(1, 2, 0), Yj.value,
                    Yj.value, X)
    dY = np.einsum("ik,k->i", np.array([Yj.c[1:4][:, i] for i in range(3)]), X)
    lhs += 2 * Yj.value @ loc.g0 @ dY
    rhs = 2 * covariant_derivative(ctx, X, Y, np.array(p)) @ loc.g0 @ Yj.value
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_lie_bracket_oracle():
    X = vector_field(["1", "0"], 2)
    Y = vector_field(["0", "x1^2"], 2)
    np.testing.assert_allclose(lie_bracket(X, Y, [1.5, 0.0]), [0.0, 3.0])
    np.testing.assert_allclose(lie_bracket(X, Y, [1.5, 0.0], engine=FD), [0.0, 3.0], atol=1e-8)


def test_sample_points_seeded_and_inset():
    dom = np.array([[0.0, 1.0], [-2.0, 2.0]])
    a, b = sample_points(dom, 50, 7), sample_points(dom, 50, 7)
    np.testing.assert_array_equal(a, b)
    assert np.all(a[:, 0] >= 0.05) and np.all(a[:, 1] <= 1.8)


def test_euclidean_metric_is_identity():
    np.testing.assert_array_equal(euclidean_metric(3)([0.1, 0.2, 0.3]), np.eye(3))
