import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bislant import jets
from bislant.jets import Jet, basis_for

finite = st.floats(-2.0, 2.0, allow_nan=False)


def variables(p, order=3):
    return Jet.variables(basis_for(len(p)), p, order)


def derivative(jet, index):
    return jets.grad(jet).value[..., index]


class TestArithmetic:
    def test_product_rule(self):
        x = variables([0.3, -1.2])
        f = x[0] * x[0] * x[1]
        np.testing.assert_allclose(jets.grad(f).value, [2 * 0.3 * -1.2, 0.3**2])

    def test_reciprocal_and_sqrt(self):
        x = variables([2.0])
        f = jets.sqrt(x[0]) * jets.reciprocal(x[0])
        # d/dx x^(-1/2) = -x^(-3/2)/2
        assert derivative(f, 0) == pytest.approx(-0.5 * 2.0**-1.5, rel=1e-14)

    def test_trig_second_derivative(self):
        x = variables([0.7])
        f = jets.sin(x[0])
        second = jets.grad(jets.grad(f)).value[0, 0]
        assert second == pytest.approx(-np.sin(0.7), rel=1e-14)

    def test_matrix_inverse_derivative(self):
        x = variables([0.4, 0.1])
        M = jets.stack([jets.stack([1 + x[0] ** 2, x[1]], x.basis, 3),
                        jets.stack([x[1], 2 + x[0]], x.basis, 3)], x.basis, 3)
        Minv = jets.inv(M)
        ident = jets.matmul(M, Minv)
        np.testing.assert_allclose(ident.c[0], np.eye(2), atol=1e-14)
        np.testing.assert_allclose(ident.c[1:], 0.0, atol=1e-13)

    def test_constant_detection(self):
        x = variables([1.0, 2.0])
        assert not x.const
        assert jets.grad(x).const

    def test_constant_products_keep_order(self):
        b = basis_for(2)
        a = Jet.constant(b, np.eye(2), 1)
        c = Jet.constant(b, np.ones(2), 3)
        prod = jets.matmul(a, c)
        assert prod.const and prod.order == 3


@settings(max_examples=40, deadline=None)
@given(a=finite, b=finite, c=finite)
def test_polynomial_taylor_matches_analytic(a, b, c):
    # f = a x^2 y + b y^3 + c x: exact second derivatives
    x = variables([0.5, -0.25])
    f = a * x[0] * x[0] * x[1] + b * x[1] * x[1] * x[1] + c * x[0]
    H = jets.grad(jets.grad(f)).value
    xv, yv = 0.5, -0.25
    expected = np.array([[2 * a * yv, 2 * a * xv], [2 * a * xv, 6 * b * yv]])
    np.testing.assert_allclose(H, expected, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(p=st.lists(st.floats(0.2, 2.0), min_size=2, max_size=2))
def test_exp_log_like_identity(p):
    x = variables(p)
    e = jets.exp(x[0]) * jets.exp(-1.0 * x[0])
    np.testing.assert_allclose(e.c[0], 1.0, atol=1e-13)
    np.testing.assert_allclose(e.c[1:], 0.0, atol=1e-12)
