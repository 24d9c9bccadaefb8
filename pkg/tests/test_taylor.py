import math

import numpy as np
from hypothesis import given, strategies as st

from carleman_lab import taylor

finite = st.floats(-3.0, 3.0)


def test_exp_of_variable_has_factorial_coefficients():
    s = taylor.exp(taylor.variable(0.7, 6))
    expected = [math.exp(0.7) / math.factorial(k) for k in range(7)]
    np.testing.assert_allclose(s, expected, rtol=1e-14)


def test_reciprocal_of_one_plus_x_alternates():
    s = taylor.reciprocal(taylor.variable(1.0, 5))
    np.testing.assert_allclose(s, [(-1.0) ** k for k in range(6)], rtol=1e-14)


def test_mul_matches_polynomial_product():
    a = np.array([1.0, 2.0, -1.0, 0.5])
    b = np.array([0.3, 0.0, 4.0, 1.0])
    np.testing.assert_allclose(taylor.mul(a, b), np.polynomial.polynomial.polymul(a, b)[:4])


def test_derivatives_and_rescale():
    s = taylor.exp(taylor.variable(0.0, 4, slope=2.0))  # exp(2y)
    np.testing.assert_allclose(taylor.derivatives(s), [2.0**k for k in range(5)])
    r = taylor.rescale(taylor.exp(taylor.variable(0.0, 4)), 2.0)
    np.testing.assert_allclose(r, s)


@given(finite, st.floats(0.5, 3.0), st.integers(1, 6))
def test_reciprocal_inverts_mul(x, c, order):
    a = taylor.variable(x, order) * 0.0
    a[0] = c + x * x
    a[1:] = np.linspace(0.1, 1.0, order)
    prod = taylor.mul(a, taylor.reciprocal(a))
    np.testing.assert_allclose(prod, np.eye(order + 1)[0], atol=1e-10)


@given(finite, finite)
def test_exp_is_a_homomorphism(x, y):
    a = taylor.variable(x, 4)
    b = taylor.variable(y, 4, slope=-0.5)
    np.testing.assert_allclose(taylor.exp(a + b), taylor.mul(taylor.exp(a), taylor.exp(b)), rtol=1e-12)


def test_vectorized_points():
    x = np.linspace(-1, 1, 5)
    s = taylor.exp(taylor.variable(x, 3))
    assert s.shape == (4, 5)
    np.testing.assert_allclose(s[2], np.exp(x) / 2)
