import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carleman_lab.fields import ConstantField, PolynomialT, envelope, make_mode
from carleman_lab.jets import JetOrderError
from carleman_lab.operators import (
    SemiclassicalParams,
    apply_A,
    apply_B,
    apply_commutator,
    apply_Q,
    apply_Qtilde,
    coefficient_series,
    coefficients,
    conjugation_residual,
)

eps_st = st.floats(0.05, 0.95)
ENV = envelope(-9.0, -5.5, 1.0)


def test_coefficient_examples():
    cf = coefficients(0.0, 0.5)
    assert cf.c == pytest.approx(-1 / 6, rel=1e-15)
    assert cf.c_prime == pytest.approx(-0.125 / 2.25, rel=1e-15)
    far = coefficients(-60.0, 0.5)
    for v in (far.c, far.c_prime, far.c_double_prime, far.c_triple_prime):
        assert abs(v) < 1e-12
    assert far.a == pytest.approx(1.0)


@given(st.floats(-80, 10), eps_st)
def test_coefficient_signs(T, eps):
    cf = coefficients(T, eps)
    assert cf.c < 0 and cf.c_prime < 0
    assert cf.a >= 1


@given(st.floats(-20, 3), eps_st)
def test_closed_forms_match_taylor_route(T, eps):
    cf = coefficients(T, eps)
    c_d, a_d = coefficient_series(T, eps, 3)
    np.testing.assert_allclose([cf.c, cf.c_prime, cf.c_double_prime, cf.c_triple_prime], c_d,
                               rtol=1e-11, atol=1e-300)
    np.testing.assert_allclose([cf.a, cf.a_prime, cf.a_double_prime], a_d[:3], rtol=1e-12)


@pytest.mark.parametrize("name,lower", [("c_double_prime", "c_prime"), ("c_triple_prime", "c_double_prime"),
                                        ("c_prime", "c"), ("a_prime", "a"), ("a_double_prime", "a_prime")])
def test_closed_forms_converge_against_finite_differences(name, lower):
    T, eps = 0.3, 0.5
    exact = getattr(coefficients(T, eps), name)
    steps = (1e-2, 5e-3, 2.5e-3)
    errs = [abs((getattr(coefficients(T + s, eps), lower) - getattr(coefficients(T - s, eps), lower)) / (2 * s)
                - exact) for s in steps]
    assert math.log(errs[0] / errs[-1]) / math.log(4) >= 1.9


def test_Q_examples():
    T = np.array([-3.0, 0.0, 1.0])
    th = np.array([0.1, 2.0, 4.0])
    np.testing.assert_allclose(apply_Q(ConstantField(1.0), T, th, 0.5), 0)
    np.testing.assert_allclose(apply_Q(PolynomialT((0.0, 1.0)), T, th, 0.5), coefficients(T, 0.5).c)
    V = make_mode(4, ENV)
    Tin = np.array([-7.5, -7.0])
    thin = np.array([0.3, 1.2])
    a = coefficients(Tin, 0.5).a
    np.testing.assert_allclose(apply_Q(V, Tin, thin, 0.5), -16 * a * np.exp(4j * thin), rtol=1e-13)


def test_Qtilde_examples():
    T = np.array([-7.5, -7.0])
    th = np.array([0.3, 1.2])
    h, eps = 0.05, 0.25
    cf = coefficients(T, eps)
    np.testing.assert_allclose(apply_Qtilde(ConstantField(1.0), T, th, eps, h), 1 + h * cf.c)
    V = make_mode(-3, ENV)
    np.testing.assert_allclose(apply_Qtilde(V, T, th, eps, h),
                               (1 + h * cf.c - cf.a * h * h * 9) * np.exp(-3j * th), rtol=1e-13)


@given(st.floats(-9.5, -5.0), st.floats(0, 2 * math.pi), eps_st, st.floats(0.001, 0.19))
def test_symmetric_plus_antisymmetric_is_Qtilde(T, th, eps, h):
    V = make_mode(2, ENV, 0.3 + 1j) + make_mode(-5, envelope(-8.0, -6.0))
    lhs = apply_A(V, T, th, eps, h) + apply_B(V, T, th, eps, h)
    rhs = apply_Qtilde(V, T, th, eps, h)
    assert abs(lhs - rhs) <= 1e-13 * (1 + abs(rhs))


@given(st.floats(-9.5, -5.0), st.floats(0, 2 * math.pi), eps_st, st.sampled_from([0.1, 0.05, 0.02]))
def test_conjugation_identity(T, th, eps, h):
    V = make_mode(3, ENV, 1 - 2j)
    assert conjugation_residual(V, T, th, eps, h, relative=True) < 1e-10


def test_conjugation_guard():
    with pytest.raises(ValueError):
        conjugation_residual(ConstantField(1.0), -60.0, 0.0, 0.5, 0.1)


def test_commutator_of_constant_coefficient_operators_vanishes_far_left():
    # coefficients are constant up to exp(eps T) corrections far to the left
    V = make_mode(1, envelope(-60.0, -57.0))
    c = apply_commutator(V, -58.5, 0.2, 0.5, 0.1)
    assert abs(c) < 1e-10


def test_jet_order_errors():
    V = make_mode(1, ENV)
    T, th = np.array([-7.0]), np.array([0.0])
    from carleman_lab.operators import A_jet, commutator_jet

    with pytest.raises(JetOrderError):
        A_jet(V.jet(T, th, 1), T, 0.5, 0.1)
    with pytest.raises(JetOrderError):
        commutator_jet(V.jet(T, th, 2), T, 0.5, 0.1)


def test_semiclassical_params():
    assert SemiclassicalParams(0.1).h0 == 0.2
    for bad in (0.0, 0.2, 0.5):
        with pytest.raises(ValueError):
            SemiclassicalParams(bad)
