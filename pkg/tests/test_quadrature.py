import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from carleman_lab.fields import ConstantField, CutoffField, envelope, make_mode
from carleman_lab.quadrature import (
    CylinderGrid,
    FactoredField,
    SupportError,
    WeightSpec,
    carleman_lhs_V,
    carleman_rhs_V,
    carleman_sides_U,
    carleman_sides_U_direct,
    check_support,
    evaluate,
    log_integrate,
    weighted_inner,
)

ENV = envelope(-9.0, -6.0, 1.0)


def bump_value(T):
    rise, fall = ENV
    return float((CutoffField(rise, True)(T, 0.0) * CutoffField(fall)(T, 0.0)).real)


@pytest.mark.parametrize("weight", [WeightSpec(), WeightSpec("exp_epsT", 0.5),
                                    WeightSpec("exp_m2Toverh", h=0.5),
                                    WeightSpec("exp_m2Toverh_plus_epsT", 0.25, 0.5)])
def test_weighted_inner_against_adaptive_quadrature(weight):
    f = make_mode(2, ENV, 1.5)
    g = make_mode(2, ENV, 1j)
    grid = CylinderGrid.for_fields([f, g])
    got = weighted_inner(f, g, weight, grid)
    ref, _ = quad(lambda T: bump_value(T) ** 2 * float(weight(T)), -9.0, -6.0, limit=200, epsabs=0, epsrel=1e-13)
    assert got == pytest.approx(1.5 * (-1j) * 2 * math.pi * ref, rel=1e-10)


def test_orthogonal_modes():
    grid = CylinderGrid.for_fields([make_mode(1, ENV)])
    assert abs(weighted_inner(make_mode(1, ENV), make_mode(3, ENV), WeightSpec(), grid)) < 1e-14


@given(st.integers(0, 15))
def test_panel_rule_exact_for_polynomials(k):
    grid = CylinderGrid(-1.0, 2.0, 3, 4, 8)
    T, w = grid.T_rule()
    assert np.sum(w * T**k) == pytest.approx((2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1), rel=1e-12)


def test_grid_validation_and_defaults():
    with pytest.raises(ValueError):
        CylinderGrid(1.0, 0.0, 4)
    with pytest.raises(ValueError):
        CylinderGrid(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        WeightSpec("cosh")
    with pytest.raises(ValueError):
        WeightSpec("exp_m2Toverh")
    with pytest.raises(SupportError):
        CylinderGrid.for_fields([ConstantField(1.0)])
    g = CylinderGrid.for_fields([make_mode(20, ENV)], h=0.01)
    assert g.n_theta == 42
    assert (g.T_max - g.T_min) / g.n_panels <= 0.01
    assert g.refined().n_panels == 2 * g.n_panels


def test_support_check():
    f = make_mode(1, ENV)
    check_support(f, CylinderGrid(-9.0, -6.0, 8))
    with pytest.raises(SupportError):
        check_support(f, CylinderGrid(-8.0, -6.0, 8))


def test_log_integrate_matches_plain_sum():
    f = make_mode(1, ENV)
    grid = CylinderGrid.for_fields(f)
    J, T, w = evaluate(f, grid, 0)
    dens = np.abs(J[0, 0]) ** 2
    lw = -2 * T / 0.5
    assert log_integrate(dens, w, lw) == pytest.approx(math.log(np.sum(dens * w * np.exp(lw))), rel=1e-13)
    assert log_integrate(0 * dens, w, lw) == -math.inf
    # far beyond the floating range the log form still works
    assert math.isfinite(log_integrate(dens, w, -2 * T / 1e-3))


def test_U_form_sides():
    V = make_mode(3, ENV, 0.4 - 1j)
    grid = CylinderGrid.for_fields(V)
    for h in (0.1, 0.05, 0.02):
        lhs_U, rhs_U = carleman_sides_U(FactoredField(V, h), 0.5, h, grid)
        assert rhs_U == pytest.approx(carleman_rhs_V(V, 0.5, h, grid), rel=1e-12)
        # the six-term densities of U and V are comparable but not equal
        assert 0.1 < lhs_U / carleman_lhs_V(V, 0.5, h, grid) < 10
    h = 0.05
    direct = carleman_sides_U_direct(FactoredField(V, h), 0.5, h, grid)
    np.testing.assert_allclose(direct, carleman_sides_U(FactoredField(V, h), 0.5, h, grid), rtol=1e-10)
    with pytest.raises(ValueError):
        carleman_sides_U(FactoredField(V, 0.1), 0.5, 0.05, grid)
    with pytest.raises(TypeError):
        carleman_sides_U(V, 0.5, 0.05, grid)
