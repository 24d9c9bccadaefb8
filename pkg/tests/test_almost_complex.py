import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carleman_lab.almost_complex import (
    ConjugatedStructure,
    NilpotentDeformation,
    StandardStructure,
    VaryingConjugation,
    anticommute_residual,
    diff_ineq_constant,
    j_difference_residual,
    jhol_residual,
    laplacian_identity_residual,
)
from carleman_lab.plane import LinearMap, conj_monomial, monomial_curve, nilpotent_solution

M = ((1.0, 0.3), (0.2, 1.5))
STRUCTURES = [StandardStructure(2), NilpotentDeformation(), NilpotentDeformation(amp=0.3, freq=(1, 2, 0, 1)),
              VaryingConjugation(2, 0.1, 1), ConjugatedStructure(((1, 0.2, 0, 0), (0, 1, 0.3, 0),
                                                                   (0, 0, 1, 0), (0.1, 0, 0, 2)))]
pts = st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4)


@pytest.mark.parametrize("J", STRUCTURES)
@given(w=pts)
def test_square_is_minus_identity(J, w):
    assert J.square_defect(np.array(w)) < 1e-12


def grid_points(n=50, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, (2, n))


@pytest.mark.parametrize("k", range(1, 7))
def test_monomials_are_holomorphic(k):
    x1, x2 = grid_points()
    assert np.max(np.abs(jhol_residual(monomial_curve(k), StandardStructure(1), x1, x2))) < 1e-12


def test_conjugated_family_and_nilpotent_solution():
    x1, x2 = grid_points()
    for k in range(1, 5):
        u = LinearMap(M, monomial_curve(k))
        assert np.max(np.abs(jhol_residual(u, ConjugatedStructure(M), x1, x2))) < 1e-12
    assert np.max(np.abs(jhol_residual(nilpotent_solution(), NilpotentDeformation(), x1, x2))) < 1e-12


def test_antiholomorphic_map_is_not():
    x1, x2 = grid_points()
    assert np.max(np.abs(jhol_residual(conj_monomial(1), StandardStructure(1), x1, x2))) == pytest.approx(2.0)


@pytest.mark.parametrize("J", STRUCTURES)
def test_anticommutation_closed_form(J):
    w = np.array([0.1, -0.2, 0.3, 0.05])
    for k in range(4):
        assert np.max(np.abs(anticommute_residual(J, w, k))) < 1e-12


def test_anticommutation_finite_difference_order():
    J = VaryingConjugation(2, 0.2, 3)
    w = np.array([0.1, -0.2, 0.3, 0.05])
    steps = (1e-2, 5e-3, 2.5e-3)
    errs = [np.max(np.abs(anticommute_residual(J, w, 2, s))) for s in steps]
    assert math.log(errs[0] / errs[-1]) / math.log(4) >= 1.9


def test_laplacian_identity():
    x1, x2 = grid_points()
    u = nilpotent_solution()
    assert np.max(np.abs(laplacian_identity_residual(u, NilpotentDeformation(), x1, x2))) < 1e-12
    # the same map is not harmonic, so the J-derivative terms carry the identity
    assert np.max(np.abs(laplacian_identity_residual(u, StandardStructure(2), x1, x2))) > 0.1


def test_j_difference_exact_for_affine_structure():
    x1, x2 = grid_points(20)
    u = nilpotent_solution()
    v = 0.5 * nilpotent_solution()
    res = j_difference_residual(u, v, NilpotentDeformation(offset=0.2), x1, x2, quad_nodes=2)
    assert np.max(np.abs(res)) < 1e-13


def test_j_difference_converges_for_smooth_structure():
    x1, x2 = grid_points(20)
    u = nilpotent_solution()
    v = 0.5 * nilpotent_solution()
    J = VaryingConjugation(2, 0.2, 0)
    errs = [np.max(np.abs(j_difference_residual(u, v, J, x1, x2, n))) for n in (1, 2, 4, 8)]
    assert errs[-1] < 1e-12 and errs[0] > errs[-1]


def test_diff_ineq_constant():
    u = monomial_curve(3)
    v = monomial_curve(3) + monomial_curve(5)
    est = diff_ineq_constant(u, v, (-0.5, 0.5, -0.5, 0.5), 200, 0, StandardStructure(1))
    assert est.constant == 0.0 and est.n_used == 200  # w is holomorphic, hence harmonic
    est = diff_ineq_constant(nilpotent_solution(), 0.0 * nilpotent_solution(), (-0.5, 0.5, -0.5, 0.5))
    assert 0 < float(est) < math.inf
    with pytest.raises(ValueError):
        diff_ineq_constant(u, u, (-0.5, 0.5, -0.5, 0.5))
