import numpy as np
import pytest
from hypothesis import given, strategies as st

from carleman_lab.plane import (
    DomainError,
    FlatBump,
    conj_monomial,
    holomorphic_polynomial,
    monomial_curve,
    nilpotent_solution,
    plane_field_from_dict,
    to_complex,
    to_real,
)

coord = st.floats(-0.8, 0.8)


@given(st.lists(st.complex_numbers(max_magnitude=10), min_size=1, max_size=4))
def test_real_view_round_trip(zs):
    z = np.array(zs)
    w = to_real(z)
    assert w.shape == (2 * len(zs),)
    np.testing.assert_array_equal(w[0::2], z.real)
    np.testing.assert_array_equal(to_complex(w), z)


@given(coord, coord, st.integers(1, 6))
def test_monomial_jets_are_complex_derivatives(x1, x2, k):
    z = x1 + 1j * x2
    J = monomial_curve(k).jet(x1, x2)[..., 0]
    dz = k * z ** (k - 1)
    d2 = k * (k - 1) * z ** (k - 2) if k > 1 else 0
    np.testing.assert_allclose([J[0, 0], J[1, 0], J[0, 1], J[2, 0], J[1, 1], J[0, 2]],
                               [z**k, dz, 1j * dz, d2, 1j * d2, -d2], atol=1e-12)


def test_antiholomorphic_jets():
    J = conj_monomial(2).jet(0.3, -0.2)[..., 0]
    zb = 0.3 + 0.2j
    np.testing.assert_allclose([J[1, 0], J[0, 1]], [2 * zb, -2j * zb])


def test_jets_against_finite_differences():
    u = nilpotent_solution()
    x1, x2, s = 0.2, -0.3, 1e-5
    J = u.jet(x1, x2)
    np.testing.assert_allclose(J[1, 0], (u(x1 + s, x2) - u(x1 - s, x2)) / (2 * s), atol=1e-9)
    np.testing.assert_allclose(J[1, 1], (u.jet(x1, x2 + s)[1, 0] - u.jet(x1, x2 - s)[1, 0]) / (2 * s), atol=1e-9)


def test_flat_bump_is_flat():
    f = FlatBump()
    r = np.array([0.1, 0.05, 0.02])
    vals = np.abs(f(r, 0 * r)[..., 0])
    assert vals[0] == pytest.approx(np.exp(-100.0))
    assert np.all(vals[1:] < 1e-100)
    np.testing.assert_array_equal(f.jet(0.0, 0.0), 0)


def test_domain_checked():
    u = monomial_curve(2)
    with pytest.raises(DomainError):
        u(np.array([5.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        monomial_curve(0)


def test_algebra_and_recipes():
    u = holomorphic_polynomial([0, 1, 0, 2])
    v = monomial_curve(1) + 2.0 * monomial_curve(3)
    x = np.linspace(-0.5, 0.5, 5)
    np.testing.assert_allclose(u.jet(x, x), v.jet(x, x))
    w = u - v
    np.testing.assert_allclose(w(x, x), 0)
    for f in (u, v, FlatBump(), nilpotent_solution()):
        np.testing.assert_allclose(plane_field_from_dict(f.to_dict()).jet(x, -x), f.jet(x, -x))
