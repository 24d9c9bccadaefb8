"""Operators on the convexified cylinder.

Q      = d_T^2 + c(T) d_T + a(T) d_theta^2
Qtilde = h^2 exp(-T/h) Q exp(T/h)
       = h^2 d_T^2 + 2h d_T + 1 + h^2 c d_T + h c + a h^2 d_theta^2
A      = h^2 d_T^2 + (1 + hc - h^2 c'/2) + a h^2 d_theta^2      (symmetric)
B      = (2 + hc) h d_T + h^2 c'/2                             (antisymmetric)

with c(T) = -eps^2 exp(eps T) / (1 + eps exp(eps T)) and
a(T) = (1 + eps exp(eps T))^2.

Every operator has a jet-level form mapping a jet of order K to a jet of
order K - (operator order), so operators compose exactly; the commutator
[A, B] is evaluated that way rather than from an expanded formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import taylor
from .coords import check_epsilon
from .fields import CylinderField, ExponentialT
from .jets import Jet

CONJUGATION_EXPONENT_LIMIT = 500.0


@dataclass(frozen=True)
class SemiclassicalParams:
    h: float
    h0: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.h < self.h0:
            raise ValueError(f"h must lie in (0, {self.h0}), got {self.h}")


@dataclass(frozen=True)
class CoefficientSet:
    c: np.ndarray
    c_prime: np.ndarray
    c_double_prime: np.ndarray
    c_triple_prime: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    a_double_prime: np.ndarray


def coefficients(T, eps: float) -> CoefficientSet:
    """Closed forms for c, its first three derivatives, and a = (1 + eps e^{eps T})^2.

    With s = eps exp(eps T):
      c    = -eps s / (1 + s)
      c'   = -eps^2 s / (1 + s)^2
      c''  = -eps^3 s (1 - s) / (1 + s)^3
      c''' = -eps^4 s (1 - 4 s + s^2) / (1 + s)^4
      a'   = 2 eps s (1 + s),  a'' = 2 eps^2 s (1 + 2 s)
    """
    check_epsilon(eps)
    s = eps * np.exp(eps * np.asarray(T, dtype=float))
    d = 1.0 + s
    return CoefficientSet(
        c=-eps * s / d,
        c_prime=-(eps**2) * s / d**2,
        c_double_prime=-(eps**3) * s * (1.0 - s) / d**3,
        c_triple_prime=-(eps**4) * s * (1.0 - 4.0 * s + s * s) / d**4,
        a=d * d,
        a_prime=2.0 * eps * s * d,
        a_double_prime=2.0 * eps**2 * s * (1.0 + 2.0 * s),
    )


def coefficient_series(T, eps: float, order: int) -> tuple:
    """Derivative stacks (c, a), each of shape (order + 1, *T.shape).

    Built by Taylor arithmetic from the definition of c, independently of the
    hand-derived closed forms in :func:`coefficients`.
    """
    check_epsilon(eps)
    T = np.asarray(T, dtype=float)
    s = eps * taylor.exp(taylor.variable(eps * T, order, eps))
    one_plus_s = s.copy()
    one_plus_s[0] += 1.0
    c = -eps * taylor.mul(s, taylor.reciprocal(one_plus_s))
    a = taylor.mul(one_plus_s, one_plus_s)
    return taylor.derivatives(c), taylor.derivatives(a)


def _const_stack(value, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[0] = value
    return out


class _Coefs:
    """Coefficient stacks for one (T, eps, h), shaped to broadcast over jets."""

    def __init__(self, T, eps, h, order):
        c, a = coefficient_series(T, eps, order + 2)
        self.c, self.a = c, a
        self.h = h
        c_shift = c[1:]
        c_trim = c[:-1]
        a_trim = a[:-1]
        self.p = _const_stack(1.0, c_trim) + h * c_trim - 0.5 * h * h * c_shift  # 1 + hc - h^2 c'/2
        self.q = _const_stack(2.0, c_trim) + h * c_trim  # 2 + hc
        self.r = 0.5 * h * h * c_shift  # h^2 c'/2
        self.a_ = a_trim
        self.c_ = c_trim


def _check_T(T, V: Jet):
    return np.broadcast_to(np.asarray(T, dtype=float), V.shape)


def Q_jet(V: Jet, T, eps: float) -> Jet:
    V.require(2, "Q")
    T = _check_T(T, V)
    c, a = coefficient_series(T, eps, V.order)
    VT = V.d_T()
    return VT.d_T() + VT.truncate(V.order - 2).times_T(c) + V.d_theta().d_theta().times_T(a)


def Qtilde_jet(V: Jet, T, eps: float, h: float) -> Jet:
    """Expanded form h^2 V_TT + 2h V_T + V + h^2 c V_T + h c V + a h^2 V_thth."""
    V.require(2, "Qtilde")
    T = _check_T(T, V)
    k = V.order - 2
    c, a = coefficient_series(T, eps, V.order)
    VT = V.d_T()
    return (
        h * h * VT.d_T()
        + 2.0 * h * VT.truncate(k)
        + V.truncate(k)
        + (h * h) * VT.truncate(k).times_T(c)
        + h * V.truncate(k).times_T(c)
        + (h * h) * V.d_theta().d_theta().times_T(a)
    )


def A_jet(V: Jet, T, eps: float, h: float, _coefs=None) -> Jet:
    V.require(2, "A")
    T = _check_T(T, V)
    k = V.order - 2
    cf = _coefs or _Coefs(T, eps, h, V.order)
    return (
        (h * h) * V.d_T().d_T()
        + V.truncate(k).times_T(cf.p)
        + (h * h) * V.d_theta().d_theta().times_T(cf.a_)
    )


def B_jet(V: Jet, T, eps: float, h: float, _coefs=None) -> Jet:
    V.require(1, "B")
    T = _check_T(T, V)
    cf = _coefs or _Coefs(T, eps, h, V.order)
    return h * V.d_T().times_T(cf.q) + V.truncate(V.order - 1).times_T(cf.r)


def commutator_jet(V: Jet, T, eps: float, h: float) -> Jet:
    """(AB - BA) V by composing the jet-level operators."""
    V.require(3, "[A, B]")
    T = _check_T(T, V)
    cf = _Coefs(T, eps, h, V.order)
    AB = A_jet(B_jet(V, T, eps, h, cf), T, eps, h, cf)
    BA = B_jet(A_jet(V, T, eps, h, cf), T, eps, h, cf)
    return AB - BA


def _eval(V: CylinderField, T, theta, order: int) -> tuple:
    T, theta = np.broadcast_arrays(np.asarray(T, dtype=float), np.asarray(theta, dtype=float))
    return V.jet(T, theta, order), T


def apply_Q(V: CylinderField, T, theta, eps: float):
    J, T = _eval(V, T, theta, 2)
    return Q_jet(J, T, eps).value


def apply_Qtilde(V: CylinderField, T, theta, eps: float, h: float):
    J, T = _eval(V, T, theta, 2)
    return Qtilde_jet(J, T, eps, h).value


def apply_A(V: CylinderField, T, theta, eps: float, h: float):
    J, T = _eval(V, T, theta, 2)
    return A_jet(J, T, eps, h).value


def apply_B(V: CylinderField, T, theta, eps: float, h: float):
    J, T = _eval(V, T, theta, 1)
    return B_jet(J, T, eps, h).value


def apply_commutator(V: CylinderField, T, theta, eps: float, h: float):
    J, T = _eval(V, T, theta, 3)
    return commutator_jet(J, T, eps, h).value


def conjugation_residual(V: CylinderField, T, theta, eps: float, h: float, relative: bool = False):
    """Qtilde V - h^2 exp(-T/h) Q(exp(T/h) V) at the given points.

    With ``relative=True`` the residual is divided by the natural size
    |V| + |h V_T| + |h^2 V_TT| + a |h^2 V_thth| (zero where that vanishes).
    """
    T, theta = np.broadcast_arrays(np.asarray(T, dtype=float), np.asarray(theta, dtype=float))
    if np.any(np.abs(T / h) > CONJUGATION_EXPONENT_LIMIT):
        raise ValueError("|T/h| too large to form exp(T/h) safely")
    J = V.jet(T, theta, 2)
    W = J * ExponentialT(1.0 / h).jet(T, theta, 2)
    direct = h * h * np.exp(-T / h) * Q_jet(W, T, eps).value
    res = Qtilde_jet(J, T, eps, h).value - direct
    if not relative:
        return res
    a = coefficients(T, eps).a
    scale = np.abs(J[0, 0]) + h * np.abs(J[1, 0]) + h * h * np.abs(J[2, 0]) + a * h * h * np.abs(J[0, 2])
    return np.where(scale > 0, np.abs(res) / np.where(scale > 0, scale, 1.0), 0.0)
