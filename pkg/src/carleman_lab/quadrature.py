"""Weighted integrals over compactly supported fields on [T_min, T_max] x S^1.

T is discretized with composite Gauss-Legendre panels and theta with the
uniform rule, which is exact for trigonometric polynomials of degree below
``n_theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .coords import check_epsilon
from .fields import CylinderField, ExponentialT
from .jets import Jet
from .operators import Qtilde_jet, Q_jet

WEIGHT_KINDS = ("none", "exp_epsT", "exp_m2Toverh", "exp_m2Toverh_plus_epsT")
SUPPORT_TOL = 1e-12


class SupportError(ValueError):
    """The integrand does not vanish at the ends of the T-interval."""


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "none"
    eps: Optional[float] = None
    h: Optional[float] = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind.endswith("epsT"):
            check_epsilon(self.eps)
        if "overh" in self.kind and not (self.h and self.h > 0):
            raise ValueError("weight needs h > 0")

    def log_weight(self, T):
        T = np.asarray(T, dtype=float)
        out = np.zeros_like(T)
        if self.kind in ("exp_m2Toverh", "exp_m2Toverh_plus_epsT"):
            out = out - 2.0 * T / self.h
        if self.kind in ("exp_epsT", "exp_m2Toverh_plus_epsT"):
            out = out + self.eps * T
        return out

    def __call__(self, T):
        return np.exp(self.log_weight(T))


@dataclass(frozen=True)
class CylinderGrid:
    T_min: float
    T_max: float
    n_panels: int
    n_theta: int = 32
    panel_order: int = 8

    def __post_init__(self):
        if not self.T_min < self.T_max:
            raise ValueError("empty T-interval")
        if self.n_panels < 1 or self.n_theta < 1 or self.panel_order < 1:
            raise ValueError("grid sizes must be positive")

    @property
    def n_T(self) -> int:
        return self.n_panels * self.panel_order

    def T_rule(self) -> tuple:
        x, w = np.polynomial.legendre.leggauss(self.panel_order)
        edges = np.linspace(self.T_min, self.T_max, self.n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    def theta_rule(self) -> tuple:
        theta = 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta
        return theta, 2.0 * math.pi / self.n_theta

    def mesh(self) -> tuple:
        """(T[:, None], theta[None, :], weights[:, None]) ready for broadcasting."""
        T, wT = self.T_rule()
        theta, wth = self.theta_rule()
        return T[:, None], theta[None, :], (wT * wth)[:, None]

    def refined(self, factor: int = 2) -> "CylinderGrid":
        return replace(self, n_panels=self.n_panels * factor)

    def to_dict(self) -> dict:
        return {
            "T_min": self.T_min,
            "T_max": self.T_max,
            "n_panels": self.n_panels,
            "n_theta": self.n_theta,
            "panel_order": self.panel_order,
        }

    @classmethod
    def for_fields(cls, fields, h: Optional[float] = None, panels_per_scale: float = 16.0,
                   max_panel: float = 0.0625, n_theta: Optional[int] = None) -> "CylinderGrid":
        """Default grid covering the union of supports.

        Panels are at most ``max_panel`` long and at least ``panels_per_scale``
        per smallest feature length; with ``h`` given (exponential weights)
        panels are also no longer than h. The theta rule uses
        max(32, 2 * max_mode + 2) nodes.
        """
        if isinstance(fields, CylinderField):
            fields = [fields]
        sups = [f.support() for f in fields]
        if any(s is None for s in sups):
            raise SupportError("default grids need compactly supported fields")
        lo = min(s[0] for s in sups)
        hi = max(s[1] for s in sups)
        width = min(max_panel, min(f.scale for f in fields) / panels_per_scale)
        if h is not None:
            width = min(width, h)
        n_panels = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
        if n_theta is None:
            n_theta = max(32, 2 * max(f.max_mode for f in fields) + 2)
        return cls(lo, hi, n_panels, n_theta)


def evaluate(field: CylinderField, grid: CylinderGrid, order: int) -> tuple:
    """Jet of ``field`` on the grid mesh, plus the mesh (T, theta, weights)."""
    T, theta, w = grid.mesh()
    T2, th2 = np.broadcast_arrays(T, theta)
    return field.jet(T2, th2, order), T2, w


def check_support(field: CylinderField, grid: CylinderGrid, tol: float = SUPPORT_TOL) -> None:
    theta, _ = grid.theta_rule()
    for T in (grid.T_min, grid.T_max):
        J = field.jet(np.full_like(theta, T), theta, min(field.order, 2))
        if np.max(np.abs(J.data)) >= tol:
            raise SupportError(f"field does not vanish at T = {T}")


def integrate(values: np.ndarray, weights: np.ndarray, log_weight: Optional[np.ndarray] = None):
    """sum(values * weights [* exp(log_weight)]) over the mesh."""
    if log_weight is None:
        return np.sum(values * weights)
    return np.sum(values * weights * np.exp(log_weight))


def log_integrate(density: np.ndarray, weights: np.ndarray, log_weight: np.ndarray) -> float:
    """log of sum(density * weights * exp(log_weight)) for density >= 0.

    Returns -inf when the density vanishes identically.
    """
    density = np.broadcast_to(density, np.broadcast_shapes(density.shape, np.shape(log_weight)))
    with np.errstate(divide="ignore"):
        terms = np.log(density) + np.log(weights) + log_weight
    if np.all(np.isneginf(terms)):
        return -math.inf
    return float(logsumexp(terms))


def weighted_inner(f: CylinderField, g: CylinderField, weight: WeightSpec, grid: CylinderGrid) -> complex:
    """Quadrature of the integral of f conj(g) w over the cylinder."""
    check_support(f, grid)
    check_support(g, grid)
    T, theta, w = grid.mesh()
    fv = f.jet(*np.broadcast_arrays(T, theta), 0).value
    gv = g.jet(*np.broadcast_arrays(T, theta), 0).value
    return complex(integrate(fv * np.conj(gv), w * weight(T)))


def six_term_density(J: Jet, h: float) -> np.ndarray:
    """|V|^2 + |h V_T|^2 + |h V_th|^2 + |h^2 V_TT|^2 + |h^2 V_Tth|^2 + |h^2 V_thth|^2."""
    sq = lambda z: z.real**2 + z.imag**2
    h2 = h * h
    return (
        sq(J[0, 0])
        + h2 * (sq(J[1, 0]) + sq(J[0, 1]))
        + h2 * h2 * (sq(J[2, 0]) + sq(J[1, 1]) + sq(J[0, 2]))
    )


def carleman_lhs_V(V: CylinderField, eps: float, h: float, grid: CylinderGrid) -> float:
    """h times the integral of the six-term density against exp(eps T)."""
    check_support(V, grid)
    J, T, w = evaluate(V, grid, 2)
    return float(h * integrate(six_term_density(J, h), w, eps * T))


def carleman_rhs_V(V: CylinderField, eps: float, h: float, grid: CylinderGrid) -> float:
    """Integral of |Qtilde V|^2 (no constant)."""
    check_support(V, grid)
    J, T, w = evaluate(V, grid, 2)
    q = Qtilde_jet(J, T, eps, h).value
    return float(integrate(q.real**2 + q.imag**2, w))


class FactoredField(CylinderField):
    """U = exp(T/h) V, carried in factored form so weighted integrals never overflow."""

    def __init__(self, V: CylinderField, h: float):
        self.V = V
        self.h = float(h)

    @property
    def order(self):
        return self.V.order

    def _jet(self, T, theta, order):
        return self.V._jet(T, theta, order) * ExponentialT(1.0 / self.h)._jet(T, theta, order)

    def support(self):
        return self.V.support()

    @property
    def max_mode(self):
        return self.V.max_mode

    @property
    def scale(self):
        return self.V.scale

    def to_dict(self):
        return {"kind": "factored", "h": self.h, "V": self.V.to_dict()}


def carleman_sides_U(U: FactoredField, eps: float, h: float, grid: CylinderGrid) -> tuple:
    """Both sides of the U-form weighted estimate for U = exp(T/h) V.

    left  = h * int (six-term density of U) exp(-2T/h + eps T)
    right = int |h^2 Q U|^2 exp(-2T/h)
    Derivatives of U are expanded through the factorization:
    exp(-T/h) h^a d_T^a U = (h d_T + 1)^a V, so only V-jets are ever formed.
    """
    if not isinstance(U, FactoredField):
        raise TypeError("U must be supplied as FactoredField(V, h)")
    if abs(U.h - h) > 1e-15 * h:
        raise ValueError("factorization parameter differs from h")
    V = U.V
    check_support(V, grid)
    J, T, w = evaluate(V, grid, 2)
    # jets of exp(-T/h) U with derivatives scaled by h: (hD + 1) acting on V
    S = Jet(J.data.copy(), 2)
    for a in range(2, -1, -1):
        for b in range(3 - a):
            acc = 0
            for i in range(a + 1):
                acc = acc + math.comb(a, i) * h ** (a - i) * J.data[a - i, b]
            S.data[a, b] = acc
    sq = lambda z: z.real**2 + z.imag**2
    h2 = h * h
    dens = (
        sq(S[0, 0])
        + sq(S[1, 0]) + h2 * sq(S[0, 1])
        + sq(S[2, 0]) + h2 * sq(S[1, 1]) + h2 * h2 * sq(S[0, 2])
    )
    lhs = float(h * integrate(dens, w, eps * T))
    q = Qtilde_jet(J, T, eps, h).value
    rhs = float(integrate(sq(q), w))
    return lhs, rhs


def carleman_sides_U_direct(U: CylinderField, eps: float, h: float, grid: CylinderGrid) -> tuple:
    """Same two sides evaluated straight from the jets of U (moderate T/h only)."""
    check_support(U, grid)
    J, T, w = evaluate(U, grid, 2)
    lw = -2.0 * T / h
    lhs = float(h * integrate(six_term_density(J, h), w, lw + eps * T))
    q = h * h * Q_jet(J, T, eps).value
    rhs = float(integrate(q.real**2 + q.imag**2, w, lw))
    return lhs, rhs
