"""Cartesian <-> conformal polar coordinates and the convexified variable.

(x1, x2) = (e^t cos theta, e^t sin theta) and t = T + exp(eps T).
Angles are normalized to [0, 2 pi) everywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import CylinderField
from .jets import Jet, JetOrderError
from .plane import PlaneField

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-13
NEWTON_MAXITER = 100


class ConvergenceError(RuntimeError):
    pass


def check_epsilon(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    return float(eps)


@dataclass(frozen=True)
class ConvexifyParams:
    epsilon: float

    def __post_init__(self):
        check_epsilon(self.epsilon)


@dataclass(frozen=True)
class PolarCoord:
    t: float
    theta: float


@dataclass(frozen=True)
class ConvexCoord:
    T: float
    theta: float


def normalize_angle(theta):
    out = np.mod(theta, TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if out.ndim == 0 else out


def polar_from_cartesian(x1: float, x2: float) -> PolarCoord:
    if x1 == 0.0 and x2 == 0.0:
        raise ValueError("the origin has no conformal polar coordinates")
    return PolarCoord(math.log(math.hypot(x1, x2)), normalize_angle(math.atan2(x2, x1)))


def cartesian_from_polar(p: PolarCoord) -> tuple:
    r = math.exp(p.t)
    return (r * math.cos(p.theta), r * math.sin(p.theta))


def convexify(T, eps: float):
    """t = T + exp(eps T)."""
    check_epsilon(eps)
    if np.ndim(T) == 0:
        return T + math.exp(eps * T)
    T = np.asarray(T, dtype=float)
    return T + np.exp(eps * T)


def jacobian_dt_dT(T, eps: float):
    check_epsilon(eps)
    if np.ndim(T) == 0:
        return 1.0 + eps * math.exp(eps * T)
    return 1.0 + eps * np.exp(eps * np.asarray(T, dtype=float))


def deconvexify(t, eps: float):
    """Invert t = T + exp(eps T) by safeguarded Newton iteration.

    The root lies in [t - exp(eps t), t]; Newton steps that leave the current
    bracket are replaced by bisection.
    """
    check_epsilon(eps)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo = t - np.exp(eps * t)
    hi = t.copy()
    T = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAXITER):
        e = np.exp(eps * T)
        F = T + e - t
        lo = np.where(F < 0, T, lo)
        hi = np.where(F > 0, T, hi)
        step = F / (1.0 + eps * e)
        T_new = T - step
        bad = (T_new < lo) | (T_new > hi)
        T_new = np.where(bad, 0.5 * (lo + hi), T_new)
        done = np.abs(T_new - T) <= np.maximum(NEWTON_TOL, 4.0 * np.spacing(np.abs(T)))
        T = T_new
        if np.all(done | (F == 0)):
            break
    else:
        raise ConvergenceError("deconvexify did not converge")
    return float(T[0]) if scalar else T


@dataclass(frozen=True)
class PullbackField(CylinderField):
    """U(T, theta) = u(x1, x2) with x = exp(t(T)) (cos theta, sin theta).

    Jets to order 2 by the chain rule through both coordinate changes.
    """

    plane: PlaneField
    eps: float
    component: int = 0

    order = 2

    def _jet(self, T, theta, order):
        if order > 2:
            raise JetOrderError("pulled-back fields carry jets up to order 2")
        eps = self.eps
        e = np.exp(eps * T)
        t = T + e
        tp = 1.0 + eps * e
        tpp = eps * eps * e
        r = np.exp(t)
        x1, x2 = r * np.cos(theta), r * np.sin(theta)
        u = self.plane.jet(x1, x2)[..., self.component]

        # derivatives of (x1, x2) with respect to (T, theta)
        X = {
            (1, 0): (x1 * tp, x2 * tp),
            (0, 1): (-x2, x1),
            (2, 0): (x1 * (tp**2 + tpp), x2 * (tp**2 + tpp)),
            (1, 1): (-x2 * tp, x1 * tp),
            (0, 2): (-x1, -x2),
        }
        out = Jet.zeros(order, T.shape)
        out.data[0, 0] = u[0, 0]
        if order >= 1:
            for ab in ((1, 0), (0, 1)):
                d1, d2 = X[ab]
                out.data[ab] = u[1, 0] * d1 + u[0, 1] * d2
        if order >= 2:
            pairs = {(2, 0): ((1, 0), (1, 0)), (1, 1): ((1, 0), (0, 1)), (0, 2): ((0, 1), (0, 1))}
            for ab, (p, q) in pairs.items():
                p1, p2 = X[p]
                q1, q2 = X[q]
                s1, s2 = X[ab]
                out.data[ab] = (
                    u[2, 0] * p1 * q1
                    + u[1, 1] * (p1 * q2 + p2 * q1)
                    + u[0, 2] * p2 * q2
                    + u[1, 0] * s1
                    + u[0, 1] * s2
                )
        return out

    @property
    def max_mode(self):
        d = self.plane.degree
        return 16 if d is None else d

    def to_dict(self):
        return {"kind": "pullback", "plane": self.plane.to_dict(), "eps": self.eps, "component": self.component}


def pullback_plane_field(u: PlaneField, eps: float, component: int = 0) -> PullbackField:
    check_epsilon(eps)
    if not 0 <= component < u.n:
        raise ValueError(f"component {component} out of range for n = {u.n}")
    return PullbackField(u, eps, component)
