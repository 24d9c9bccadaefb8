"""Almost complex structures on R^{2n} and the J-holomorphic identities.

``matrix(w)`` has shape ``(*points, 2n, 2n)``; ``derivative(w)`` has shape
``(*points, 2n, 2n, 2n)`` with the differentiation direction on the first
of the three trailing axes, i.e. ``derivative(w)[..., k, :, :] = dJ/dw_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plane import PlaneField, to_complex, to_real


def standard_matrix(n: int) -> np.ndarray:
    J0 = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J0[2 * i, 2 * i + 1] = -1.0
        J0[2 * i + 1, 2 * i] = 1.0
    return J0


def _nilpotent_matrix() -> np.ndarray:
    # z -> (conj(z_2), 0) on C^2; anticommutes with J0 and squares to zero
    N0 = np.zeros((4, 4))
    N0[0, 2] = 1.0
    N0[1, 3] = -1.0
    return N0


class AlmostComplexStructure:
    n: int = 1
    #: optional bound |w| <= radius on the domain of J
    radius: float = np.inf

    def matrix(self, w) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def derivative(self, w) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def square_defect(self, w) -> float:
        """max |J(w)^2 + I| over the given points."""
        J = self.matrix(w)
        return float(np.max(np.abs(J @ J + np.eye(2 * self.n))))


@dataclass(frozen=True)
class StandardStructure(AlmostComplexStructure):
    """Multiplication by i."""

    n: int = 1

    def matrix(self, w):
        w = np.asarray(w, dtype=float)
        return np.broadcast_to(standard_matrix(self.n), w.shape[:-1] + (2 * self.n, 2 * self.n)).copy()

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        m = 2 * self.n
        return np.zeros(w.shape[:-1] + (m, m, m))


@dataclass(frozen=True)
class ConjugatedStructure(AlmostComplexStructure):
    """Constant M J0 M^{-1}; maps x -> M (x^k) then solve the equation."""

    M: tuple

    @property
    def n(self):
        return len(self.M) // 2

    def matrix(self, w):
        M = np.asarray(self.M, dtype=float)
        J = M @ standard_matrix(self.n) @ np.linalg.inv(M)
        w = np.asarray(w, dtype=float)
        return np.broadcast_to(J, w.shape[:-1] + J.shape).copy()

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        m = 2 * self.n
        return np.zeros(w.shape[:-1] + (m, m, m))


@dataclass(frozen=True)
class NilpotentDeformation(AlmostComplexStructure):
    """J(w) = J0 + phi(w) N0 on C^2, phi(w) = gradient . w + offset + amp sin(freq . w).

    Since N0 anticommutes with J0 and N0^2 = 0, J^2 = -I for every phi.
    ``amp = 0`` gives a structure affine in w.
    """

    gradient: tuple = (0.0, 0.0, 1.0, 0.0)
    offset: float = 0.0
    amp: float = 0.0
    freq: tuple = (0.0, 0.0, 0.0, 0.0)

    n = 2

    def _phi(self, w):
        g = np.asarray(self.gradient)
        f = np.asarray(self.freq)
        return w @ g + self.offset + self.amp * np.sin(w @ f)

    def _dphi(self, w):
        g = np.asarray(self.gradient)
        f = np.asarray(self.freq)
        return g + self.amp * np.cos(w @ f)[..., None] * f

    def matrix(self, w):
        w = np.asarray(w, dtype=float)
        return standard_matrix(2) + self._phi(w)[..., None, None] * _nilpotent_matrix()

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        return self._dphi(w)[..., :, None, None] * _nilpotent_matrix()


@dataclass(frozen=True)
class VaryingConjugation(AlmostComplexStructure):
    """J(w) = M(w) J0 M(w)^{-1} with M(w) = I + delta S(w), S_ij(w) = sin(k_ij . w + phase_ij)."""

    n: int = 1
    delta: float = 0.1
    seed: int = 0

    def _tables(self):
        m = 2 * self.n
        rng = np.random.default_rng(self.seed)
        K = rng.uniform(-2.0, 2.0, size=(m, m, m))
        P = rng.uniform(0.0, 2 * np.pi, size=(m, m))
        return K, P

    def _M(self, w):
        K, P = self._tables()
        arg = np.einsum("ijk,...k->...ij", K, w) + P
        m = 2 * self.n
        M = np.eye(m) + self.delta * np.sin(arg)
        dM = self.delta * np.cos(arg)[..., None, :, :] * np.moveaxis(K, -1, 0)
        return M, dM

    def matrix(self, w):
        w = np.asarray(w, dtype=float)
        M, _ = self._M(w)
        return M @ standard_matrix(self.n) @ np.linalg.inv(M)

    def derivative(self, w):
        w = np.asarray(w, dtype=float)
        M, dM = self._M(w)
        Minv = np.linalg.inv(M)
        J = M @ standard_matrix(self.n) @ Minv
        G = dM @ Minv[..., None, :, :]
        Jb = J[..., None, :, :]
        return G @ Jb - Jb @ G


def _real_jets(u: PlaneField, x1, x2):
    return to_real(u.jet(x1, x2))


def jhol_residual(u: PlaneField, J: AlmostComplexStructure, x1, x2) -> np.ndarray:
    """d_{x1} u + J(u) d_{x2} u, returned in C^n."""
    r = _real_jets(u, x1, x2)
    Jm = J.matrix(r[0, 0])
    out = r[1, 0] + np.einsum("...ij,...j->...i", Jm, r[0, 1])
    return to_complex(out)


def anticommute_residual(J: AlmostComplexStructure, w, direction: int, step: float = None) -> np.ndarray:
    """(d_k J) J + J (d_k J) at w; d_k J from the closed form or centered differences."""
    w = np.asarray(w, dtype=float)
    if step is None:
        dJ = J.derivative(w)[..., direction, :, :]
    else:
        e = np.zeros(w.shape[-1])
        e[direction] = step
        dJ = (J.matrix(w + e) - J.matrix(w - e)) / (2.0 * step)
    Jm = J.matrix(w)
    return dJ @ Jm + Jm @ dJ


def _composite_derivative(J, w, dw):
    # d_{x_i} J(u(x)) = sum_k dJ/dw_k (u) * d_{x_i} u_k
    return np.einsum("...kij,...k->...ij", J.derivative(w), dw)


def laplacian_identity_residual(u: PlaneField, J: AlmostComplexStructure, x1, x2) -> np.ndarray:
    """Delta u - [(d_{x2} J(u)) d_{x1} u - (d_{x1} J(u)) d_{x2} u], in C^n."""
    r = _real_jets(u, x1, x2)
    w, u1, u2 = r[0, 0], r[1, 0], r[0, 1]
    lap = r[2, 0] + r[0, 2]
    d1J = _composite_derivative(J, w, u1)
    d2J = _composite_derivative(J, w, u2)
    rhs = np.einsum("...ij,...j->...i", d2J, u1) - np.einsum("...ij,...j->...i", d1J, u2)
    return to_complex(lap - rhs)


def j_difference_residual(u: PlaneField, v: PlaneField, J: AlmostComplexStructure, x1, x2, quad_nodes: int) -> np.ndarray:
    """J(u) - J(v) - [int_0^1 dJ(v + tau (u - v)) dtau] (u - v), Gauss-Legendre in tau."""
    wu = to_real(u(x1, x2))
    wv = to_real(v(x1, x2))
    if np.any(np.linalg.norm(wu, axis=-1) > J.radius) or np.any(np.linalg.norm(wv, axis=-1) > J.radius):
        raise ValueError("segment leaves the domain of J")
    diff = wu - wv
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    taus = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    integral = 0.0
    for tau, wt in zip(taus, weights):
        integral = integral + wt * _composite_derivative(J, wv + tau * diff, diff)
    return J.matrix(wu) - J.matrix(wv) - integral


@dataclass(frozen=True)
class DiffIneqEstimate:
    constant: float
    n_used: int
    n_skipped: int

    def __float__(self):
        return self.constant


def diff_ineq_constant(u: PlaneField, v: PlaneField, region: tuple, n_samples: int = 400,
                       seed: int = 0, J: AlmostComplexStructure = None) -> DiffIneqEstimate:
    """Empirical sup of |Delta w| / (|w| + |d1 w| + |d2 w|), w = u - v, over random samples.

    When ``J`` is given, both u and v are first checked to be defined where
    J is evaluated (J(u), J(v) are formed), mirroring the reduction's setting.
    """
    rng = np.random.default_rng(seed)
    lo1, hi1, lo2, hi2 = region
    x1 = rng.uniform(lo1, hi1, n_samples)
    x2 = rng.uniform(lo2, hi2, n_samples)
    ju, jv = u.jet(x1, x2), v.jet(x1, x2)
    if J is not None:
        J.matrix(to_real(ju[0, 0]))
        J.matrix(to_real(jv[0, 0]))
    w = ju - jv
    norm = lambda z: np.linalg.norm(z, axis=-1)
    den = norm(w[0, 0]) + norm(w[1, 0]) + norm(w[0, 1])
    num = norm(w[2, 0] + w[0, 2])
    keep = den > 0
    if not np.any(keep):
        raise ValueError("all samples have |w| + |dw| = 0")
    return DiffIneqEstimate(float(np.max(num[keep] / den[keep])), int(keep.sum()), int((~keep).sum()))
