"""C^n-valued test maps on a planar neighborhood of the origin.

A plane jet is an array of shape ``(3, 3, *points, n)`` with entry
``[a, b]`` holding ``d_{x1}^a d_{x2}^b u`` for ``a + b <= 2``. The real view
of C^n used throughout interleaves real and imaginary parts,
``(Re z1, Im z1, ..., Re zn, Im zn)``, so the standard structure is
multiplication by i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

PLANE_ORDER = 2
DEFAULT_DOMAIN = (-1.0, 1.0, -1.0, 1.0)


class DomainError(ValueError):
    """Evaluation point outside the field's rectangular domain."""


def to_real(z: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real, interleaved."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def to_complex(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w[..., 0::2] + 1j * w[..., 1::2]


class PlaneField:
    """Base class for maps from a rectangle around 0 into C^n."""

    n: int = 1
    domain: tuple = DEFAULT_DOMAIN

    def jet(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        lo1, hi1, lo2, hi2 = self.domain
        if np.any((x1 < lo1) | (x1 > hi1) | (x2 < lo2) | (x2 > hi2)):
            raise DomainError(f"point outside domain {self.domain}")
        return self._jet(x1, x2)

    def _jet(self, x1, x2):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x1, x2) -> np.ndarray:
        return self.jet(x1, x2)[0, 0]

    @property
    def degree(self) -> Optional[int]:
        """Polynomial degree in (x, conj x), or None when not polynomial."""
        return None

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __add__(self, other):
        return PlaneSum((self, other))

    def __sub__(self, other):
        return PlaneSum((self, PlaneScaled(-1.0, other)))

    def __rmul__(self, coef):
        return PlaneScaled(complex(coef), self)


def _intersect(domains):
    return (
        max(d[0] for d in domains),
        min(d[1] for d in domains),
        max(d[2] for d in domains),
        min(d[3] for d in domains),
    )


@dataclass(frozen=True)
class XPolynomial(PlaneField):
    """sum over (j, k) of coeff_jk * x^j * conj(x)^k, coeff_jk in C^n, x = x1 + i x2."""

    terms: tuple  # ((j, k, (c_1, ..., c_n)), ...)
    domain: tuple = DEFAULT_DOMAIN

    @property
    def n(self):
        return len(self.terms[0][2])

    @property
    def degree(self):
        return max(j + k for j, k, _ in self.terms)

    def _jet(self, x1, x2):
        x = x1 + 1j * x2
        xb = np.conj(x)
        out = np.zeros((3, 3) + x.shape + (self.n,), dtype=complex)

        def mono(j, k, p, q):
            # d_x^p d_xbar^q of x^j xbar^k
            if p > j or q > k:
                return np.zeros_like(x)
            c = math.perm(j, p) * math.perm(k, q)
            return c * x ** (j - p) * xb ** (k - q)

        for j, k, coef in self.terms:
            coef = np.asarray(coef, dtype=complex)
            d = {(p, q): mono(j, k, p, q) for p in range(3) for q in range(3) if p + q <= 2}
            vals = {
                (0, 0): d[0, 0],
                (1, 0): d[1, 0] + d[0, 1],
                (0, 1): 1j * (d[1, 0] - d[0, 1]),
                (2, 0): d[2, 0] + 2 * d[1, 1] + d[0, 2],
                (0, 2): -(d[2, 0] - 2 * d[1, 1] + d[0, 2]),
                (1, 1): 1j * (d[2, 0] - d[0, 2]),
            }
            for ab, v in vals.items():
                out[ab] += v[..., None] * coef
        return out

    def to_dict(self):
        return {
            "kind": "xpoly",
            "terms": [[j, k, [[complex(c).real, complex(c).imag] for c in cs]] for j, k, cs in self.terms],
            "domain": list(self.domain),
        }


def monomial_curve(k: int, domain: tuple = DEFAULT_DOMAIN) -> XPolynomial:
    """The holomorphic map x -> x**k."""
    if k < 1:
        raise ValueError("monomial order must be >= 1")
    return XPolynomial(((k, 0, (1.0,)),), domain)


def holomorphic_polynomial(coeffs, domain: tuple = DEFAULT_DOMAIN) -> XPolynomial:
    """sum_j coeffs[j] x**j (scalar, n = 1)."""
    return XPolynomial(tuple((j, 0, (complex(c),)) for j, c in enumerate(coeffs) if c != 0) or ((0, 0, (0.0,)),), domain)


def conj_monomial(k: int, domain: tuple = DEFAULT_DOMAIN) -> XPolynomial:
    return XPolynomial(((0, k, (1.0,)),), domain)


@dataclass(frozen=True)
class FlatBump(PlaneField):
    """exp(-1/|x|^2), extended by 0 at the origin: vanishes to infinite order."""

    domain: tuple = DEFAULT_DOMAIN

    @property
    def n(self):
        return 1

    def _jet(self, x1, x2):
        s = x1**2 + x2**2
        live = s > 1.0 / 700.0
        ss = np.where(live, s, 1.0)
        g = np.where(live, np.exp(-1.0 / ss), 0.0)
        g_s = g / ss**2
        g_ss = g * (1.0 / ss**4 - 2.0 / ss**3)
        out = np.zeros((3, 3) + s.shape + (1,), dtype=complex)
        out[0, 0, ..., 0] = g
        out[1, 0, ..., 0] = 2 * x1 * g_s
        out[0, 1, ..., 0] = 2 * x2 * g_s
        out[2, 0, ..., 0] = 4 * x1 * x1 * g_ss + 2 * g_s
        out[0, 2, ..., 0] = 4 * x2 * x2 * g_ss + 2 * g_s
        out[1, 1, ..., 0] = 4 * x1 * x2 * g_ss
        return out

    def to_dict(self):
        return {"kind": "flat", "domain": list(self.domain)}


@dataclass(frozen=True)
class PlaneProduct(PlaneField):
    """Scalar field (n = 1) times a C^n field, by the Leibniz rule."""

    scalar: PlaneField
    field: PlaneField

    @property
    def n(self):
        return self.field.n

    @property
    def domain(self):
        return _intersect([self.scalar.domain, self.field.domain])

    def _jet(self, x1, x2):
        f = self.scalar._jet(x1, x2)
        g = self.field._jet(x1, x2)
        out = np.zeros_like(g)
        for a in range(3):
            for b in range(3 - a):
                for i in range(a + 1):
                    for j in range(b + 1):
                        out[a, b] += comb(a, i) * comb(b, j) * f[i, j] * g[a - i, b - j]
        return out

    def to_dict(self):
        return {"kind": "product", "scalar": self.scalar.to_dict(), "field": self.field.to_dict()}


@dataclass(frozen=True)
class LinearMap(PlaneField):
    """Constant real (2n x 2n) matrix applied to the real view of a field."""

    matrix: tuple
    field: PlaneField

    @property
    def n(self):
        return self.field.n

    @property
    def domain(self):
        return self.field.domain

    @property
    def degree(self):
        return self.field.degree

    def _jet(self, x1, x2):
        M = np.asarray(self.matrix, dtype=float)
        g = self.field._jet(x1, x2)
        real = to_real(g)
        return to_complex(np.einsum("ij,...j->...i", M, real))

    def to_dict(self):
        return {"kind": "linear", "matrix": [list(r) for r in self.matrix], "field": self.field.to_dict()}


@dataclass(frozen=True)
class PlaneSum(PlaneField):
    terms: tuple

    @property
    def n(self):
        return self.terms[0].n

    @property
    def domain(self):
        return _intersect([t.domain for t in self.terms])

    @property
    def degree(self):
        degs = [t.degree for t in self.terms]
        return None if any(d is None for d in degs) else max(degs)

    def _jet(self, x1, x2):
        out = self.terms[0]._jet(x1, x2)
        for t in self.terms[1:]:
            out = out + t._jet(x1, x2)
        return out

    def to_dict(self):
        return {"kind": "sum", "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class PlaneScaled(PlaneField):
    coef: complex
    field: PlaneField

    @property
    def n(self):
        return self.field.n

    @property
    def domain(self):
        return self.field.domain

    @property
    def degree(self):
        return self.field.degree

    def _jet(self, x1, x2):
        return self.coef * self.field._jet(x1, x2)

    def to_dict(self):
        c = complex(self.coef)
        return {"kind": "scaled", "coef": [c.real, c.imag], "field": self.field.to_dict()}


def nilpotent_solution(domain: tuple = DEFAULT_DOMAIN) -> XPolynomial:
    """Exact solution in C^2 for the structure J0 + Re(w_2) N0.

    See :func:`carleman_lab.almost_complex.nilpotent_deformation`: the
    second component is x and the first solves
    2 dbar(u_1) = i Re(x), giving u_1 = (i/2)(x xbar / 2 + xbar^2 / 4).
    """
    return XPolynomial(
        (
            (1, 1, (0.25j, 0.0)),
            (0, 2, (0.125j, 0.0)),
            (1, 0, (0.0, 1.0)),
        ),
        domain,
    )


def plane_field_from_dict(d: dict) -> PlaneField:
    kind = d["kind"]
    dom = tuple(d.get("domain", DEFAULT_DOMAIN))
    if kind == "monomial":
        return monomial_curve(int(d["k"]), dom)
    if kind == "xpoly":
        return XPolynomial(
            tuple((int(j), int(k), tuple(complex(*c) for c in cs)) for j, k, cs in d["terms"]), dom
        )
    if kind == "flat":
        return FlatBump(dom)
    if kind == "product":
        return PlaneProduct(plane_field_from_dict(d["scalar"]), plane_field_from_dict(d["field"]))
    if kind == "linear":
        return LinearMap(tuple(tuple(r) for r in d["matrix"]), plane_field_from_dict(d["field"]))
    if kind == "sum":
        return PlaneSum(tuple(plane_field_from_dict(t) for t in d["terms"]))
    if kind == "scaled":
        return PlaneScaled(complex(*d["coef"]), plane_field_from_dict(d["field"]))
    raise ValueError(f"unknown plane field kind {kind!r}")
