"""Closed-form test functions on the cylinder (T, theta) with exact jets.

Every field returns a :class:`~carleman_lab.jets.Jet` of order up to 4, so
differential identities can be checked pointwise without discretization
error. Fields are immutable and serialize to JSON recipes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import taylor
from .jets import Jet, JetOrderError

MAX_ORDER = 4
# exp(-1/y) is set to zero below this argument; the true value is < 1e-300.
_FLAT_FLOOR = 1.0 / 700.0


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth step that is 1 on (-inf, left_edge] and 0 on [right_edge, inf)."""

    left_edge: float
    right_edge: float
    profile: str = "exp_glue"

    def __post_init__(self):
        if not self.left_edge < self.right_edge:
            raise ValueError(
                f"degenerate cutoff interval [{self.left_edge}, {self.right_edge}]"
            )
        if self.profile != "exp_glue":
            raise ValueError(f"unknown cutoff profile {self.profile!r}")

    @property
    def width(self) -> float:
        return self.right_edge - self.left_edge


def _flat_exp_series(y: np.ndarray, order: int, slope: float) -> np.ndarray:
    """Series of exp(-1/y) (zero for y <= 0) in the variable ``y``."""
    live = y > _FLAT_FLOOR
    ys = np.where(live, y, 1.0)
    s = taylor.exp(-taylor.reciprocal(taylor.variable(ys, order, slope)))
    return np.where(live, s, 0.0)


def glue_series(x, order: int) -> np.ndarray:
    """Series of the step G(x) = f(x) / (f(x) + f(1 - x)), f(x) = exp(-1/x).

    G is 0 for x <= 0 and 1 for x >= 1.
    """
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    f1 = _flat_exp_series(xs, order, 1.0)
    f2 = _flat_exp_series(1.0 - xs, order, -1.0)
    g = taylor.mul(f1, taylor.reciprocal(f1 + f2))
    out = np.zeros_like(g)
    out[0] = np.where(x >= 1.0, 1.0, 0.0)
    return np.where(inside, g, out)


def glue(x) -> np.ndarray:
    """Plain evaluation of G(x), written independently of the series code."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f1 = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        f2 = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return f1 / (f1 + f2)


class CylinderField:
    """Base class: a complex function of (T, theta), 2pi-periodic in theta."""

    #: highest derivative order the closed form provides
    order: int = MAX_ORDER

    def jet(self, T, theta, order: Optional[int] = None) -> Jet:
        k = self.order if order is None else order
        if k > self.order:
            raise JetOrderError(f"{type(self).__name__} provides jets up to order {self.order}")
        T, theta = np.broadcast_arrays(np.asarray(T, dtype=float), np.asarray(theta, dtype=float))
        return self._jet(T, theta, k)

    def _jet(self, T, theta, order):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, T, theta):
        return self.jet(T, theta, 0).value

    # Support and resolution hints used to build default quadrature grids.
    def support(self) -> Optional[tuple]:
        return None

    @property
    def max_mode(self) -> int:
        return 0

    @property
    def scale(self) -> float:
        return math.inf

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __add__(self, other):
        return SumField((self, other))

    def __sub__(self, other):
        return SumField((self, ScaledField(-1.0, other)))

    def __neg__(self):
        return ScaledField(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, CylinderField):
            return ProductField((self, other))
        return ScaledField(complex(other), self)

    def __rmul__(self, other):
        return ScaledField(complex(other), self)


@dataclass(frozen=True)
class ConstantField(CylinderField):
    value: complex = 1.0

    def _jet(self, T, theta, order):
        out = Jet.zeros(order, T.shape)
        out.data[0, 0] = self.value
        return out

    def to_dict(self):
        return {"kind": "constant", "value": _cplx(self.value)}


@dataclass(frozen=True)
class PolynomialT(CylinderField):
    """sum_k coeffs[k] * T**k."""

    coeffs: tuple = (0.0, 1.0)

    def _jet(self, T, theta, order):
        p = np.polynomial.Polynomial(np.asarray(self.coeffs, dtype=complex))
        out = Jet.zeros(order, T.shape)
        for a in range(order + 1):
            out.data[a, 0] = p.deriv(a)(T) if a else p(T)
        return out

    def to_dict(self):
        return {"kind": "poly_T", "coeffs": [_cplx(c) for c in self.coeffs]}


@dataclass(frozen=True)
class ExponentialT(CylinderField):
    """exp(rate * T); used to form e^{T/h} V."""

    rate: float

    def _jet(self, T, theta, order):
        e = np.exp(self.rate * T)
        out = Jet.zeros(order, T.shape)
        for a in range(order + 1):
            out.data[a, 0] = self.rate**a * e
        return out

    def to_dict(self):
        return {"kind": "exp_T", "rate": self.rate}


@dataclass(frozen=True)
class FourierMode(CylinderField):
    """exp(i m theta)."""

    m: int

    def _jet(self, T, theta, order):
        e = np.exp(1j * self.m * theta)
        out = Jet.zeros(order, T.shape)
        for b in range(order + 1):
            out.data[0, b] = (1j * self.m) ** b * e
        return out

    @property
    def max_mode(self):
        return abs(self.m)

    def to_dict(self):
        return {"kind": "mode", "m": self.m}


@dataclass(frozen=True)
class CutoffField(CylinderField):
    """theta-independent exp-glue step; ``rising=True`` gives 1 - step."""

    spec: CutoffSpec
    rising: bool = False

    def _jet(self, T, theta, order):
        w = self.spec.width
        x = (self.spec.right_edge - T) / w
        s = taylor.derivatives(taylor.rescale(glue_series(x, order), -1.0 / w))
        if self.rising:
            s = -s
            s[0] = s[0] + 1.0
        out = Jet.zeros(order, T.shape)
        out.data[:, 0] = s
        return out

    def support(self):
        if self.rising:
            return (self.spec.left_edge, math.inf)
        return (-math.inf, self.spec.right_edge)

    @property
    def scale(self):
        return self.spec.width

    def to_dict(self):
        return {
            "kind": "cutoff",
            "left_edge": self.spec.left_edge,
            "right_edge": self.spec.right_edge,
            "rising": self.rising,
        }


@dataclass(frozen=True)
class SumField(CylinderField):
    terms: tuple

    @property
    def order(self):
        return min(t.order for t in self.terms)

    def _jet(self, T, theta, order):
        out = self.terms[0]._jet(T, theta, order)
        for t in self.terms[1:]:
            out = out + t._jet(T, theta, order)
        return out

    def support(self):
        sups = [t.support() for t in self.terms]
        if any(s is None for s in sups):
            return None
        return (min(s[0] for s in sups), max(s[1] for s in sups))

    @property
    def max_mode(self):
        return max(t.max_mode for t in self.terms)

    @property
    def scale(self):
        return min(t.scale for t in self.terms)

    def to_dict(self):
        return {"kind": "sum", "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class ProductField(CylinderField):
    factors: tuple

    @property
    def order(self):
        return min(f.order for f in self.factors)

    def _jet(self, T, theta, order):
        out = self.factors[0]._jet(T, theta, order)
        for f in self.factors[1:]:
            out = out * f._jet(T, theta, order)
        return out

    def support(self):
        lo, hi = -math.inf, math.inf
        bounded = False
        for f in self.factors:
            s = f.support()
            if s is not None:
                lo, hi = max(lo, s[0]), min(hi, s[1])
                bounded = True
        if not bounded or not (math.isfinite(lo) and math.isfinite(hi)):
            return None
        return (lo, hi)

    @property
    def max_mode(self):
        return sum(f.max_mode for f in self.factors)

    @property
    def scale(self):
        return min(f.scale for f in self.factors)

    def to_dict(self):
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class ScaledField(CylinderField):
    coef: complex
    field: CylinderField

    @property
    def order(self):
        return self.field.order

    def _jet(self, T, theta, order):
        return self.field._jet(T, theta, order) * self.coef

    def support(self):
        return self.field.support()

    @property
    def max_mode(self):
        return self.field.max_mode

    @property
    def scale(self):
        return self.field.scale

    def to_dict(self):
        return {"kind": "scaled", "coef": _cplx(self.coef), "field": self.field.to_dict()}


def make_bump(spec: CutoffSpec) -> CutoffField:
    """theta-independent cutoff: 1 left of ``spec.left_edge``, 0 right of ``spec.right_edge``."""
    return CutoffField(spec)


def envelope(lo: float, hi: float, ramp: Optional[float] = None) -> tuple:
    """Rise/fall cutoff pair for a bump supported on [lo, hi].

    With ``ramp=None`` the bump has no plateau (it rises on the left half and
    falls on the right half).
    """
    if not lo < hi:
        raise ValueError(f"empty envelope [{lo}, {hi}]")
    if ramp is None:
        ramp = (hi - lo) / 2.0
    if not 0 < ramp <= (hi - lo) / 2.0:
        raise ValueError("ramp must lie in (0, (hi - lo) / 2]")
    return CutoffSpec(lo, lo + ramp), CutoffSpec(hi - ramp, hi)


def bump_profile(env: Sequence[CutoffSpec]) -> ProductField:
    rise, fall = env
    return ProductField((CutoffField(rise, rising=True), CutoffField(fall)))


def make_mode(m: int, env: Sequence[CutoffSpec], amplitude: complex = 1.0) -> CylinderField:
    """amplitude * b(T) * exp(i m theta) with b the compactly supported envelope bump."""
    rise, fall = env
    if fall.right_edge <= rise.left_edge:
        raise ValueError("envelope does not enclose a nonempty support")
    field = ProductField((bump_profile(env), FourierMode(int(m))))
    if amplitude != 1.0:
        return ScaledField(complex(amplitude), field)
    return field


def semiclassical_packet(h: float, center: float, eps: float, width: float = 1.0, shift: int = 0):
    """Bump of T-width ``width * sqrt(h)`` around ``center`` with mode near 1/(h sqrt(a)).

    The mode puts the field close to the characteristic set of the conjugated
    operator, where the weighted estimate is nearly saturated.
    """
    a = (1.0 + eps * math.exp(eps * center)) ** 2
    m = int(round(1.0 / (h * math.sqrt(a)))) + shift
    half = width * math.sqrt(h)
    return make_mode(m, envelope(center - half, center + half))


@dataclass(frozen=True)
class PacketRecipe:
    """An h-dependent test field, resolved by :func:`semiclassical_packet`."""

    center: float
    width: float = 1.0
    shift: int = 0

    def resolve(self, h: float, eps: float) -> CylinderField:
        return semiclassical_packet(h, self.center, eps, self.width, self.shift)

    def to_dict(self):
        return {"kind": "packet", "center": self.center, "width": self.width, "shift": self.shift}


def resolve(item, h: float, eps: float) -> CylinderField:
    """Concrete field for a family member (fields pass through unchanged)."""
    if isinstance(item, PacketRecipe):
        return item.resolve(h, eps)
    return item


def family(T0: float = -5.0) -> list:
    """The default ten-member test family, all supported in (-inf, T0 - 0.5].

    Seven fixed fields (sums of enveloped Fourier modes) and three
    semiclassical packets whose mode and width follow h.
    """
    top = T0 - 0.5
    return [
        make_mode(0, envelope(top - 3.0, top)),
        make_mode(1, envelope(top - 3.5, top - 0.5, 1.0)),
        make_mode(-3, envelope(top - 3.0, top, 1.2), amplitude=0.5 - 0.8j),
        make_mode(8, envelope(top - 3.0, top - 1.0)),
        SumField((make_mode(0, envelope(top - 4.0, top - 1.0)),
                  make_mode(1, envelope(top - 3.0, top), amplitude=0.5j))),
        SumField((make_mode(2, envelope(top - 3.0, top - 0.5), amplitude=1.0 + 0.5j),
                  make_mode(-1, envelope(top - 4.5, top - 2.0, 0.8)))),
        SumField((make_mode(4, envelope(top - 2.0, top)),
                  make_mode(-6, envelope(top - 3.0, top - 1.0), amplitude=-0.3))),
        PacketRecipe(T0 - 2.0, 1.0),
        PacketRecipe(T0 - 3.0, 2.0),
        PacketRecipe(T0 - 2.5, 1.5, shift=1),
    ]


def field_from_dict(d: dict):
    """Rebuild a field (or packet recipe) from its JSON recipe."""
    kind = d["kind"]
    if kind == "constant":
        return ConstantField(_uncplx(d["value"]))
    if kind == "poly_T":
        return PolynomialT(tuple(_uncplx(c) for c in d["coeffs"]))
    if kind == "exp_T":
        return ExponentialT(float(d["rate"]))
    if kind == "mode":
        return FourierMode(int(d["m"]))
    if kind == "cutoff":
        return CutoffField(CutoffSpec(d["left_edge"], d["right_edge"]), bool(d.get("rising", False)))
    if kind == "sum":
        return SumField(tuple(field_from_dict(t) for t in d["terms"]))
    if kind == "product":
        return ProductField(tuple(field_from_dict(f) for f in d["factors"]))
    if kind == "scaled":
        return ScaledField(_uncplx(d["coef"]), field_from_dict(d["field"]))
    if kind == "bump_mode":
        env = envelope(d["lo"], d["hi"], d.get("ramp"))
        return make_mode(int(d.get("m", 0)), env, _uncplx(d.get("amplitude", 1.0)))
    if kind == "packet":
        return PacketRecipe(float(d["center"]), float(d.get("width", 1.0)), int(d.get("shift", 0)))
    if kind == "pullback":
        from .coords import pullback_plane_field
        from .plane import plane_field_from_dict

        return pullback_plane_field(
            plane_field_from_dict(d["plane"]), d["eps"], component=d.get("component", 0)
        )
    raise ValueError(f"unknown field kind {kind!r}")


def _cplx(z):
    z = complex(z)
    return [z.real, z.imag] if z.imag else z.real


def _uncplx(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return v
