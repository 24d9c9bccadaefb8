"""Derivative tables for functions of (T, theta)."""

from __future__ import annotations

from math import comb

import numpy as np


class JetOrderError(ValueError):
    """Raised when an operator needs more derivatives than a jet carries."""


class Jet:
    """Table ``data[a, b] = d_T^a d_theta^b f`` for ``a + b <= order``.

    ``data`` has shape ``(order + 1, order + 1, *points)``; entries with
    ``a + b > order`` are kept at zero so that slicing-based differentiation
    stays consistent.
    """

    __slots__ = ("data", "order")

    def __init__(self, data: np.ndarray, order: int):
        self.data = data
        self.order = order

    @classmethod
    def zeros(cls, order: int, shape=()) -> "Jet":
        return cls(np.zeros((order + 1, order + 1) + tuple(shape), dtype=complex), order)

    @property
    def shape(self) -> tuple:
        return self.data.shape[2:]

    @property
    def value(self) -> np.ndarray:
        return self.data[0, 0]

    def __getitem__(self, ab):
        a, b = ab
        if a + b > self.order:
            raise JetOrderError(f"d_T^{a} d_theta^{b} exceeds jet order {self.order}")
        return self.data[a, b]

    def require(self, order: int, what: str = "operator") -> None:
        if self.order < order:
            raise JetOrderError(f"{what} needs jet order >= {order}, got {self.order}")

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        data = self.data[: order + 1, : order + 1].copy()
        _zero_above(data, order)
        return Jet(data, order)

    def d_T(self) -> "Jet":
        self.require(1, "d_T")
        return Jet(self.data[1:, :-1], self.order - 1)

    def d_theta(self) -> "Jet":
        self.require(1, "d_theta")
        return Jet(self.data[:-1, 1:], self.order - 1)

    def _align(self, other: "Jet"):
        k = min(self.order, other.order)
        return self.truncate(k).data, other.truncate(k).data, k

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, k = self._align(other)
            return Jet(a + b, k)
        data = self.data.copy()
        data[0, 0] = data[0, 0] + other
        return Jet(data, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.data, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return leibniz(self, other)
        return Jet(self.data * other, self.order)

    __rmul__ = __mul__

    def times_T(self, derivs: np.ndarray) -> "Jet":
        """Multiply by a function of T alone given its derivative stack.

        ``derivs[k]`` is the k-th T-derivative, broadcastable to the points.
        """
        k_max = self.order
        if len(derivs) < k_max + 1:
            raise JetOrderError("coefficient derivative stack too short")
        out = np.zeros(self.data.shape, dtype=np.result_type(self.data, derivs))
        for a in range(k_max + 1):
            for b in range(k_max + 1 - a):
                acc = 0
                for i in range(a + 1):
                    acc = acc + comb(a, i) * derivs[i] * self.data[a - i, b]
                out[a, b] = acc
        return Jet(out, k_max)


def leibniz(f: Jet, g: Jet) -> Jet:
    k_max = min(f.order, g.order)
    shape = np.broadcast_shapes(f.shape, g.shape)
    out = np.zeros((k_max + 1, k_max + 1) + shape, dtype=complex)
    for a in range(k_max + 1):
        for b in range(k_max + 1 - a):
            acc = 0
            for i in range(a + 1):
                for j in range(b + 1):
                    acc = acc + comb(a, i) * comb(b, j) * f.data[i, j] * g.data[a - i, b - j]
            out[a, b] = acc
    return Jet(out, k_max)


def _zero_above(data: np.ndarray, order: int) -> None:
    n = data.shape[0]
    for a in range(n):
        for b in range(n):
            if a + b > order:
                data[a, b] = 0
