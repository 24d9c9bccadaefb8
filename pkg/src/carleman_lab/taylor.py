"""Truncated univariate Taylor arithmetic.

A series is an array ``s`` of shape ``(K + 1, *points)`` holding normalized
coefficients ``s[k] = f^{(k)}(x) / k!``. All operations are vectorized over
the trailing point axes and exact up to rounding, which is what lets the
cutoff functions and the operator coefficients carry derivative tables with
no discretization error.
"""

from __future__ import annotations

import math

import numpy as np


def variable(x, order: int, slope: float = 1.0) -> np.ndarray:
    """Series of the affine map ``y -> x + slope * (y - x0)`` around ``x0``."""
    x = np.asarray(x, dtype=float)
    s = np.zeros((order + 1,) + x.shape)
    s[0] = x
    if order >= 1:
        s[1] = slope
    return s


def constant(c, order: int, shape=()) -> np.ndarray:
    s = np.zeros((order + 1,) + tuple(shape))
    s[0] = c
    return s


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    order = min(len(a), len(b)) - 1
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.zeros((order + 1,) + shape, dtype=np.result_type(a, b))
    for k in range(order + 1):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def reciprocal(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    inv0 = 1.0 / a[0]
    out[0] = inv0
    for k in range(1, len(a)):
        acc = np.zeros_like(a[0])
        for i in range(1, k + 1):
            acc = acc + a[i] * out[k - i]
        out[k] = -inv0 * acc
    return out


def exp(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, len(a)):
        acc = np.zeros_like(a[0])
        for i in range(1, k + 1):
            acc = acc + i * a[i] * out[k - i]
        out[k] = acc / k
    return out


def derivatives(s: np.ndarray) -> np.ndarray:
    """Convert normalized coefficients to plain derivatives ``f^{(k)}``."""
    fact = np.array([math.factorial(k) for k in range(len(s))], dtype=float)
    return s * fact.reshape((-1,) + (1,) * (s.ndim - 1))


def rescale(s: np.ndarray, factor: float) -> np.ndarray:
    """Series of ``y -> f(factor * y)`` given the series of ``f``."""
    pw = factor ** np.arange(len(s), dtype=float)
    return s * pw.reshape((-1,) + (1,) * (s.ndim - 1))
