"""Vanishing order, cutoffs, and the h -> 0 growth comparison.

The weights here are exp(-2T/h), far beyond floating range for small h, so
all integrals are accumulated as logarithms (see
:func:`carleman_lab.quadrature.log_integrate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .almost_complex import AlmostComplexStructure, diff_ineq_constant, jhol_residual
from .coords import pullback_plane_field
from .fields import CutoffField, CutoffSpec, CylinderField, ProductField
from .operators import coefficients
from .plane import PlaneField
from .quadrature import CylinderGrid, evaluate, log_integrate, six_term_density

VANISHING_CAP = 50.0
PROBE_FLOOR = 1e-280
DEFAULT_RADII = tuple(1e-3 * 0.7 ** (-j) for j in range(7, -1, -1))
DEFAULT_R = 5.0


@dataclass
class VanishingOrderReport:
    estimated_order: float
    fit_residual: float
    radii_used: list
    saturated: bool


def _circle_max(u: PlaneField, r: float, n_angles: int) -> float:
    th = 2.0 * math.pi * np.arange(n_angles) / n_angles
    vals = u(r * np.cos(th), r * np.sin(th))
    return float(np.max(np.linalg.norm(vals, axis=-1)))


def vanishing_order(u: PlaneField, radii: Sequence[float] = DEFAULT_RADII, n_angles: int = 64,
                    cap: float = VANISHING_CAP, floor: float = PROBE_FLOOR) -> VanishingOrderReport:
    """Slope of log max_{|x|=r} |u| against log r by least squares.

    Radii where the maximum falls below ``floor`` count as underflow; any
    underflow, or a slope of at least ``cap``, marks the report saturated
    (order reported as at least ``cap``).
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    maxima = [_circle_max(u, r, n_angles) for r in radii]
    used = [(r, m) for r, m in zip(radii, maxima) if m > floor]
    underflow = len(used) < len(radii)
    if len(used) >= 2:
        x = np.log([r for r, _ in used])
        y = np.log([m for _, m in used])
        (slope, icpt), res, *_ = np.polyfit(x, y, 1, full=True)
        resid = float(np.sqrt(res[0])) if len(res) else 0.0
    else:
        slope, resid = math.nan, math.nan
    saturated = underflow or (slope >= cap)
    order = max(slope, cap) if saturated and not math.isnan(slope) else (cap if saturated else slope)
    return VanishingOrderReport(float(order), resid, [r for r, _ in used], bool(saturated))


def chi_R(R: float) -> CutoffField:
    """chi(T / R) with chi = 0 on (-inf, -2] and 1 on [-1, inf)."""
    if R <= 0:
        raise ValueError("R must be positive")
    return CutoffField(CutoffSpec(-2.0 * R, -R), rising=True)


def cutoff_compose(U: CylinderField, psi: CutoffSpec, R: Optional[float] = DEFAULT_R) -> CylinderField:
    """chi_R psi U with exact jets; support within [-2R, psi.right_edge]."""
    factors = [CutoffField(psi), U]
    if R is not None:
        factors.insert(1, chi_R(R))
    return ProductField(tuple(factors))


def _log_grid(field: CylinderField, h: float, n_theta: Optional[int] = None) -> CylinderGrid:
    return CylinderGrid.for_fields(field, h=h, n_theta=n_theta)


def _log_lhs(Upsi: CylinderField, eps: float, h: float, grid: CylinderGrid) -> float:
    J, T, w = evaluate(Upsi, grid, 2)
    return math.log(h) + log_integrate(six_term_density(J, h), w, -2.0 * T / h + eps * T)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _ratio(log_num: float, log_den: float) -> float:
    """exp(log_num - log_den), with 0 when the numerator vanishes."""
    return 0.0 if log_num == -math.inf else _exp(log_num - log_den)


@dataclass
class CutoffSplit:
    """Both error pieces produced by cutting U off, as logs and plain values."""

    h: float
    log_error: float
    log_boundary: float
    log_cutoff_piece: float
    log_lhs: float
    band_sup: float
    error_constant: float  # error / (h^2 lhs)
    boundary_constant: float  # boundary / (h^5 exp(-2 (T0 - 1) / h))

    @property
    def error_term(self) -> float:
        return _ratio(self.log_error, 0.0)

    @property
    def boundary_term(self) -> float:
        return _ratio(self.log_boundary, 0.0)

    def __iter__(self):
        return iter((self.error_term, self.boundary_term))


def rhs_cutoff_split(U: CylinderField, psi: CutoffSpec, eps: float, h: float, R: Optional[float] = DEFAULT_R,
                     n_theta: Optional[int] = None) -> CutoffSplit:
    """The two pieces of int |h^2 Q(psi U)|^2 exp(-2T/h) once psi is inserted.

    error    = h^4 int exp(2T) (|U^psi|^2 + |d_T U^psi|^2 + |d_th U^psi|^2) exp(-2T/h)
    boundary = h^4 int over the band [T0 - 1, T0] of (|U|^2 + |d_T U|^2) exp(-2T/h)
    cutoff   = h^4 int |psi'' U + 2 psi' d_T U + c psi' U|^2 exp(-2T/h)  (what boundary bounds)
    with T0 = psi.right_edge and U^psi = chi_R psi U.
    """
    T0 = psi.right_edge
    Upsi = cutoff_compose(U, psi, R)
    grid = _log_grid(Upsi, h, n_theta)
    J, T, w = evaluate(Upsi, grid, 2)
    sq = lambda z: z.real**2 + z.imag**2
    lw = -2.0 * T / h
    log_err = 4 * math.log(h) + log_integrate(sq(J[0, 0]) + sq(J[1, 0]) + sq(J[0, 1]), w, 2.0 * T + lw)
    log_lhs = math.log(h) + log_integrate(six_term_density(J, h), w, lw + eps * T)

    band = CylinderGrid(psi.left_edge, T0, max(1, math.ceil(psi.width / min(h, 0.0625))), grid.n_theta)
    JU, Tb, wb = evaluate(U, band, 1)
    dens = sq(JU[0, 0]) + sq(JU[1, 0])
    log_bnd = 4 * math.log(h) + log_integrate(dens, wb, -2.0 * Tb / h)
    band_sup = float(np.max(dens))

    Jpsi = CutoffField(psi).jet(Tb, np.zeros_like(Tb), 2)
    c = coefficients(Tb, eps).c
    piece = Jpsi[2, 0] * JU[0, 0] + 2 * Jpsi[1, 0] * JU[1, 0] + c * Jpsi[1, 0] * JU[0, 0]
    log_cut = 4 * math.log(h) + log_integrate(sq(piece), wb, -2.0 * Tb / h)

    log_bound = 5 * math.log(h) - 2.0 * (T0 - 1.0) / h
    return CutoffSplit(
        h, log_err, log_bnd, log_cut, log_lhs, band_sup,
        error_constant=_ratio(log_err, 2 * math.log(h) + log_lhs),
        boundary_constant=_ratio(log_bnd, log_bound),
    )


@dataclass
class FinalBoundRow:
    h: float
    lhs_total: float
    bound: float
    ratio: float
    log_lhs: float
    log_bound: float
    log_ratio: float


def final_contradiction_sweep(u: PlaneField, T0: float = -5.0, hs: Sequence[float] = (), eps: float = 0.5,
                              R: float = DEFAULT_R, component: int = 0) -> list:
    """Weighted six-term integral of chi_R psi U against h^5 exp(-2(T0 - 1)/h).

    For a u of finite vanishing order the ratio grows without bound as h
    decreases. Rows with an identically vanishing integrand carry
    ``lhs_total = 0`` and ``log_ratio = -inf``.
    """
    if not hs:
        raise ValueError("empty h-list")
    U = pullback_plane_field(u, eps, component)
    Upsi = cutoff_compose(U, CutoffSpec(T0 - 1.0, T0), R)
    rows = []
    for h in hs:
        grid = _log_grid(Upsi, h)
        log_lhs = _log_lhs(Upsi, eps, h, grid)
        log_bound = 5 * math.log(h) - 2.0 * (T0 - 1.0) / h
        log_ratio = log_lhs - log_bound
        rows.append(FinalBoundRow(h, _ratio(log_lhs, 0.0), _exp(log_bound), _ratio(log_lhs, log_bound),
                                  log_lhs, log_bound, log_ratio))
    return rows


def vanishes_on_probe(rows: Sequence[FinalBoundRow]) -> bool:
    return all(r.log_lhs == -math.inf for r in rows)


def weighted_decay_integral(U: CylinderField, psi: CutoffSpec, N: float, lower: float,
                            panels_per_unit: int = 16) -> float:
    """log of int_{lower}^{T0} int |psi U|^2 exp(-N T) dtheta dT."""
    T0 = psi.right_edge
    n = max(1, math.ceil((T0 - lower) * panels_per_unit))
    grid = CylinderGrid(lower, T0, n, max(32, 2 * U.max_mode + 2))
    J, T, w = evaluate(ProductField((CutoffField(psi), U)), grid, 0)
    v = J[0, 0]
    return log_integrate(v.real**2 + v.imag**2, w, -N * T)


@dataclass
class UCDemoReport:
    jhol_u: float
    jhol_v: float
    diff_ineq: Optional[float]
    vanishing: VanishingOrderReport
    w_max: float
    sweep: list = field(default_factory=list)
    sweep_increasing: Optional[bool] = None

    @property
    def consistent(self) -> bool:
        """u = v when w vanishes to infinite order; otherwise the sweep must blow up."""
        if self.vanishing.saturated:
            return self.w_max == 0.0
        return bool(self.sweep_increasing)


def uc_demo(u: PlaneField, v: PlaneField, J: AlmostComplexStructure, T0: float = -5.0,
            hs: Sequence[float] = tuple(0.1 * 2.0**-k for k in range(4)), eps: float = 0.5,
            region: tuple = (-0.5, 0.5, -0.5, 0.5), n_samples: int = 200, seed: int = 0) -> UCDemoReport:
    """Run the reduction end to end for a pair of candidate solutions."""
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(region[0], region[1], n_samples)
    x2 = rng.uniform(region[2], region[3], n_samples)
    ru = float(np.max(np.abs(jhol_residual(u, J, x1, x2))))
    rv = float(np.max(np.abs(jhol_residual(v, J, x1, x2))))
    w = u - v
    w_max = float(np.max(np.abs(w(x1, x2))))
    try:
        c = diff_ineq_constant(u, v, region, n_samples, seed, J).constant
    except ValueError:
        c = None
    van = vanishing_order(w)
    report = UCDemoReport(ru, rv, c, van, w_max)
    if not van.saturated:
        report.sweep = final_contradiction_sweep(w, T0, hs, eps)
        lr = [r.log_ratio for r in report.sweep]
        report.sweep_increasing = all(b > a for a, b in zip(lr, lr[1:]))
    return report
