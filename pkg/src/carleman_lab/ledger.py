"""Term-by-term bookkeeping for the weighted estimate of the conjugated operator.

Every quantity is a quadrature over a compactly supported field V. Targets
(|AV|^2, |BV|^2, <[A,B]V, V>) come from the jet-level operators, whose
coefficients are built by Taylor arithmetic; ledger terms use the
hand-derived closed forms. The two routes only meet in the comparison.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coords import check_epsilon
from .fields import CylinderField, resolve
from .operators import A_jet, B_jet, Qtilde_jet, coefficients, commutator_jet
from .quadrature import CylinderGrid, carleman_lhs_V, carleman_rhs_V, check_support, evaluate

log = logging.getLogger(__name__)

DEFAULT_T0 = -5.0
DEFAULT_H0 = 0.2
DEFAULT_LAMBDA = 2.5

A_LABELS = (
    "||h^2 d_T^2 V||^2",
    "||(1+hc-h^2c'/2) V||^2",
    "||(1+eps e^{eps T})^2 h^2 d_th^2 V||^2",
    "h^3 <V, (c''-h c'''/2) V>",
    "-2 <h d_T V, (1+hc-h^2c'/2) h d_T V>",
    "-2 eps^3 h^2 <h d_th V, (1+2 eps e^{eps T}) e^{eps T} h d_th V>",
    "2 <h^2 d_T d_th V, (1+eps e^{eps T})^2 h^2 d_T d_th V>",
    "-2 <h d_th V, (1+hc-h^2c'/2)(1+eps e^{eps T})^2 h d_th V>",
)
B_LABELS = (
    "||(2+hc) h d_T V||^2",
    "-h^4/4 ||c' V||^2",
    "-h^4/2 <V, c'' c V>",
    "-h^3 <V, c'' V>",
)
COMMUTATOR_LABELS = (
    "-2h^2 <c' h d_T V, h d_T V>",
    "-2h^2 <c' V, V>",
    "h^3 <(c''-cc') V, V>",
    "h^4/2 <(cc''+c''') V, V>",
    "2h eps^2 <(2+hc)(1+eps e^{eps T}) e^{eps T} h d_th V, h d_th V>",
)
#: positions of the terms the absorption argument works with
ZEROTH_ORDER_TERM, ANGULAR_TERM, INDEFINITE_TERM = 1, 2, 7
COMMUTATOR_THETA = 4


@dataclass
class TermLedger:
    entries: list
    target: float

    @property
    def total(self) -> float:
        return math.fsum(v for _, v in self.entries)

    @property
    def residual(self) -> float:
        """|sum - target| relative to the target (or to the largest term if the target is 0)."""
        scale = abs(self.target) or max((abs(v) for _, v in self.entries), default=0.0)
        return abs(self.total - self.target) / scale if scale else 0.0

    def __getitem__(self, i):
        return self.entries[i][1]

    def as_dict(self):
        return {"entries": [[k, v] for k, v in self.entries], "target": self.target}


@dataclass(frozen=True)
class CarlemanReport:
    field_id: str
    h: float
    epsilon: float
    T0: float
    lhs: float
    rhs: float
    ratio: float


@dataclass(frozen=True)
class AbsorptionParams:
    lam: float = DEFAULT_LAMBDA

    @property
    def admissible(self) -> bool:
        return 2.0 < self.lam < 3.0


@dataclass
class Decomposition:
    total: float
    parts_sum: float
    residual: float
    a_norm: float
    b_norm: float
    commutator: float
    commutator_imag: float

    def __iter__(self):
        return iter((self.total, self.parts_sum, self.residual))


@dataclass
class AbsorptionReport:
    lam: float
    h: float
    eps: float
    margins: dict
    targets: dict
    trouble_identity_residual: float
    inequality_slack: float

    @property
    def relative_margins(self) -> dict:
        return {k: (self.margins[k] / self.targets[k] if self.targets[k] else 0.0) for k in self.margins}

    def passed(self, allowance: float = 0.0) -> bool:
        """All margins >= -allowance * target."""
        return all(self.margins[k] >= -allowance * self.targets[k] for k in self.margins)


class GridSample:
    """Jets of V and closed-form coefficients on a grid, for one (eps, h)."""

    def __init__(self, V: CylinderField, eps: float, h: float, grid: CylinderGrid):
        check_epsilon(eps)
        if h <= 0:
            raise ValueError("h must be positive")
        check_support(V, grid)
        order = min(V.order, 4)
        self.J, self.T, self.w = evaluate(V, grid, order)
        if not np.any(self.J.value):
            raise ValueError("V vanishes on the grid")
        self.V, self.eps, self.h, self.grid = V, eps, h, grid
        self.cf = coefficients(self.T, eps)
        self.e = np.exp(eps * self.T)

    def norm2(self, z, mult=1.0) -> float:
        """Integral of mult |z|^2."""
        return float(np.sum(mult * (z.real**2 + z.imag**2) * self.w))

    def inner(self, f, g) -> complex:
        return complex(np.sum(f * np.conj(g) * self.w))

    def AV(self):
        return A_jet(self.J, self.T, self.eps, self.h).value

    def BV(self):
        return B_jet(self.J, self.T, self.eps, self.h).value

    def QtV(self):
        return Qtilde_jet(self.J, self.T, self.eps, self.h).value

    def commV(self):
        return commutator_jet(self.J, self.T, self.eps, self.h).value


def _sample(V, eps, h, grid):
    return V if isinstance(V, GridSample) else GridSample(V, eps, h, grid)


def decomposition_check(V, eps: float, h: float, grid: CylinderGrid) -> Decomposition:
    """Compare int |Qtilde V|^2 with ||AV||^2 + ||BV||^2 + <[A,B]V, V>."""
    s = _sample(V, eps, h, grid)
    total = s.norm2(s.QtV())
    a = s.norm2(s.AV())
    b = s.norm2(s.BV())
    comm = s.inner(s.commV(), s.J.value)
    parts = a + b + comm.real
    return Decomposition(total, parts, abs(total - parts) / total, a, b, comm.real, comm.imag)


def expand_A_norm(V, eps: float, h: float, grid: CylinderGrid) -> TermLedger:
    s = _sample(V, eps, h, grid)
    J, cf, e = s.J, s.cf, s.e
    h2 = h * h
    p = 1.0 + h * cf.c - 0.5 * h2 * cf.c_prime
    V0, VT, Vth = J[0, 0], J[1, 0], J[0, 1]
    values = (
        s.norm2(h2 * J[2, 0]),
        s.norm2(V0, p**2),
        s.norm2(h2 * J[0, 2], cf.a**2),
        h**3 * s.norm2(V0, cf.c_double_prime - 0.5 * h * cf.c_triple_prime),
        -2.0 * s.norm2(h * VT, p),
        -2.0 * eps**3 * h2 * s.norm2(h * Vth, (1.0 + 2.0 * eps * e) * e),
        2.0 * s.norm2(h2 * J[1, 1], cf.a),
        -2.0 * s.norm2(h * Vth, p * cf.a),
    )
    return TermLedger(list(zip(A_LABELS, values)), s.norm2(s.AV()))


def expand_B_norm(V, eps: float, h: float, grid: CylinderGrid) -> TermLedger:
    s = _sample(V, eps, h, grid)
    J, cf = s.J, s.cf
    V0 = J[0, 0]
    values = (
        s.norm2(h * J[1, 0], (2.0 + h * cf.c) ** 2),
        -0.25 * h**4 * s.norm2(V0, cf.c_prime**2),
        -0.5 * h**4 * s.norm2(V0, cf.c_double_prime * cf.c),
        -(h**3) * s.norm2(V0, cf.c_double_prime),
    )
    return TermLedger(list(zip(B_LABELS, values)), s.norm2(s.BV()))


def expand_commutator(V, eps: float, h: float, grid: CylinderGrid) -> TermLedger:
    s = _sample(V, eps, h, grid)
    J, cf, e = s.J, s.cf, s.e
    h2 = h * h
    V0 = J[0, 0]
    values = (
        -2.0 * h2 * s.norm2(h * J[1, 0], cf.c_prime),
        -2.0 * h2 * s.norm2(V0, cf.c_prime),
        h**3 * s.norm2(V0, cf.c_double_prime - cf.c * cf.c_prime),
        0.5 * h**4 * s.norm2(V0, cf.c * cf.c_double_prime + cf.c_triple_prime),
        2.0 * h * eps**2 * s.norm2(h * J[0, 1], (2.0 + h * cf.c) * (1.0 + eps * e) * e),
    )
    return TermLedger(list(zip(COMMUTATOR_LABELS, values)), s.inner(s.commV(), V0).real)


def trouble_split(V, eps: float, h: float, grid: CylinderGrid, lam: float = DEFAULT_LAMBDA) -> tuple:
    """Split the indefinite theta-term with a free parameter lam.

    part1 = -2 <h V_th, (1 + lam h c) a h V_th>
    part2 = -2 <h V_th, ((1 - lam) h c - h^2 c'/2) a h V_th>
    """
    s = _sample(V, eps, h, grid)
    cf = s.cf
    hVth = h * s.J[0, 1]
    part1 = -2.0 * s.norm2(hVth, (1.0 + lam * h * cf.c) * cf.a)
    part2 = -2.0 * s.norm2(hVth, ((1.0 - lam) * h * cf.c - 0.5 * h * h * cf.c_prime) * cf.a)
    return part1, part2


def absorption_check(V, eps: float, h: float, grid: CylinderGrid, lam: float = DEFAULT_LAMBDA) -> AbsorptionReport:
    """Margins of the three absorptions used to control the indefinite term.

    (i)   ||(1+hc-h^2c'/2)V||^2 - <(1+lam hc)V, V>
    (ii)  ||a h^2 V_thth||^2 - <(1+lam hc) a h^2 V_thth, a h^2 V_thth>
    (iii) commutator theta-term - |second part of the split|
    """
    s = _sample(V, eps, h, grid)
    cf = s.cf
    weight = 1.0 + lam * h * cf.c
    if np.min(weight) <= 0:
        raise ValueError(f"1 + lam h c must stay positive; h = {h} is too large")
    A = expand_A_norm(s, eps, h, grid)
    C = expand_commutator(s, eps, h, grid)
    part1, part2 = trouble_split(s, eps, h, grid, lam)
    V0 = s.J[0, 0]
    aVthth = h * h * cf.a * s.J[0, 2]
    zeroth_loss = -s.norm2(V0, weight)
    angular_loss = -s.norm2(aVthth, weight)
    margins = {
        "first": A[ZEROTH_ORDER_TERM] - abs(zeroth_loss),
        "second": A[ANGULAR_TERM] - abs(angular_loss),
        "commutator": C[COMMUTATOR_THETA] - abs(part2),
    }
    targets = {"first": A[ZEROTH_ORDER_TERM], "second": A[ANGULAR_TERM], "commutator": C[COMMUTATOR_THETA]}
    # part1 rewritten by one integration by parts in theta
    ibp = 2.0 * s.inner(np.sqrt(weight) * V0, np.sqrt(weight) * aVthth).real
    scale = abs(part1) or 1.0
    return AbsorptionReport(
        lam, h, eps, margins, targets,
        trouble_identity_residual=abs(ibp - part1) / scale,
        inequality_slack=part1 - (zeroth_loss + angular_loss),
    )


def _sweep_item(args):
    field_id, item, h, eps, T0, grid = args
    V = resolve(item, h, eps)
    sup = V.support()
    if sup is None or sup[1] > T0:
        raise ValueError(f"field {field_id} is not supported in (-inf, {T0}]")
    g = grid or CylinderGrid.for_fields(V)
    lhs = carleman_lhs_V(V, eps, h, g)
    rhs = carleman_rhs_V(V, eps, h, g)
    return CarlemanReport(field_id, h, eps, T0, lhs, rhs, lhs / rhs)


def carleman_ratio_sweep(fields: Sequence, hs: Sequence[float], epsilons: Sequence[float] = (0.5,),
                         T0: float = DEFAULT_T0, grid: Optional[CylinderGrid] = None,
                         field_ids: Optional[Sequence[str]] = None, jobs: int = 1) -> list:
    """lhs/rhs of the V-form estimate for every (field, h, eps), in that nesting order."""
    if not fields or not hs or not epsilons:
        raise ValueError("empty sweep configuration")
    ids = list(field_ids) if field_ids is not None else [f"f{i}" for i in range(len(fields))]
    items = [(ids[i], f, h, eps, T0, grid) for i, f in enumerate(fields) for h in hs for eps in epsilons]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_item, items))
    return [_sweep_item(it) for it in items]


def max_ratio_by_h(reports: Sequence[CarlemanReport]) -> dict:
    out: dict = {}
    for r in reports:
        out[r.h] = max(out.get(r.h, 0.0), r.ratio)
    return out
