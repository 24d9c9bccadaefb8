import math

import pytest

from carleman_lab.fields import PacketRecipe, envelope, family, make_mode, resolve
from carleman_lab.ledger import (
    A_LABELS,
    B_LABELS,
    COMMUTATOR_LABELS,
    INDEFINITE_TERM,
    AbsorptionParams,
    GridSample,
    absorption_check,
    carleman_ratio_sweep,
    decomposition_check,
    expand_A_norm,
    expand_B_norm,
    expand_commutator,
    max_ratio_by_h,
    trouble_split,
)
from carleman_lab.quadrature import CylinderGrid

EPS, H = 0.5, 0.05
V = make_mode(2, envelope(-9.0, -6.0, 1.0), 0.7 + 0.3j) + make_mode(-1, envelope(-8.5, -6.5))
GRID = CylinderGrid.for_fields(V)


def test_label_counts():
    assert (len(A_LABELS), len(B_LABELS), len(COMMUTATOR_LABELS)) == (8, 4, 5)
    assert "c'" in A_LABELS[INDEFINITE_TERM]
    assert all(isinstance(x, str) and x.isascii() for x in A_LABELS + B_LABELS + COMMUTATOR_LABELS)


def test_decomposition_identity():
    d = decomposition_check(V, EPS, H, GRID)
    assert d.residual < 1e-7
    assert abs(d.commutator_imag) < 1e-10 * d.total
    assert d.a_norm > 0 and d.b_norm > 0
    total, parts, residual = d
    assert residual == d.residual and total == pytest.approx(parts, rel=1e-7)


def test_decomposition_refinement():
    coarse = decomposition_check(V, EPS, H, GRID).residual
    fine = decomposition_check(V, EPS, H, GRID.refined()).residual
    assert fine <= coarse or fine < 1e-9


@pytest.mark.parametrize("expand", [expand_A_norm, expand_B_norm, expand_commutator])
def test_ledgers_sum_to_targets(expand):
    L = expand(V, EPS, H, GRID)
    assert L.residual < 1e-7
    assert math.isclose(L.total, sum(v for _, v in L.entries))
    d = L.as_dict()
    assert len(d["entries"]) == len(L.entries)


def test_sample_reuse_gives_identical_ledgers():
    s = GridSample(V, EPS, H, GRID)
    assert expand_A_norm(s, EPS, H, GRID).entries == expand_A_norm(V, EPS, H, GRID).entries


@pytest.mark.parametrize("lam", [2.1, 2.5, 2.9])
def test_trouble_split(lam):
    A = expand_A_norm(V, EPS, H, GRID)
    p1, p2 = trouble_split(V, EPS, H, GRID, lam)
    assert abs(p1 + p2 - A[INDEFINITE_TERM]) <= 1e-10 * abs(A[INDEFINITE_TERM])


def test_absorption_margins_admissible_lambda():
    for item in family(-5.0):
        W = resolve(item, 0.02, EPS)
        rep = absorption_check(W, EPS, 0.02, CylinderGrid.for_fields(W), 2.5)
        assert rep.margins["first"] > 0
        assert rep.passed(1e-12)
        assert rep.inequality_slack >= -1e-12 * abs(rep.targets["first"])
        assert rep.trouble_identity_residual < 1e-8


def test_absorption_fails_below_two():
    W = make_mode(0, envelope(-9.0, -6.0))
    rep = absorption_check(W, EPS, 0.02, CylinderGrid.for_fields(W), 1.5)
    assert rep.margins["first"] < 0 and not rep.passed()


def test_absorption_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        absorption_check(V, 0.9, 0.19, GRID, 5000.0)


def test_lambda_window():
    assert AbsorptionParams().admissible
    assert not AbsorptionParams(1.5).admissible and not AbsorptionParams(3.0).admissible


def test_fixed_field_ratio_scales_like_h():
    # one fixed field has lhs/rhs proportional to h; the h-uniform statement
    # concerns the worst field at each h, which the packets supply
    reps = carleman_ratio_sweep([V], [0.04, 0.02, 0.01])
    r = [x.ratio for x in reps]
    assert r[0] / r[1] == pytest.approx(2.0, rel=0.05)
    assert r[1] / r[2] == pytest.approx(2.0, rel=0.05)


def test_sweep_ordering_and_errors():
    reps = carleman_ratio_sweep([V, PacketRecipe(-7.0)], [0.05, 0.025], [0.25, 0.5], field_ids=["a", "b"])
    assert [(r.field_id, r.h, r.epsilon) for r in reps] == [
        (f, h, e) for f in "ab" for h in (0.05, 0.025) for e in (0.25, 0.5)]
    by_h = max_ratio_by_h(reps)
    assert set(by_h) == {0.05, 0.025}
    with pytest.raises(ValueError):
        carleman_ratio_sweep([], [0.1])
    with pytest.raises(ValueError):
        carleman_ratio_sweep([make_mode(1, envelope(-6.0, -4.0))], [0.1])


def test_parallel_sweep_matches_serial():
    fields = family(-5.0)[:3]
    serial = carleman_ratio_sweep(fields, [0.05], jobs=1)
    parallel = carleman_ratio_sweep(fields, [0.05], jobs=2)
    assert serial == parallel
