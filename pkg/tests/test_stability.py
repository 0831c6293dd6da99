import dataclasses

import numpy as np
import pytest

from sbpgreen.errors import DegenerateBC, NotWideStencil
from sbpgreen.green_second import singularity_check, xi_scalars
from sbpgreen.sat import SatSecond, assemble_second, stability_second
from sbpgreen.stability import (borrow_gamma, check_witness, k0_matrix, q_route_wide, qrtab_report,
                                qtilde_route, quadrature_route, rows_to_csv, rows_to_json, rows_to_text,
                                stable_singular_witness, table1_report, verify_theorem3)
from sbpgreen.linalg import min_eig_sym

from conftest import second_op

VARIANTS = ["N20", "N21", "N42", "W20"]


def test_borrow_gamma_n20():
    op = second_op("N20", 10)
    b = borrow_gamma(op)
    assert b.h_gamma / op.grid.h == pytest.approx(1.0, rel=1e-8)


def test_borrow_gamma_limit_is_sharp():
    op = second_op("N21", 12)
    b = borrow_gamma(op)
    D = np.outer(op.dL, op.dL) + np.outer(op.dR, op.dR)
    h = op.grid.h
    assert min_eig_sym(h * (op.A - b.h_gamma * D)) >= -1e-9
    assert min_eig_sym(h * (op.A - b.h_gamma * (1 + 1e-6) * D)) < -1e-9


@pytest.mark.parametrize("variant", VARIANTS)
def test_theorem3(variant):
    rep = verify_theorem3(second_op(variant, 10))
    assert rep.ok


def test_theorem3_n21_tight():
    assert verify_theorem3(second_op("N21", 10)).residual < 1e-8


@pytest.mark.parametrize("n", [9, 10])
def test_wide_route(n):
    op = second_op("W20", n)
    qL, qR, qC, qT = q_route_wide(op)
    assert qL == pytest.approx(2 * n) and qR == pytest.approx(2 * n) and qC == 0
    qt = qtilde_route(op)
    assert qt[3] == pytest.approx(qT, abs=1e-11)
    assert abs(qL - qt[0]) == pytest.approx(1.0, abs=1e-11)


def test_wide_route_h01():
    qL, _, qC, _ = q_route_wide(second_op("W20", 10))
    assert qL == pytest.approx(20) and qC == 0


def test_narrow_route_refused():
    with pytest.raises(NotWideStencil):
        q_route_wide(second_op("N21", 10))


@pytest.mark.parametrize("variant", VARIANTS)
def test_k0_route_equals_b_route(variant):
    op = second_op(variant, 11)
    qt = qtilde_route(op)
    xi = xi_scalars(op)
    for a, b in zip(qt, (xi.xiL, xi.xiR, xi.xiC, xi.xiT)):
        assert a == pytest.approx(b, abs=1e-11 / op.grid.h)


def test_k0_is_g2_plus_rank_one():
    from sbpgreen.green_second import green_parts

    op = second_op("N42", 12)
    x = op.grid.x
    assert np.allclose(k0_matrix(op), green_parts(op).G2 + np.outer(x, x), atol=1e-12)


def test_qtilde_fourth_order_n12():
    op = second_op("N42", 12)
    assert qtilde_route(op)[3] * op.grid.h == pytest.approx(3.986350339310817 + 0.000000001093192, abs=1e-12)


def test_quadrature_route_record():
    r = quadrature_route(second_op("N20", 8))
    assert r.qL is None and r.qtT == pytest.approx(8.0)
    r = quadrature_route(second_op("W20", 8))
    assert r.qT == pytest.approx(r.qtT)


def test_fourth_order_monotone_in_n():
    vals = [r.h_xiLR + abs(r.h_xiC) for r in qrtab_report(8, 12)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 3.986350339


def test_table1_rows():
    rows = {r.variant: r for r in table1_report()}
    assert rows["N20"].h_qtT == pytest.approx(1.0, abs=1e-13)
    assert rows["N21"].h_qtT == pytest.approx(2.5, abs=1e-13)
    assert rows["N42"].h_qtT == pytest.approx(3.986391480987749, abs=1e-12)
    assert all(r.ok for r in rows.values())


def test_table_formats():
    rows = qrtab_report(8, 9)
    assert rows_to_csv(rows).splitlines()[0] == "n,h_xiLR,h_xiC,expected,ok"
    assert "3.986350339808304" in rows_to_text(rows)
    assert '"n": 8' in rows_to_json(rows)


def test_witness_dirichlet():
    op = second_op("N21", 16)
    s = stable_singular_witness(op)
    xiT = xi_scalars(op).xiT
    assert s.sigmaL == pytest.approx(-xiT) and s.tauL == 1.0 and s.deltaL == 0
    w = check_witness(op, s)
    assert w.stable and w.singular and w.rank_deficient


def test_witness_robin():
    op = second_op("N42", 12)
    xiT = xi_scalars(op).xiT
    s = stable_singular_witness(op, 1.0, 1.0)
    assert s.sigmaL == pytest.approx(-xiT / (xiT + 1)) and s.tauL == pytest.approx(1 / (xiT + 1))
    w = check_witness(op, s)
    assert w.stable and w.singular and w.rank_deficient


def test_witness_perturbations():
    op = second_op("N21", 16)
    s = stable_singular_witness(op)
    up = check_witness(op, dataclasses.replace(s, tauL=1.01, tauR=1.01))
    assert not up.singular and not up.rank_deficient
    # with sigma held fixed, increasing tau breaks the third inequality
    assert not up.stable
    down = check_witness(op, dataclasses.replace(s, tauL=0.99, tauR=0.99))
    assert down.stable and not down.singular


def test_witness_degenerate():
    with pytest.raises(DegenerateBC):
        stable_singular_witness(second_op("N20", 8), alpha=0.0, beta=0.0)


@pytest.mark.parametrize("variant", VARIANTS)
def test_stable_non_dual_configurations_are_nonsingular(variant, rng):
    op = second_op(variant, 12)
    xi = xi_scalars(op)
    found = 0
    while found < 100:
        s = SatSecond(*(-rng.uniform(0, 4 * xi.xiT, 2)), *rng.uniform(-1, 2, 2),
                      *rng.uniform(0.1, 2, 2), *rng.uniform(0, 1, 2))
        if not stability_second(s, xi.xiT).stable or abs(s.deltaL) < 1e-3 or abs(s.deltaR) < 1e-3:
            continue
        found += 1
        v = singularity_check(s, xi, K=assemble_second(op, s).K)
        assert not v.singular and v.agrees
