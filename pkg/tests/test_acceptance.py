"""Acceptance suite: one PASS/FAIL line per criterion.

Each test prints its verdict to the terminal (even under capture) and then
asserts it, so ``pytest -v`` shows both the line and the outcome.
"""

import time

import numpy as np
import pytest

from sbpgreen.errors import UnstableStep
from sbpgreen.green_first import closed_form_21, closed_form_42, invert_general_first
from sbpgreen.green_second import green_parts, invert_general_second, singularity_check, verify_preliminaries, xi_scalars
from sbpgreen.linalg import lu_inverse, rank_deficient
from sbpgreen.operators import Grid, build_first, build_second
from sbpgreen.sat import SatFirst, SatSecond, assemble_first, assemble_second, stability_second
from sbpgreen.solver import default_sat_second, integrate, solve_steady
from sbpgreen.stability import (qrtab_report, q_route_wide, qtilde_route, stable_singular_witness,
                                table1_report, verify_theorem3)

SECOND = ["N20", "N21", "N42", "W20"]


@pytest.fixture
def verdict(capsys):
    def report(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail
    return report


def _inf_norm(m):
    return float(np.max(np.sum(np.abs(m), axis=1)))


def test_criterion_01_first_order_round_trip(verdict):
    start = time.perf_counter()
    worst_id, worst_cf = 0.0, 0.0
    for variant, closed in (("D1_21", closed_form_21), ("D1_42", closed_form_42)):
        for n in (8, 16, 32, 64):
            grid = Grid(n)
            op = build_first(variant, grid)
            for sigma in (-1.0, -0.5, -3.0):
                sys = assemble_first(op, SatFirst(sigma))
                kinv = invert_general_first(sys).Kinv
                worst_id = max(worst_id, _inf_norm(sys.K @ kinv - np.eye(n + 1)))
                worst_cf = max(worst_cf, float(np.max(np.abs(closed(grid, sigma) - kinv))))
    elapsed = time.perf_counter() - start
    ok = worst_id <= 1e-9 and worst_cf <= 1e-9 and elapsed < 5.0
    verdict(1, ok, f"identity residual {worst_id:.2e}, closed form vs general {worst_cf:.2e}, {elapsed:.2f} s")


def test_criterion_02_zero_penalty_is_rank_deficient(verdict):
    flags = {v: rank_deficient(assemble_first(build_first(v, Grid(16)), SatFirst(0.0)).K) for v in ("D1_21", "D1_42")}
    verdict(2, all(flags.values()), f"rank deficient at sigma_L = 0: {flags}")


def test_criterion_03_small_integer_inverse(verdict):
    grid = Grid(10)
    closed = closed_form_21(grid, -1.0)
    lu = lu_inverse(assemble_first(build_first("D1_21", grid), SatFirst(-1.0)).K)
    values = set(np.unique(closed).tolist())
    ok = np.array_equal(closed, lu) and values <= {-1.0, 0.0, 1.0, 2.0}
    verdict(3, ok, f"byte-exact {np.array_equal(closed, lu)}, entries {sorted(values)}")


def _random_stable_sat(rng, xiT, xi):
    while True:
        alpha = rng.uniform(0.2, 2.0, 2)
        beta = rng.uniform(0.0, 1.0, 2)
        sigma = -rng.uniform(0.2, 5.0, 2) * xiT / (alpha + beta * xiT)
        tau = (1.0 + sigma * beta) / alpha
        if rng.random() < 0.5:
            # leave dual consistency while staying inside the stability region
            tau = tau + rng.uniform(-0.5, 0.5, 2) * np.abs(tau)
        sat = SatSecond(*sigma, *tau, *alpha, *beta)
        if stability_second(sat, xiT).stable and not singularity_check(sat, xi).singular:
            return sat


def test_criterion_04_second_order_round_trip(verdict):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for variant in SECOND:
        for n in (8, 16, 32):
            op = build_second(variant, Grid(n))
            xi = xi_scalars(op)
            for _ in range(20):
                sys = assemble_second(op, _random_stable_sat(rng, xi.xiT, xi))
                kinv = invert_general_second(sys).Kinv
                worst = max(worst, _inf_norm(sys.K @ kinv - np.eye(n + 1)))
    elapsed = time.perf_counter() - start
    verdict(4, worst <= 1e-8 and elapsed < 30.0, f"max identity residual {worst:.2e} over 240 systems, {elapsed:.2f} s")


def test_criterion_05_preliminary_identities(verdict):
    worst = {v: verify_preliminaries(build_second(v, Grid(12))).max_residual() for v in SECOND}
    verdict(5, max(worst.values()) <= 1e-10, "max residual " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_06_boundary_scalar_table(verdict):
    rows = qrtab_report(8, 12)
    err = max(max(abs(r.h_xiLR - r.expected[0]), abs(r.h_xiC - r.expected[1])) for r in rows)
    verdict(6, err <= 1e-12 and all(r.ok for r in rows), f"max deviation {err:.1e} for n = 8..12")


def test_criterion_07_borrowing_table(verdict):
    rows = table1_report()
    table_ok = all(r.ok for r in rows)
    exact = {r.variant: r.h_qtT for r in rows}
    residuals = {v: verify_theorem3(build_second(v, Grid(16))).residual for v in SECOND}
    ok = (table_ok and abs(exact["N20"] - 1.0) <= 1e-12 and abs(exact["N21"] - 2.5) <= 1e-12
          and max(residuals.values()) <= 1e-6)
    verdict(7, ok, f"table values {exact}, borrowing residual {max(residuals.values()):.1e}")


def test_criterion_08_stable_singular_witness(verdict):
    op = build_second("N21", Grid(16))
    xi = xi_scalars(op)
    sat = stable_singular_witness(op)
    stab = stability_second(sat, xi.xiT)
    third_gap = -4.0 * (sat.sigmaL / xi.xiT + sat.tauL) - sat.deltaL ** 2
    singular = rank_deficient(assemble_second(op, sat).K)
    bumped = SatSecond.symmetric(sat.sigmaL, 1.01)
    invertible = not rank_deficient(assemble_second(op, bumped).K)
    invertible = invertible and not singularity_check(bumped, xi).singular
    ok = stab.stable and abs(sat.deltaL) < 1e-14 and abs(third_gap) < 1e-12 and singular and invertible
    verdict(8, ok, f"stable {stab.stable}, third gap {third_gap:.1e}, singular {singular}, tau=1.01 invertible {invertible}")


def test_criterion_09_quadrature_routes(verdict):
    ok, details = True, []
    for n in (9, 10):
        op = build_second("W20", Grid(n))
        qL, qR, _, qT = q_route_wide(op)
        qtL, qtR, _, qtT = qtilde_route(op)
        gap = (abs(qL - qtL), abs(qR - qtR))
        ok &= abs(qT - qtT) <= 1e-11 and all(abs(g - 1.0) <= 1e-11 for g in gap)
        details.append(f"n={n} |qT-qtT|={abs(qT - qtT):.1e} LR gaps {gap[0]:.12g},{gap[1]:.12g}")
    worst = 0.0
    for v in SECOND:
        for n in (9, 10, 16):
            op = build_second(v, Grid(n))
            xi = xi_scalars(op)
            qt = qtilde_route(op)
            worst = max(worst, *(abs(a - b) * op.grid.h for a, b in zip(qt, (xi.xiL, xi.xiR, xi.xiC, xi.xiT))))
    ok &= worst <= 1e-11
    verdict(9, ok, "; ".join(details) + f"; K0 vs xi (h-scaled) {worst:.1e}")


def test_criterion_10_exact_solves(verdict):
    op = build_second("N20", Grid(32))
    x = op.grid.x
    heat = solve_steady(assemble_second(op, default_sat_second(op)), 1.0, route="injection").v
    heat_err = float(np.max(np.abs(heat - x * (1 - x) / 2)))
    adv = solve_steady(assemble_first(build_first("D1_21", Grid(32)), SatFirst(-1.0)), 1.0).v
    adv_err = float(np.max(np.abs(adv - x)))
    verdict(10, heat_err <= 1e-13 and adv_err <= 1e-13, f"heat error {heat_err:.1e}, advection error {adv_err:.1e}")


def test_criterion_11_energy_decay(verdict):
    rng = np.random.default_rng(11)
    good = 0
    for k in range(200):
        n = int(rng.integers(8, 33))
        if k % 2:
            op = build_second(SECOND[k % 4], Grid(n))
            xi = xi_scalars(op)
            sys = assemble_second(op, _random_stable_sat(rng, xi.xiT, xi))
            t_end = 0.02
        else:
            variant = "D1_42" if k % 4 == 0 and n >= 8 else "D1_21"
            sys = assemble_first(build_first(variant, Grid(n)), SatFirst(-rng.uniform(0.5, 3.0)))
            t_end = 0.3
        run = integrate(sys, rng.standard_normal(n + 1), t_end)
        good += run.energy_nonincreasing(rtol=1e-12)
    try:
        integrate(assemble_first(build_first("D1_21", Grid(32)), SatFirst(1.0)), lambda x: np.sin(np.pi * x), 1.0)
        caught = False
    except UnstableStep:
        caught = True
    verdict(11, good == 200 and caught, f"{good}/200 runs non-increasing, unstable case detected {caught}")


def test_criterion_12_wide_stencil_oscillation(verdict):
    op = build_second("W20", Grid(12))
    x = op.grid.x
    i, j = np.indices((13, 13))
    expected = np.minimum.outer(x, x) * (1 - np.maximum.outer(x, x)) * (1 + (-1.0) ** (i + j))
    err = float(np.max(np.abs(green_parts(op).G2 - expected)))
    verdict(12, err <= 1e-12, f"max deviation {err:.1e}")
