import numpy as np
import pytest

from sbpgreen.errors import SingularSystem, UnstableStep
from sbpgreen.green_second import invert_general_second
from sbpgreen.sat import SatFirst, SatSecond, assemble_first, assemble_second
from sbpgreen.solver import (MANUFACTURED, closed_form_inverse, convergence_csv, convergence_study,
                             default_dt, default_sat_second, energy_csv, integrate, solve_steady,
                             trajectory_csv)
from sbpgreen.stability import stable_singular_witness

from conftest import first_op, second_op


def test_advection_exact_for_linear_solution():
    sys = assemble_first(first_op("D1_21", 32), SatFirst(-1.0))
    x = sys.grid.x
    for route in ("lu", "closed_form", "injection"):
        sol = solve_steady(sys, 1.0, 0.0, route=route)
        assert np.max(np.abs(sol.v - x)) < 1e-13
        assert sol.residual < 1e-12


@pytest.mark.parametrize("sigma", [-0.7, -1.0, -4.0])
def test_advection_exact_for_any_penalty(sigma):
    sys = assemble_first(first_op("D1_42", 16), SatFirst(sigma))
    assert np.allclose(solve_steady(sys, 1.0).v, sys.grid.x, atol=1e-12)


def test_heat_injection_route_is_exact():
    op = second_op("N20", 32)
    sys = assemble_second(op, default_sat_second(op))
    x = op.grid.x
    sol = solve_steady(sys, 1.0, route="injection")
    assert np.max(np.abs(sol.v - x * (1 - x) / 2)) < 1e-13


def test_heat_finite_penalty_boundary_error():
    # weak imposition leaves an O(h^2) offset; only the injection limit is exact
    op = second_op("N20", 32)
    s = default_sat_second(op)
    sys = assemble_second(op, s)
    v = solve_steady(sys, 1.0).v
    h = op.grid.h
    assert v[0] == pytest.approx(-(h / 2) / (s.sigmaL + s.tauL / h), rel=1e-10)
    assert np.max(np.abs(v - op.grid.x * (1 - op.grid.x) / 2)) < h * h


def test_injection_needs_dirichlet():
    op = second_op("N21", 8)
    sys = assemble_second(op, SatSecond.symmetric(-10.0, 0.5, 1.0, 1.0))
    with pytest.raises(ValueError):
        solve_steady(sys, 1.0, route="injection")


def test_injection_with_boundary_data():
    op = second_op("N42", 16)
    sys = assemble_second(op, default_sat_second(op))
    sol = solve_steady(sys, 0.0, gL=2.0, gR=-1.0, route="injection")
    assert np.allclose(sol.v, 2.0 * (1 - op.grid.x) - op.grid.x, atol=1e-12)


def test_double_neumann_steady_is_singular():
    op = second_op("N20", 8)
    sys = assemble_second(op, SatSecond(-1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0))
    with pytest.raises(SingularSystem):
        solve_steady(sys, 1.0)
    with pytest.raises(SingularSystem):
        solve_steady(sys, 1.0, route="closed_form")


def test_bad_route():
    sys = assemble_first(first_op("D1_21", 8), SatFirst())
    with pytest.raises(ValueError):
        solve_steady(sys, 1.0, route="magic")


@pytest.mark.parametrize("variant", ["N20", "N21", "N42", "W20"])
def test_routes_agree(variant, rng):
    op = second_op(variant, 14)
    xiT = invert_general_second(assemble_second(op, SatSecond.symmetric(-3.0, 0.0))).xiT
    for _ in range(5):
        s = SatSecond(*(-rng.uniform(1.2, 4, 2) * xiT), *rng.uniform(0, 1, 2),
                      *rng.uniform(0.5, 2, 2), *rng.uniform(0, 0.5, 2))
        sys = assemble_second(op, s)
        f = rng.standard_normal(15)
        a = solve_steady(sys, f, 0.3, -0.2, "lu").v
        b = solve_steady(sys, f, 0.3, -0.2, "closed_form").v
        assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(a)))


def test_point_source_reciprocity():
    op = second_op("N42", 12)
    sys = assemble_second(op, SatSecond.symmetric(-30.0, 1.0))
    hdiag = np.diag(op.H)
    i, j = 3, 8
    vi = solve_steady(sys, np.eye(13)[i] / hdiag).v
    vj = solve_steady(sys, np.eye(13)[j] / hdiag).v
    assert vi[j] == pytest.approx(vj[i], abs=1e-10)
    assert np.allclose(vi, closed_form_inverse(sys)[:, i], atol=1e-10)


def test_advection_energy_decays():
    sys = assemble_first(first_op("D1_42", 32), SatFirst(-1.0))
    run = integrate(sys, lambda x: np.sin(np.pi * x), 0.5)
    assert run.energy_nonincreasing()
    assert run.step_energy[-1] < run.step_energy[0]


def test_heat_energy_decays_at_singular_witness():
    op = second_op("N21", 16)
    sys = assemble_second(op, stable_singular_witness(op))
    run = integrate(sys, lambda x: np.cos(3 * x), 0.05)
    assert run.energy_nonincreasing()


def test_unstable_inflow_penalty_detected():
    sys = assemble_first(first_op("D1_21", 32), SatFirst(1.0))
    with pytest.raises(UnstableStep) as info:
        integrate(sys, lambda x: np.sin(np.pi * x), 1.0)
    assert info.value.step >= 1 and info.value.growth > 0


def test_forced_run_matches_steady_state():
    op = second_op("N20", 16)
    sys = assemble_second(op, default_sat_second(op))
    run = integrate(sys, 0.0, 3.0, f=lambda t, x: np.ones_like(x))
    steady = solve_steady(sys, 1.0).v
    assert np.max(np.abs(run.trajectory[-1] - steady)) < 1e-6


def test_default_dt_caps():
    op = second_op("N20", 16)
    sys = assemble_second(op, default_sat_second(op))
    assert default_dt(sys) <= 0.25 * op.grid.h ** 2
    adv = assemble_first(first_op("D1_21", 16), SatFirst(-1.0))
    assert default_dt(adv) <= 0.25 / 16


def test_output_every_and_csv():
    sys = assemble_first(first_op("D1_21", 8), SatFirst(-1.0))
    run = integrate(sys, 1.0, 0.25, dt=0.01, output_every=5)
    assert len(run.times) == 6
    lines = trajectory_csv(run).splitlines()
    assert lines[0].startswith("t,v_0") and lines[0].endswith("energy")
    assert len(energy_csv(run).splitlines()) == 27


def test_convergence_second_order():
    rows = convergence_study("N20", None, "sin", [16, 32, 64])
    assert rows[-1].rate == pytest.approx(2.0, abs=0.1)
    assert convergence_csv(rows).splitlines()[0] == "n,h,error,rate"


def test_convergence_quadratic_exact_with_injection():
    rows = convergence_study("N20", None, "quadratic", [8, 16, 32], route="injection")
    assert max(r.error for r in rows) < 1e-13


def test_convergence_advection_fourth_order():
    rows = convergence_study("D1_42", None, "sin", [32, 64, 128])
    assert rows[-1].rate >= 3.0 - 0.2


def test_convergence_needs_three_sizes():
    with pytest.raises(ValueError):
        convergence_study("N20", None, MANUFACTURED["sin"], [8, 16])
