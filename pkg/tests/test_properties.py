"""Randomized checks of the inverse formulas and the stability theory."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sbpgreen.green_first import invert_general_first
from sbpgreen.green_second import invert_general_second, singularity_check, xi_scalars
from sbpgreen.operators import Grid, build_first, build_second
from sbpgreen.sat import SatFirst, SatSecond, assemble_first, assemble_second, stability_second
from sbpgreen.solver import integrate

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

penalty = st.floats(-10.0, -0.05) | st.floats(0.05, 10.0)


@SETTINGS
@given(variant=st.sampled_from(["D1_21", "D1_42"]), n=st.integers(8, 40), sigma=penalty)
def test_first_inverse_round_trip(variant, n, sigma):
    sys = assemble_first(build_first(variant, Grid(n)), SatFirst(sigma))
    kinv = invert_general_first(sys).Kinv
    assert np.max(np.abs(sys.K @ kinv - np.eye(n + 1))) < 1e-9
    assert np.max(np.abs(kinv @ sys.K - np.eye(n + 1))) < 1e-9


@SETTINGS
@given(variant=st.sampled_from(["N20", "N21", "N42", "W20"]), n=st.integers(8, 40),
       sig=st.tuples(st.floats(0.2, 5.0), st.floats(0.2, 5.0)),
       tau=st.tuples(st.floats(-1.0, 2.0), st.floats(-1.0, 2.0)),
       alpha=st.tuples(st.floats(0.1, 2.0), st.floats(0.1, 2.0)),
       beta=st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0)))
def test_second_inverse_round_trip(variant, n, sig, tau, alpha, beta):
    op = build_second(variant, Grid(n))
    xiT = xi_scalars(op).xiT
    s = SatSecond(-sig[0] * xiT, -sig[1] * xiT, *tau, *alpha, *beta)
    v = singularity_check(s, xi_scalars(op))
    if v.singular or abs(v.det_penalty) < 1e-6 * xiT * xiT:
        return
    sys = assemble_second(op, s)
    kinv = invert_general_second(sys).Kinv
    scale = max(1.0, np.max(np.abs(kinv)))
    assert np.max(np.abs(sys.K @ kinv - np.eye(n + 1))) < 1e-9 * scale
    assert np.max(np.abs(kinv @ sys.K - np.eye(n + 1))) < 1e-9 * scale


@SETTINGS
@given(variant=st.sampled_from(["N20", "N21", "N42", "W20"]), n=st.integers(8, 24),
       sigma=st.floats(1.0, 4.0), alpha=st.floats(0.2, 2.0), beta=st.floats(0.0, 1.0),
       seed=st.integers(0, 2**16))
def test_stable_heat_energy_decays(variant, n, sigma, alpha, beta, seed):
    op = build_second(variant, Grid(n))
    xiT = xi_scalars(op).xiT
    sig = -sigma * xiT / (alpha + beta * xiT)
    s = SatSecond.symmetric(sig, (1.0 + sig * beta) / alpha, alpha, beta)
    assert stability_second(s, xiT).stable
    v0 = np.random.default_rng(seed).standard_normal(n + 1)
    run = integrate(assemble_second(op, s), v0, 0.01)
    assert run.energy_nonincreasing()


@SETTINGS
@given(n=st.integers(4, 30), ell=st.floats(0.5, 3.0))
def test_n20_green_is_continuous_green(n, ell):
    from sbpgreen.green_second import green_parts

    op = build_second("N20", Grid(n, ell))
    x = op.grid.x
    G = np.minimum.outer(x, x) * (1 - np.maximum.outer(x, x) / ell)
    G[[0, -1]] = 0
    G[:, [0, -1]] = 0
    assert np.allclose(green_parts(op).G2, G, atol=1e-12 * ell)
