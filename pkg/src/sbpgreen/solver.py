"""Steady solves, method-of-lines time stepping and convergence studies.

The steady problem ``K v = H f_tilde`` is solved either by LU on ``K`` or by
applying an explicit inverse.  The ``injection`` route uses the inverse in
the limit of infinitely strong boundary penalties, where the data is imposed
exactly: ``v = g_L 1 + G1 H f`` for advection and
``v = g_L (1 - x/l) + g_R x/l + G2 H f`` for Dirichlet heat problems.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OddN, SingularMatrix, SingularSystem, UnstableStep
from .export import fmt
from .green_first import closed_form_21, closed_form_42, invert_general_first
from .green_second import closed_form_second, green_parts, kinv_from_parts
from .linalg import lu_solve
from .operators import Grid, build_first, build_second
from .sat import AssembledSystem, SatFirst, SatSecond, assemble_first, assemble_second

ROUTES = ("lu", "closed_form", "injection")
ENERGY_ABORT_RTOL = 1e-6
DT_FACTOR = 0.25
STRONG_STABILITY = 0.5


def _nodal(f, x):
    if f is None:
        return np.zeros_like(x)
    if callable(f):
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
    return np.broadcast_to(np.asarray(f, dtype=float), x.shape).copy()


@dataclass(frozen=True)
class SteadySolution:
    v: np.ndarray
    residual: float
    route: str


def closed_form_inverse(sys: AssembledSystem) -> np.ndarray:
    """``K^{-1}`` from the explicit formulas where available.

    The (2,1) and even-``n`` (4,2) advection inverses and the heat inverses of
    the four built-in operators use closed-form parts; anything else falls
    back to the general block formulas.
    """
    op, grid = sys.op, sys.grid
    if sys.equation == "advection":
        if op.variant == "D1_21":
            return np.asarray(closed_form_21(grid, sys.sat.sigmaL), dtype=float)
        if op.variant == "D1_42":
            try:
                return closed_form_42(grid, sys.sat.sigmaL)
            except OddN:
                pass
        return invert_general_first(sys).Kinv
    try:
        cf = closed_form_second(op.variant, grid)
        G2, bL, bR, xi = cf.G2, cf.bL, cf.bR, cf.xi
    except ValueError:
        parts = green_parts(op)
        G2, bL, bR, xi = parts.G2, parts.bL, parts.bR, parts.xi
    return kinv_from_parts(G2, bL, bR, xi, sys.sat, grid)[0]


def _injection(sys: AssembledSystem, f, gL, gR) -> np.ndarray:
    Hf = sys.H @ f
    x = sys.grid.x / sys.grid.ell
    if sys.equation == "advection":
        G1 = invert_general_first(sys).G1
        return gL * np.ones_like(x) + G1 @ Hf
    s = sys.sat
    if s.betaL != 0 or s.betaR != 0 or s.alphaL == 0 or s.alphaR == 0:
        raise ValueError("the injection route needs Dirichlet conditions (beta = 0, alpha != 0)")
    G2 = green_parts(sys.op).G2
    return (gL / s.alphaL) * (1.0 - x) + (gR / s.alphaR) * x + G2 @ Hf


def solve_steady(sys: AssembledSystem, f=1.0, gL: float = 0.0, gR: float = 0.0,
                 route: str = "lu") -> SteadySolution:
    """Solve ``K v = H f_tilde``.

    ``f`` is a callable of ``x``, an array of nodal values or a scalar.  The
    reported residual is ``||K v - H f_tilde||_inf`` divided by
    ``||K||_inf ||v||_inf + ||H f_tilde||_inf``; for the injection route it is
    measured against the unpenalized interior rows only, since the boundary
    rows are replaced by the data.

    Raises:
        SingularSystem: ``K`` (or a block needed by the chosen route) is singular.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    x = sys.grid.x
    fn = _nodal(f, x)
    rhs = sys.weighted_rhs(fn, gL, gR)
    if route == "lu":
        try:
            v = lu_solve(sys.K, rhs)
        except SingularMatrix as exc:
            raise SingularSystem("discretization matrix is singular") from exc
    elif route == "closed_form":
        v = closed_form_inverse(sys) @ rhs
    else:
        v = _injection(sys, fn, gL, gR)
    K = sys.K
    if route == "injection":
        rows = slice(1, None) if sys.equation == "advection" else slice(1, -1)
        base = K if sys.equation == "advection" else sys.op.A
        r = base[rows] @ v - (sys.H @ fn)[rows]
        scale = np.max(np.abs(base[rows]).sum(axis=1)) * np.max(np.abs(v)) + np.max(np.abs(sys.H @ fn))
    else:
        r = K @ v - rhs
        scale = np.max(np.abs(K).sum(axis=1)) * np.max(np.abs(v)) + np.max(np.abs(rhs))
    residual = float(np.max(np.abs(r)) / scale) if scale > 0 else 0.0
    return SteadySolution(v=v, residual=residual, route=route)


# --- time integration -----------------------------------------------------------


@dataclass
class TransientRun:
    times: np.ndarray
    trajectory: np.ndarray
    energy: np.ndarray
    dt: float
    scheme: str
    step_energy: np.ndarray = field(repr=False, default=None)

    def energy_nonincreasing(self, rtol: float = 1e-12) -> bool:
        """Per-step H-energy never grows by more than ``rtol * E_0``."""
        e = self.step_energy
        return bool(np.all(np.diff(e) <= rtol * e[0]))


def _weighted_norm_bound(sys: AssembledSystem) -> float:
    """``|| H^{1/2} (H^{-1} K) H^{-1/2} ||_2``, the H-norm of the spatial operator."""
    w = np.sqrt(np.diag(sys.H))
    return float(np.linalg.norm(sys.K / w[:, None] / w[None, :], 2))


def default_dt(sys: AssembledSystem, factor: float = DT_FACTOR) -> float:
    """``factor * h^p`` (``p = 2`` heat, ``p = 1`` advection), further capped at
    ``0.5 / ||H^{-1} K||_H``.

    The second cap keeps classical RK4 inside the range where one step does
    not increase the H-norm of a semibounded operator; strong penalties can
    push the operator norm well beyond the ``h^p`` scaling.
    """
    h = sys.grid.h
    base = factor * (h * h if sys.equation == "heat" else h)
    return min(base, STRONG_STABILITY / _weighted_norm_bound(sys))


def integrate(sys: AssembledSystem, v0, t_end: float, dt: float | None = None,
              f: Callable | None = None, gL: Callable | None = None, gR: Callable | None = None,
              output_every: int = 1, check_energy: bool | None = None) -> TransientRun:
    """Classical RK4 for ``v_t + H^{-1} K v = f_tilde(t)``.

    ``f(t, x)``, ``gL(t)`` and ``gR(t)`` are optional; all default to zero.
    For homogeneous runs (all three omitted) the H-energy is monitored and
    :class:`UnstableStep` is raised once it grows by more than 1e-6 of its
    initial value in a single step.
    """
    x = sys.grid.x
    hdiag = np.diag(sys.H)
    homogeneous = f is None and gL is None and gR is None
    if check_energy is None:
        check_energy = homogeneous
    dt = default_dt(sys) if dt is None else float(dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    dt = t_end / steps

    def rhs(t, v):
        fn = np.zeros_like(x) if f is None else _nodal(lambda xx: f(t, xx), x)
        wr = sys.weighted_rhs(fn, 0.0 if gL is None else gL(t), 0.0 if gR is None else gR(t))
        return (wr - sys.K @ v) / hdiag

    v = np.array(_nodal(v0, x), dtype=float)
    energy = lambda u: float(u @ (hdiag * u))
    e0 = energy(v)
    times, traj, es = [0.0], [v.copy()], [e0]
    step_e = np.empty(steps + 1)
    step_e[0] = e0
    t = 0.0
    for k in range(1, steps + 1):
        k1 = rhs(t, v)
        k2 = rhs(t + dt / 2, v + dt / 2 * k1)
        k3 = rhs(t + dt / 2, v + dt / 2 * k2)
        k4 = rhs(t + dt, v + dt * k3)
        v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = k * dt
        e = energy(v)
        step_e[k] = e
        if check_energy and e - step_e[k - 1] > ENERGY_ABORT_RTOL * max(e0, np.finfo(float).tiny):
            raise UnstableStep(f"energy grew at step {k}", k, (e - step_e[k - 1]) / e0)
        if k % output_every == 0 or k == steps:
            times.append(t)
            traj.append(v.copy())
            es.append(e)
    return TransientRun(np.array(times), np.array(traj), np.array(es), dt, sys.equation, step_e)


# --- manufactured solutions -------------------------------------------------------


@dataclass(frozen=True)
class Manufactured:
    """A smooth exact solution with its first and second derivatives."""

    name: str
    u: Callable
    du: Callable
    d2u: Callable


MANUFACTURED = {
    "sin": Manufactured("sin", lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x),
                        lambda x: -np.pi**2 * np.sin(np.pi * x)),
    "quadratic": Manufactured("quadratic", lambda x: x * (1.0 - x) / 2.0, lambda x: 0.5 - x,
                              lambda x: -np.ones_like(np.asarray(x, dtype=float))),
    "exp": Manufactured("exp", np.exp, np.exp, np.exp),
}


@dataclass(frozen=True)
class RateRow:
    n: int
    h: float
    error: float
    rate: float | None


def default_sat_second(op, alpha: float = 1.0, beta: float = 0.0) -> SatSecond:
    """Dual-consistent penalties at twice the stability threshold.

    ``sigma = -2 xi_T / (alpha + beta xi_T)`` and ``tau = (1 + sigma beta)/alpha``,
    which for Dirichlet data is ``sigma = -2 xi_T``, ``tau = 1``.
    """
    from .green_second import xi_scalars

    if alpha == 0:
        raise ValueError("the default penalties need alpha != 0")
    xiT = xi_scalars(op).xiT
    sigma = -2.0 * xiT / (alpha + beta * xiT)
    return SatSecond.symmetric(sigma, (1.0 + sigma * beta) / alpha, alpha, beta)


def mms_system(variant: str, n: int, sat=None, ell: float = 1.0) -> AssembledSystem:
    grid = Grid(n, ell)
    if variant.upper().startswith("D1"):
        op = build_first(variant, grid)
        return assemble_first(op, sat if isinstance(sat, SatFirst) else SatFirst(-1.0))
    op = build_second(variant, grid)
    if sat is None:
        s = default_sat_second(op)
    elif callable(sat):
        s = sat(op)
    else:
        s = sat
    return assemble_second(op, s)


def mms_error(sys: AssembledSystem, m: Manufactured, route: str = "lu") -> float:
    x = sys.grid.x
    ell = sys.grid.ell
    if sys.equation == "advection":
        sol = solve_steady(sys, m.du, float(m.u(0.0)), 0.0, route)
    else:
        s = sys.sat
        gL = s.alphaL * float(m.u(0.0)) - s.betaL * float(m.du(0.0))
        gR = s.alphaR * float(m.u(ell)) + s.betaR * float(m.du(ell))
        sol = solve_steady(sys, lambda xx: -m.d2u(xx), gL, gR, route)
    e = sol.v - m.u(x)
    return float(np.sqrt(e @ (np.diag(sys.H) * e)))


def convergence_study(variant: str, sat, manufactured: Manufactured | str, sizes,
                      ell: float = 1.0, route: str = "lu") -> list[RateRow]:
    """Observed H-norm error rates of steady manufactured-solution solves.

    ``sat`` may be a fixed SAT, a callable ``op -> SatSecond`` or ``None`` for
    the default dual-consistent Dirichlet choice.
    """
    sizes = list(sizes)
    if len(sizes) < 3 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing with at least three entries")
    m = MANUFACTURED[manufactured] if isinstance(manufactured, str) else manufactured
    rows = []
    for n in sizes:
        sys = mms_system(variant, n, sat, ell)
        err = mms_error(sys, m, route)
        rate = None
        if rows and err > 0 and rows[-1].error > 0:
            rate = math.log(rows[-1].error / err) / math.log(rows[-1].h / sys.grid.h)
        rows.append(RateRow(n, sys.grid.h, err, rate))
    return rows


# --- output -----------------------------------------------------------------------


def trajectory_csv(run: TransientRun) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n1 = run.trajectory.shape[1]
    w.writerow(["t", *[f"v_{i}" for i in range(n1)], "energy"])
    for t, v, e in zip(run.times, run.trajectory, run.energy):
        w.writerow([fmt(t), *map(fmt, v), fmt(e)])
    return buf.getvalue()


def energy_csv(run: TransientRun) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "t", "energy"])
    for k, e in enumerate(run.step_energy):
        w.writerow([k, fmt(k * run.dt), fmt(e)])
    return buf.getvalue()


def convergence_csv(rows: list[RateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "h", "error", "rate"])
    for r in rows:
        w.writerow([r.n, fmt(r.h), fmt(r.error), "" if r.rate is None else fmt(r.rate)])
    return buf.getvalue()
