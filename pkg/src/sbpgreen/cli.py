"""Command-line front end.

Exit codes: 0 success, 1 verification or table mismatch, 2 usage error,
3 singular system.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import export
from .errors import (DegenerateBC, GridTooSmall, NotCentrosymmetric, NotWideStencil, OddN,
                     SingularMatrix, SingularSystem, UnstableStep)
from .green_first import closed_form_21, closed_form_42, invert_general_first
from .green_second import invert_general_second, singularity_check, xi_scalars
from .linalg import rank_deficient
from .operators import FIRST_VARIANTS, Grid, build_first, build_second, normalize_variant, verify_sbp
from .sat import (SatFirst, SatSecond, assemble_first, assemble_second, dual_consistent_tau,
                  stability_first, stability_second)
from .solver import (closed_form_inverse, default_sat_second, energy_csv, integrate, solve_steady,
                     trajectory_csv)
from .stability import (qrtab_report, rows_to_csv, rows_to_json, rows_to_text,
                        stable_singular_witness, table1_report, verify_theorem3)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_SINGULAR = 0, 1, 2, 3
RESIDUAL_TOL = 1e-10
INVERT_TOL = 1e-9


class UsageError(Exception):
    pass


def precision() -> str:
    p = os.environ.get("SBPGREEN_PRECISION", "double").lower()
    if p not in ("double", "exact"):
        raise UsageError("SBPGREEN_PRECISION must be 'double' or 'exact'")
    return p


# --- argument parsing -----------------------------------------------------------


def _add_common(p, variant_default="N20", n_default=16):
    p.add_argument("--variant", default=variant_default, type=normalize_variant)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--out", type=Path, default=Path("sbpgreen_out"))
    p.add_argument("--format", choices=("csv", "json", "text"), default="text")
    p.add_argument("--seed", type=int, default=0)


def _add_sat(p):
    p.add_argument("--eq", choices=("advection", "heat"), default="heat")
    for name in ("sigmaL", "sigmaR", "tauL", "tauR"):
        p.add_argument(f"--{name}", type=float, default=None)
    for name in ("alphaL", "alphaR"):
        p.add_argument(f"--{name}", type=float, default=1.0)
    for name in ("betaL", "betaR"):
        p.add_argument(f"--{name}", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbpgreen", description="SBP-SAT operators and their discrete Green's functions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an operator and verify its SBP properties")
    _add_common(p)

    p = sub.add_parser("invert", help="invert the penalized matrix")
    _add_common(p)
    _add_sat(p)
    p.add_argument("--closed-form", action="store_true")
    p.add_argument("--expect-singular", action="store_true")
    p.add_argument("--stable-singular-witness", action="store_true")

    p = sub.add_parser("report", help="reproduce tables and theorem checks")
    p.add_argument("table", choices=("table1", "qrtab", "theorem3"))
    _add_common(p)
    p.add_argument("--n-from", type=int, default=8)
    p.add_argument("--n-to", type=int, default=12)

    p = sub.add_parser("solve", help="steady or transient solves")
    p.add_argument("mode", choices=("steady", "transient"))
    _add_common(p)
    _add_sat(p)
    p.add_argument("--f", choices=("one", "zero", "sin"), default="one")
    p.add_argument("--gL", type=float, default=0.0)
    p.add_argument("--gR", type=float, default=0.0)
    p.add_argument("--route", choices=("lu", "closed_form", "injection"), default="lu")
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--v0", choices=("sin", "random"), default="sin")
    p.add_argument("--green-compare", action="store_true")
    return parser


# --- helpers ------------------------------------------------------------------


def _grid(args) -> Grid:
    return Grid(args.n, args.ell)


def _is_first(args) -> bool:
    return args.eq == "advection"


def _first_variant(args) -> str:
    return args.variant if args.variant in FIRST_VARIANTS else "D1_21"


def _sat_second(args, op) -> SatSecond:
    """SAT from flags; missing sigma uses the default, missing tau is dual consistent."""
    alpha = (args.alphaL, args.alphaR)
    beta = (args.betaL, args.betaR)
    if args.sigmaL is None and args.sigmaR is None and args.tauL is None and args.tauR is None:
        if alpha[0] == alpha[1] and beta[0] == beta[1] and alpha[0] != 0:
            return default_sat_second(op, alpha[0], beta[0])
    sig, tau = [], []
    for s, t, a, b in ((args.sigmaL, args.tauL, alpha[0], beta[0]), (args.sigmaR, args.tauR, alpha[1], beta[1])):
        if s is None:
            xiT = xi_scalars(op).xiT
            # a degenerate condition (alpha + beta*xi_T = 0) keeps the Dirichlet default
            den = a + b * xiT
            s = -2.0 * xiT / (den if den != 0 else 1.0)
        if t is None:
            t = dual_consistent_tau(s, a, b) if a != 0 else 1.0
        sig.append(s)
        tau.append(t)
    return SatSecond(sig[0], sig[1], tau[0], tau[1], alpha[0], alpha[1], beta[0], beta[1])


def _system(args):
    grid = _grid(args)
    if _is_first(args):
        op = build_first(_first_variant(args), grid)
        sat = SatFirst(-1.0 if args.sigmaL is None else args.sigmaL)
        return assemble_first(op, sat)
    op = build_second(args.variant, grid)
    if getattr(args, "stable_singular_witness", False):
        sat = stable_singular_witness(op, args.alphaL, args.betaL)
    else:
        sat = _sat_second(args, op)
    return assemble_second(op, sat)


def _emit(args, payload: dict, text: str | None = None):
    if args.format == "json":
        sys.stdout.write(export.to_json(payload))
    else:
        sys.stdout.write(text if text is not None else export.to_json(payload))


# --- commands -----------------------------------------------------------------


def cmd_build(args) -> int:
    grid = _grid(args)
    v = args.variant
    op = build_first(v, grid) if v in FIRST_VARIANTS else build_second(v, grid)
    out = args.out
    export.write_text(out / "H.csv", export.matrix_csv(op.H))
    if v in FIRST_VARIANTS:
        export.write_text(out / "Q.csv", export.matrix_csv(op.Q))
        export.write_text(out / "D1.csv", export.matrix_csv(op.D1))
    else:
        export.write_text(out / "A.csv", export.matrix_csv(op.A))
        export.write_text(out / "D2.csv", export.matrix_csv(op.D2))
        export.write_text(out / "dL.csv", export.vector_csv(op.dL))
        export.write_text(out / "dR.csv", export.vector_csv(op.dR))
    rep = verify_sbp(op)
    payload = rep.to_dict()
    payload["ok"] = rep.ok(RESIDUAL_TOL)
    export.write_text(out / "report.json", export.to_json(payload))
    lines = [f"{v} n={op.n}: max residual {rep.max_residual():.3e}"]
    if rep.min_eig is not None:
        lines.append(f"min eigenvalue of h*A: {rep.min_eig:.3e}")
    lines.append("OK" if payload["ok"] else "FAILED")
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK if payload["ok"] else EXIT_MISMATCH


def _closed_form_matrix(sys_):
    if sys_.equation == "advection" and precision() == "exact":
        grid, sigma = sys_.grid, Fraction(sys_.sat.sigmaL)
        if sys_.op.variant == "D1_21":
            return np.array(closed_form_21(grid, sigma), dtype=float)
        if grid.n % 2 == 0:
            return np.array(closed_form_42(grid, sigma, exact=True), dtype=float)
    return closed_form_inverse(sys_)


def cmd_invert(args) -> int:
    sys_ = _system(args)
    out = args.out
    payload = {"equation": sys_.equation, "variant": sys_.op.variant, "n": sys_.grid.n}
    if sys_.equation == "heat":
        xi = xi_scalars(sys_.op)
        verdict = singularity_check(sys_.sat, xi, K=sys_.K, ell=sys_.grid.ell)
        stab = stability_second(sys_.sat, xi.xiT)
        payload.update(sat=sys_.sat.to_dict(), xi=xi.to_dict(), singularity=verdict.to_dict(),
                       stability=stab.to_dict())
        singular = verdict.singular
        if not verdict.agrees:
            payload["error"] = "analytic verdict and rank test disagree"
            _emit(args, payload)
            return EXIT_MISMATCH
        if args.stable_singular_witness:
            payload["stable_and_singular"] = bool(stab.stable and singular)
    else:
        singular = sys_.sat.sigmaL == 0 or rank_deficient(sys_.K)
        payload.update(sigmaL=sys_.sat.sigmaL, stability=stability_first(sys_.sat), singular=singular)
    export.write_text(out / "report.json", export.to_json(payload))
    if singular:
        if args.expect_singular or args.stable_singular_witness:
            text = "singular as expected"
            if args.stable_singular_witness:
                text = "stable AND singular" if payload.get("stable_and_singular") else "witness check failed"
            _emit(args, payload, text + "\n")
            if args.stable_singular_witness and not payload.get("stable_and_singular"):
                return EXIT_MISMATCH
            return EXIT_OK
        _emit(args, payload, "singular system\n")
        return EXIT_SINGULAR
    if args.expect_singular or args.stable_singular_witness:
        _emit(args, payload, "expected a singular system but it is invertible\n")
        return EXIT_MISMATCH
    if sys_.equation == "heat":
        Kinv = invert_general_second(sys_).Kinv
    else:
        Kinv = invert_general_first(sys_).Kinv
    n1 = sys_.grid.n + 1
    residual = float(np.max(np.abs(sys_.K @ Kinv - np.eye(n1))))
    payload["residual"] = residual
    export.write_text(out / "Kinv.csv", export.matrix_csv(Kinv))
    ok = residual <= INVERT_TOL
    if args.closed_form:
        cf = _closed_form_matrix(sys_)
        export.write_text(out / "Kinv_closed_form.csv", export.matrix_csv(cf))
        payload["closed_form_deviation"] = float(np.max(np.abs(cf - Kinv)))
        ok = ok and payload["closed_form_deviation"] <= 1e-9 * max(1.0, np.max(np.abs(Kinv)))
    payload["ok"] = bool(ok)
    export.write_text(out / "report.json", export.to_json(payload))
    text = f"residual {residual:.3e}"
    if args.closed_form:
        text += f", closed-form deviation {payload['closed_form_deviation']:.3e}"
    _emit(args, payload, text + ("\nOK\n" if ok else "\nFAILED\n"))
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_report(args) -> int:
    out = args.out
    if args.table == "table1":
        rows = table1_report()
    elif args.table == "qrtab":
        rows = qrtab_report(args.n_from, args.n_to)
    else:
        rows = [verify_theorem3(build_second(args.variant, _grid(args)))]
    export.write_text(out / f"{args.table}.csv", rows_to_csv(rows))
    export.write_text(out / f"{args.table}.txt", rows_to_text(rows))
    if args.format == "json":
        sys.stdout.write(rows_to_json(rows) + "\n")
    elif args.format == "csv":
        sys.stdout.write(rows_to_csv(rows))
    else:
        sys.stdout.write(rows_to_text(rows))
    return EXIT_OK if all(r.ok for r in rows) else EXIT_MISMATCH


def _forcing(name):
    return {"one": 1.0, "zero": 0.0, "sin": lambda x: np.sin(np.pi * x)}[name]


def _continuous_green(equation, x, y, ell):
    if equation == "advection":
        return (y <= x).astype(float)
    return np.minimum(x, y) * (1.0 - np.maximum(x, y) / ell)


def cmd_solve(args) -> int:
    sys_ = _system(args)
    out = args.out
    x = sys_.grid.x
    if args.mode == "steady":
        sol = solve_steady(sys_, _forcing(args.f), args.gL, args.gR, args.route)
        export.write_rows(out / "steady.csv", ["x", "v"], zip(x.tolist(), sol.v.tolist()))
        payload = {"route": sol.route, "residual": sol.residual, "n": sys_.grid.n}
        if args.green_compare:
            Kinv = closed_form_inverse(sys_)
            X, Y = np.meshgrid(x, x, indexing="ij")
            G = _continuous_green(sys_.equation, X, Y, sys_.grid.ell)
            export.write_rows(out / "green_compare.csv", ["x_i", "y_j", "Kinv_ij", "G_ij"],
                              zip(X.ravel().tolist(), Y.ravel().tolist(), Kinv.ravel().tolist(), G.ravel().tolist()))
            payload["green_max_deviation"] = float(np.max(np.abs(Kinv - G)))
        _emit(args, payload, f"solved with route {sol.route}, residual {sol.residual:.3e}\n")
        return EXIT_OK if sol.residual <= 1e-9 else EXIT_MISMATCH
    rng = np.random.default_rng(args.seed)
    v0 = np.sin(np.pi * x) if args.v0 == "sin" else rng.standard_normal(x.shape)
    run = integrate(sys_, v0, args.t_end, args.dt)
    export.write_text(out / "trajectory.csv", trajectory_csv(run))
    export.write_text(out / "energy.csv", energy_csv(run))
    ok = run.energy_nonincreasing()
    payload = {"dt": run.dt, "steps": len(run.step_energy) - 1, "energy_nonincreasing": ok,
               "energy_final": float(run.step_energy[-1])}
    _emit(args, payload, f"{payload['steps']} steps, dt={run.dt:.3e}, energy non-increasing: {ok}\n")
    return EXIT_OK if ok else EXIT_MISMATCH


COMMANDS = {"build": cmd_build, "invert": cmd_invert, "report": cmd_report, "solve": cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (SingularSystem, SingularMatrix) as exc:
        sys.stderr.write(f"singular system: {exc}\n")
        return EXIT_SINGULAR
    except UnstableStep as exc:
        sys.stderr.write(f"unstable: {exc}\n")
        return EXIT_MISMATCH
    except (UsageError, GridTooSmall, OddN, NotWideStencil, NotCentrosymmetric, DegenerateBC, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
