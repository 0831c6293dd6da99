"""SAT-penalized discretization matrices and penalty classification.

Advection ``u_t + u_x = f`` with inflow data at x = 0 gives
``K = Q - sigma_L e_L e_L^T``; the heat equation with Robin data
``alpha u -/+ beta u_x = g`` at each end gives the matrix ``K`` built in
:func:`assemble_second`.  In both cases the semi-discrete scheme reads
``v_t + H^{-1} K v = f_tilde``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import SbpFirstOp, SbpSecondOp

DUAL_TOL = 1e-12
STAB_TOL = 1e-12


@dataclass(frozen=True)
class SatFirst:
    sigmaL: float = -1.0


@dataclass(frozen=True)
class SatSecond:
    """Penalty strengths (sigma, tau) and Robin coefficients (alpha, beta) per side."""

    sigmaL: float
    sigmaR: float
    tauL: float = 0.0
    tauR: float = 0.0
    alphaL: float = 1.0
    alphaR: float = 1.0
    betaL: float = 0.0
    betaR: float = 0.0

    @property
    def deltaL(self) -> float:
        return 1.0 + self.sigmaL * self.betaL - self.tauL * self.alphaL

    @property
    def deltaR(self) -> float:
        return 1.0 + self.sigmaR * self.betaR - self.tauR * self.alphaR

    def side(self, s: str):
        """``(sigma, tau, alpha, beta, delta)`` for side ``"L"`` or ``"R"``."""
        if s == "L":
            return self.sigmaL, self.tauL, self.alphaL, self.betaL, self.deltaL
        return self.sigmaR, self.tauR, self.alphaR, self.betaR, self.deltaR

    @classmethod
    def symmetric(cls, sigma, tau, alpha=1.0, beta=0.0):
        """Equal parameters on both boundaries."""
        return cls(sigma, sigma, tau, tau, alpha, alpha, beta, beta)

    def to_dict(self) -> dict:
        return {
            "sigmaL": self.sigmaL, "sigmaR": self.sigmaR,
            "tauL": self.tauL, "tauR": self.tauR,
            "alphaL": self.alphaL, "alphaR": self.alphaR,
            "betaL": self.betaL, "betaR": self.betaR,
            "deltaL": self.deltaL, "deltaR": self.deltaR,
        }


def dual_consistent_tau(sigma: float, alpha: float, beta: float) -> float:
    """The tau that makes ``delta = 1 + sigma*beta - tau*alpha`` vanish."""
    if alpha == 0:
        raise ValueError("alpha = 0: delta does not depend on tau")
    return (1.0 + sigma * beta) / alpha


@dataclass(frozen=True)
class AssembledSystem:
    """``K`` together with the map from data to the modified forcing."""

    K: np.ndarray
    op: SbpFirstOp | SbpSecondOp
    sat: SatFirst | SatSecond
    equation: str
    boundary_L: np.ndarray = field(repr=False)
    boundary_R: np.ndarray = field(repr=False)

    @property
    def H(self) -> np.ndarray:
        return self.op.H

    @property
    def grid(self):
        return self.op.grid

    def weighted_rhs(self, f, gL: float = 0.0, gR: float = 0.0) -> np.ndarray:
        """``H f_tilde`` for nodal forcing ``f``."""
        f = np.broadcast_to(np.asarray(f, dtype=float), (self.grid.n + 1,))
        return self.H @ f - self.boundary_L * gL - self.boundary_R * gR

    def forcing(self, f, gL: float = 0.0, gR: float = 0.0) -> np.ndarray:
        """``f_tilde = f - H^{-1}(...) g_L - H^{-1}(...) g_R``."""
        return self.weighted_rhs(f, gL, gR) / np.diag(self.H)


def assemble_first(op: SbpFirstOp, sat: SatFirst) -> AssembledSystem:
    K = np.array(op.Q, dtype=float)
    K[0, 0] -= sat.sigmaL
    K.setflags(write=False)
    return AssembledSystem(
        K=K, op=op, sat=sat, equation="advection",
        boundary_L=sat.sigmaL * op.eL, boundary_R=np.zeros_like(op.eR),
    )


def assemble_second(op: SbpSecondOp, sat: SatSecond) -> AssembledSystem:
    K = np.array(op.A, dtype=float)
    for s, e, d in (("L", op.eL, -op.dL), ("R", op.eR, op.dR)):
        sigma, tau, alpha, beta, _ = sat.side(s)
        m = np.array([[sigma * alpha, 1.0 + sigma * beta], [tau * alpha, tau * beta]])
        basis = np.column_stack([e, d])
        K -= basis @ m @ basis.T
    K.setflags(write=False)
    return AssembledSystem(
        K=K, op=op, sat=sat, equation="heat",
        boundary_L=sat.sigmaL * op.eL - sat.tauL * op.dL,
        boundary_R=sat.sigmaR * op.eR + sat.tauR * op.dR,
    )


def stability_first(sat: SatFirst) -> dict:
    return {
        "stable": sat.sigmaL <= -0.5,
        "dual_consistent": abs(sat.sigmaL + 1.0) <= DUAL_TOL,
    }


def _leq(lhs, rhs, tol=STAB_TOL):
    return lhs <= rhs + tol * max(1.0, abs(lhs), abs(rhs))


@dataclass
class SecondVerdict:
    """Per-side results of the three stability inequalities."""

    left: dict
    right: dict
    deltaL: float
    deltaR: float
    dual_consistent: bool

    @property
    def stable(self) -> bool:
        return all(self.left.values()) and all(self.right.values())

    def to_dict(self) -> dict:
        return {
            "left": self.left, "right": self.right,
            "deltaL": self.deltaL, "deltaR": self.deltaR,
            "dual_consistent": self.dual_consistent, "stable": self.stable,
        }


def stability_second(sat: SatSecond, xiT: float) -> SecondVerdict:
    """Energy-stability conditions written with ``h*gamma = 1/xi_T``.

    Per side: ``sigma*alpha <= 0``, ``tau*beta <= 1/xi_T`` and
    ``delta^2 <= -4 alpha (sigma/xi_T + tau)``.
    """
    if not xiT > 0:
        raise ValueError("xi_T must be positive")
    out = {}
    for s in "LR":
        sigma, tau, alpha, beta, delta = sat.side(s)
        out[s] = {
            "sigma_alpha": _leq(sigma * alpha, 0.0),
            "tau_beta": _leq(tau * beta, 1.0 / xiT),
            "delta": _leq(delta * delta, -4.0 * alpha * (sigma / xiT + tau)),
        }
    dual = abs(sat.deltaL) <= DUAL_TOL and abs(sat.deltaR) <= DUAL_TOL
    return SecondVerdict(out["L"], out["R"], sat.deltaL, sat.deltaR, dual)


def stability_before_dual(sat: SatSecond, h_gamma: float) -> SecondVerdict:
    """The same conditions in their original form with a user-supplied ``h*gamma``."""
    out = {}
    for s in "LR":
        sigma, tau, alpha, beta, _ = sat.side(s)
        cross = 1.0 + tau * alpha + sigma * beta
        out[s] = {
            "sigma_alpha": _leq(2.0 * sigma * alpha, 0.0),
            "tau_beta": _leq(2.0 * (tau * beta - h_gamma), 0.0),
            "delta": _leq(cross * cross, 4.0 * sigma * alpha * (tau * beta - h_gamma)),
        }
    dual = abs(sat.deltaL) <= DUAL_TOL and abs(sat.deltaR) <= DUAL_TOL
    return SecondVerdict(out["L"], out["R"], sat.deltaL, sat.deltaR, dual)

