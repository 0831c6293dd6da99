"""Inverse of the SAT-penalized heat-equation matrix.

With ``G2`` the bordered inverse of the interior block ``Abar`` of ``A`` and
``x`` the node coordinates, the inverse reads

    K^{-1} = G2 + [-tau_L b_L, -tau_R b_R, 1 - x/l, x/l] Sigma^{-1}
                  [b_L^T; b_R^T; beta_L (1 - x/l)^T; beta_R x^T / l],

where ``b_L = 1 - x/l - G2 d_L``, ``b_R = x/l + G2 d_R`` and the 4x4 matrix
``Sigma`` is block lower triangular.  Its upper 2x2 block carries the penalty
parameters and its lower block the continuous boundary conditions, so ``K`` is
singular exactly when one of those two determinants vanishes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotCentrosymmetric, SingularAbar, SingularMatrix, SingularSigma
from .exact import PSI, QuadInt
from .linalg import lu_inverse, rank_deficient
from .operators import Grid, MIN_N, SbpSecondOp, build_second, is_centrosymmetric, normalize_variant
from .sat import AssembledSystem, SatSecond

XI_AGREE_TOL = 1e-11
CENTRO_TOL = 1e-10
DET_RTOL = 1e-12


@dataclass(frozen=True)
class Xi:
    """Boundary scalars ``xi_L``, ``xi_R``, ``xi_C`` and ``xi_T = xi_LR + |xi_C|``.

    ``xiT`` is ``None`` for operators that are not centrosymmetric.
    """

    xiL: float
    xiR: float
    xiC: float
    xiT: float | None

    def to_dict(self) -> dict:
        return {"xiL": self.xiL, "xiR": self.xiR, "xiC": self.xiC, "xiT": self.xiT}


@dataclass(frozen=True)
class GreenParts:
    G2: np.ndarray
    bL: np.ndarray
    bR: np.ndarray
    xi: Xi


@dataclass(frozen=True)
class GreenSecond:
    G2: np.ndarray
    bL: np.ndarray
    bR: np.ndarray
    xiL: float
    xiR: float
    xiC: float
    xiT: float | None
    Sigma: np.ndarray
    Kinv: np.ndarray

    @property
    def xi(self) -> Xi:
        return Xi(self.xiL, self.xiR, self.xiC, self.xiT)


def _g2(op: SbpSecondOp) -> np.ndarray:
    n = op.n
    try:
        inner = lu_inverse(op.A[1:n, 1:n])
    except SingularMatrix as exc:
        raise SingularAbar("interior block of A is singular") from exc
    G2 = np.zeros((n + 1, n + 1))
    G2[1:n, 1:n] = inner
    return G2


def _xi_T(op, xiL, xiR, xiC):
    if not is_centrosymmetric(op, CENTRO_TOL) or abs(xiL - xiR) > CENTRO_TOL * max(1.0, abs(xiL)):
        return None
    return 0.5 * (xiL + xiR) + abs(xiC)


def green_parts(op: SbpSecondOp) -> GreenParts:
    """``G2``, ``b_L``, ``b_R`` and the xi scalars, all by dense LU."""
    G2 = _g2(op)
    x = op.grid.x / op.grid.ell
    bL = 1.0 - x - G2 @ op.dL
    bR = x + G2 @ op.dR
    xiL = float(-op.dL @ bL)
    xiR = float(op.dR @ bR)
    xiC = float(op.dL @ bR)
    return GreenParts(G2, bL, bR, Xi(xiL, xiR, xiC, _xi_T(op, xiL, xiR, xiC)))


def xi_scalars(op: SbpSecondOp, check: bool = True) -> Xi:
    """The xi scalars as contractions of ``d`` with the ``b`` vectors.

    With ``check`` the alternative forms ``1/l + d^T G2 d`` are evaluated too
    and must agree to 1e-11 relative to ``1/h``.

    Raises:
        SingularAbar: the interior block of ``A`` is singular.
        NotCentrosymmetric: ``check`` is set and the operator is not
            centrosymmetric, so ``xi_T`` is undefined.
    """
    parts = green_parts(op)
    xi = parts.xi
    if check:
        G2, ell = parts.G2, op.grid.ell
        alt = (
            1.0 / ell + op.dL @ G2 @ op.dL,
            1.0 / ell + op.dR @ G2 @ op.dR,
            1.0 / ell + op.dL @ G2 @ op.dR,
            -op.dR @ parts.bL,
        )
        scale = 1.0 / op.grid.h
        for a, b in zip(alt, (xi.xiL, xi.xiR, xi.xiC, xi.xiC)):
            if abs(a - b) > XI_AGREE_TOL * scale:
                raise AssertionError(f"xi routes disagree: {a!r} vs {b!r}")
        if xi.xiT is None:
            raise NotCentrosymmetric("xi_T is only defined for centrosymmetric operators")
    return xi


def sigma_matrix(sat: SatSecond, xi: Xi, ell: float = 1.0) -> np.ndarray:
    """The 4x4 matrix ``Sigma`` assembled entry by entry."""
    s = sat
    return np.array([
        [s.sigmaL + s.tauL * xi.xiL, -s.tauR * xi.xiC, 0.0, 0.0],
        [-s.tauL * xi.xiC, s.sigmaR + s.tauR * xi.xiR, 0.0, 0.0],
        [s.deltaL, 0.0, s.alphaL + s.betaL / ell, -s.betaL / ell],
        [0.0, s.deltaR, -s.betaR / ell, s.alphaR + s.betaR / ell],
    ])


def _block_singular(block, magnitude) -> tuple[bool, float]:
    """2x2 determinant test relative to the size of the terms entering it.

    ``magnitude`` holds, entry by entry, the sum of absolute values of the
    terms that were added to form ``block``, so cancellation inside an entry
    (as on the singular locus) is measured against the original sizes.
    """
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    scale = magnitude[0, 0] * magnitude[1, 1] + magnitude[0, 1] * magnitude[1, 0]
    return bool(abs(det) <= DET_RTOL * scale), float(det)


def _sigma_magnitude(sat: SatSecond, xi: Xi, ell: float) -> np.ndarray:
    s = sat
    return np.array([
        [abs(s.sigmaL) + abs(s.tauL * xi.xiL), abs(s.tauR * xi.xiC), 0.0, 0.0],
        [abs(s.tauL * xi.xiC), abs(s.sigmaR) + abs(s.tauR * xi.xiR), 0.0, 0.0],
        [0.0, 0.0, abs(s.alphaL) + abs(s.betaL / ell), abs(s.betaL / ell)],
        [0.0, 0.0, abs(s.betaR / ell), abs(s.alphaR) + abs(s.betaR / ell)],
    ])


@dataclass
class SingularityVerdict:
    """Analytic singularity test of ``Sigma`` plus an optional rank witness.

    ``condition`` is ``"BC"`` (continuous boundary conditions admit a
    constant-free null solution), ``"penalty"`` (the penalty block is
    singular) or ``"none"``.  ``zeta`` is the parameter in
    ``sigma_L = -(xi_L + zeta |xi_C|) tau_L`` when the penalty block is
    singular, ``xi_C != 0`` and both ``tau`` are nonzero.
    """

    singular: bool
    condition: str
    det_bc: float
    det_penalty: float
    zeta: float | None = None
    rank_witness: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def agrees(self) -> bool:
        return self.rank_witness is None or self.rank_witness == self.singular

    def to_dict(self) -> dict:
        return {
            "singular": self.singular, "condition": self.condition,
            "det_bc": self.det_bc, "det_penalty": self.det_penalty,
            "zeta": self.zeta, "rank_witness": self.rank_witness,
            "agrees": self.agrees, "notes": list(self.notes),
        }


def singularity_check(sat: SatSecond, xi: Xi, K=None, ell: float = 1.0) -> SingularityVerdict:
    """Decide from ``Sigma`` whether the penalized matrix is singular.

    When ``K`` is supplied the verdict is cross-checked with a pivot-based
    rank test; :attr:`SingularityVerdict.agrees` reports the outcome.
    """
    S = sigma_matrix(sat, xi, ell)
    mag = _sigma_magnitude(sat, xi, ell)
    bc_sing, det_bc = _block_singular(S[2:, 2:], mag[2:, 2:])
    pen_sing, det_pen = _block_singular(S[:2, :2], mag[:2, :2])
    condition = "BC" if bc_sing else ("penalty" if pen_sing else "none")
    verdict = SingularityVerdict(bc_sing or pen_sing, condition, det_bc, det_pen)
    if bc_sing and pen_sing:
        verdict.notes.append("penalty block is singular as well")
    if pen_sing and xi.xiC != 0 and sat.tauL != 0 and sat.tauR != 0:
        verdict.zeta = float(-(sat.sigmaL / sat.tauL + xi.xiL) / abs(xi.xiC))
        if verdict.zeta < 0:
            verdict.notes.append("zeta < 0: such penalties are not covered by the stability analysis")
    if K is not None:
        verdict.rank_witness = rank_deficient(K)
    return verdict


def _sigma_inverse(S: np.ndarray) -> np.ndarray:
    """Inverse of the block lower triangular ``Sigma`` via 2x2 adjugates."""

    def inv2(m):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det

    top = inv2(S[:2, :2])
    bottom = inv2(S[2:, 2:])
    out = np.zeros((4, 4))
    out[:2, :2] = top
    out[2:, 2:] = bottom
    out[2:, :2] = -bottom @ S[2:, :2] @ top
    return out


def kinv_from_parts(G2, bL, bR, xi: Xi, sat: SatSecond, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """``(K^{-1}, Sigma)`` assembled from ``G2``, the ``b`` vectors and ``xi``.

    Raises:
        SingularSigma: ``Sigma`` is singular; ``condition`` names the block.
    """
    ell = grid.ell
    verdict = singularity_check(sat, xi, ell=ell)
    if verdict.singular:
        raise SingularSigma(f"Sigma is singular ({verdict.condition} block)", verdict.condition)
    S = sigma_matrix(sat, xi, ell)
    x = grid.x / ell
    left = np.column_stack([-sat.tauL * bL, -sat.tauR * bR, 1.0 - x, x])
    right = np.vstack([bL, bR, sat.betaL * (1.0 - x), sat.betaR * x])
    return G2 + left @ _sigma_inverse(S) @ right, S


def invert_general_second(sys: AssembledSystem) -> GreenSecond:
    """Assemble the inverse of the penalized heat matrix.

    Raises:
        SingularAbar: the interior block of ``A`` is singular.
        SingularSigma: ``Sigma`` is singular; ``condition`` names the block.
    """
    parts = green_parts(sys.op)
    xi = parts.xi
    Kinv, S = kinv_from_parts(parts.G2, parts.bL, parts.bR, xi, sys.sat, sys.op.grid)
    return GreenSecond(
        G2=parts.G2, bL=parts.bL, bR=parts.bR,
        xiL=xi.xiL, xiR=xi.xiR, xiC=xi.xiC, xiT=xi.xiT,
        Sigma=S, Kinv=Kinv,
    )


# --- closed forms -------------------------------------------------------------


def _green_continuous(x, ell):
    """``x_min (1 - x_max / l)`` on the node grid."""
    lo = np.minimum.outer(x, x)
    hi = np.maximum.outer(x, x)
    return lo * (1.0 - hi / ell)


@dataclass(frozen=True)
class Seq42:
    """Exact rational ``P_i`` (for the requested indices) and ``Q_n``."""

    n: int
    P: dict
    Q: Fraction


_U = QuadInt(37, 8, 3)  # 51 - 2/psi


def seq_42(n: int) -> Seq42:
    """``P_i`` for ``0 <= i <= n`` and ``Q_n``, exactly.

    Both are ``(w - conj(w)) / (psi - 1/psi)`` for some ``w`` in Z[sqrt 3];
    with ``psi - 1/psi = 8 sqrt 3`` this is the sqrt-3 coefficient of ``w``
    divided by 4.
    """
    P = {i: Fraction((_U * PSI ** (i - 2)).b, 4) for i in range(0, n + 1)}
    Q = Fraction((_U * _U * PSI ** (n - 4)).b, 4)
    return Seq42(n, P, Q)


@dataclass(frozen=True)
class ClosedFormSecond:
    G2: np.ndarray
    bL: np.ndarray
    bR: np.ndarray
    xi: Xi


def _closed_n42(grid: Grid):
    n, h, ell = grid.n, grid.h, grid.ell
    s = seq_42(n)
    P, Q = s.P, s.Q
    kappa = np.zeros((n + 1, n + 1))
    for i in range(2, n - 1):
        for j in range(2, n - 1):
            kappa[i, j] = float(-(P[j] * P[n - i] if j <= i else P[i] * P[n - j]) / Q)
    for k in range(2, n - 1):
        kappa[1, k] = kappa[k, 1] = float(-P[n - k] / Q)
        kappa[n - 1, k] = kappa[k, n - 1] = float(-P[k] / Q)
    kappa[1, 1] = kappa[n - 1, n - 1] = float(-P[n - 2] / (2 * Q) - Fraction(11, 118))
    kappa[1, n - 1] = kappa[n - 1, 1] = float(-P[2] / (2 * Q))
    G2 = _green_continuous(grid.x, ell)
    G2[1:n, 1:n] += h * kappa[1:n, 1:n]
    G2[[0, n], :] = 0.0
    G2[:, [0, n]] = 0.0
    bL = np.zeros(n + 1)
    bL[0] = 1.0
    bL[1] = float(Fraction(-85, 118) + Fraction(17, 2) * P[n - 2] / Q)
    for i in range(2, n - 1):
        bL[i] = float(17 * P[n - i] / Q)
    bL[n - 1] = float(17 / Q)
    xiLR = float(Fraction(2417, 354) - 17**2 * P[n - 2] / (2 * Q)) / h
    xiC = float(17**2 / Q) / h
    return G2, bL, xiLR, xiC


def closed_form_second(variant: str, grid: Grid) -> ClosedFormSecond:
    """Explicit ``G2``, ``b_L``, ``b_R`` and xi scalars for the built-in operators.

    Raises:
        GridTooSmall: ``n`` is below the variant's minimum.
    """
    variant = normalize_variant(variant)
    build_second(variant, grid)  # validates variant and size
    n, h, ell, x = grid.n, grid.h, grid.ell, grid.x
    if variant in ("N20", "N21"):
        G2 = _green_continuous(x, ell)
        bL = np.zeros(n + 1)
        bL[0] = 1.0
        if variant == "N20":
            xiLR = 1.0 / h
        else:
            bL[1] = -0.5
            xiLR = 2.5 / h
        xiC = 0.0
    elif variant == "W20":
        idx = np.arange(n + 1)
        parity = 1.0 + (-1.0) ** np.add.outer(idx, idx)
        G2 = _green_continuous(x, ell) * parity
        bL = (-1.0) ** idx * (1.0 - idx / n)
        xiLR = 2.0 / h - 1.0 / ell
        xiC = -((-1.0) ** n) / ell
    else:
        G2, bL, xiLR, xiC = _closed_n42(grid)
    bR = bL[::-1].copy()
    xi = Xi(xiLR, xiLR, xiC, xiLR + abs(xiC))
    return ClosedFormSecond(G2=G2, bL=bL, bR=bR, xi=xi)


def table_qr_42(n: int) -> tuple[float, float]:
    """``(h xi_LR, h xi_C)`` for the (4,2) operator from exact arithmetic."""
    if n < MIN_N["N42"]:
        raise ValueError(f"need n >= {MIN_N['N42']}")
    s = seq_42(n)
    return (
        float(Fraction(2417, 354) - 17**2 * s.P[n - 2] / (2 * s.Q)),
        float(17**2 / s.Q),
    )


# --- identity checks ----------------------------------------------------------


@dataclass
class PreliminaryReport:
    variant: str
    n: int
    residuals: dict

    def max_residual(self) -> float:
        return max(self.residuals.values())

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_residual() <= tol

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "residuals": dict(self.residuals),
                "max_residual": self.max_residual()}


def _maxabs(v) -> float:
    return float(np.max(np.abs(v)))


def verify_preliminaries(op: SbpSecondOp) -> PreliminaryReport:
    """Residuals of the identities linking ``A``, ``d``, ``G2`` and ``b``.

    Residuals are scaled by ``h`` where the quantity itself is O(1/h), so a
    single absolute tolerance applies to all of them.
    """
    parts = green_parts(op)
    G2, bL, bR = parts.G2, parts.bL, parts.bR
    g, n = op.grid, op.n
    h, ell, x = g.h, g.ell, g.x
    one = np.ones(n + 1)
    m = _maxabs
    eL, eR, A = op.eL, op.eR, op.A
    abar = A[1:n, 1:n]
    aL = A[1:n, 0]
    aR = A[1:n, n]
    abar_inv = lu_inverse(abar)
    xs = x[1:n]
    r = {
        "dL_consistent": max(abs(op.dL @ (ell * one - x) + 1.0), abs(op.dL @ x - 1.0)) * h,
        "dR_consistent": max(abs(op.dR @ (ell * one - x) + 1.0), abs(op.dR @ x - 1.0)) * h,
        "A_linear": max(m(A @ (ell * one - x) - (eL - eR)), m(A @ x - (eR - eL))) * h,
        "Abar_inverse_aL": m(1.0 - xs / ell + abar_inv @ aL),
        "Abar_inverse_aR": m(xs / ell + abar_inv @ aR),
        "a_L": abs(A[0, 0] - (aL @ abar_inv @ aL + 1.0 / ell)) * h,
        "a_R": abs(A[n, n] - (aR @ abar_inv @ aR + 1.0 / ell)) * h,
        "a_C": max(abs(A[0, n] - (aR @ abar_inv @ aL - 1.0 / ell)),
                   abs(A[0, n] - (aL @ abar_inv @ aR - 1.0 / ell))) * h,
        "A_G2": m(A @ G2 - (np.eye(n + 1) - np.outer(eL, 1.0 - x / ell) - np.outer(eR, x / ell))),
        "A_bL": m(A @ bL + op.dL) * h,
        "A_bR": m(A @ bR - op.dR) * h,
        "e_b": max(abs(bL[0] - 1.0), abs(bR[n] - 1.0), abs(bR[0]), abs(bL[n])),
        "G2_border": m(np.concatenate([G2[0], G2[n]])) / h,
        "dL_G2": m(op.dL @ G2 - (1.0 - x / ell - bL)),
        "dR_G2": m(op.dR @ G2 - (bR - x / ell)),
        "xiC_two_ways": abs(op.dL @ bR + op.dR @ bL) * h,
    }
    return PreliminaryReport(op.variant, n, r)


# --- export -------------------------------------------------------------------


def export_json(sat: SatSecond, xi: Xi, ell: float = 1.0) -> str:
    verdict = singularity_check(sat, xi, ell=ell)
    return json.dumps({
        "xiL": xi.xiL, "xiR": xi.xiR, "xiC": xi.xiC, "xiT": xi.xiT,
        "deltaL": sat.deltaL, "deltaR": sat.deltaR,
        "singular": verdict.singular, "condition": verdict.condition,
    }, indent=2)
