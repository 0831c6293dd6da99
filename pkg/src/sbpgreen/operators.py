"""Summation-by-parts operator bundles on a uniform 1-D grid.

First-derivative operators satisfy ``D1 = H^{-1} Q`` with
``Q + Q^T = e_R e_R^T - e_L e_L^T``; second-derivative operators satisfy
``D2 = H^{-1}(-A + e_R d_R^T - e_L d_L^T)`` with ``A = A^T >= 0``.

Coefficients are kept as exact fractions in h-free form (``H = h*Hhat``,
``Q = Qhat``, ``A = Ahat/h``, ``d = dhat/h``) and lowered to doubles when the
matrices are assembled, so identities such as ``Q + Q^T = B`` hold exactly.

Variants:

=======  ==============================================================
D1_21    second order interior, first order boundary
D1_42    fourth order interior, second order boundary (diagonal norm)
N20      narrow-stencil second derivative, orders (2, 0)
N21      narrow-stencil second derivative, orders (2, 1)
N42      narrow-stencil second derivative, orders (4, 2)
W20      wide-stencil second derivative, D2 = D1_21 @ D1_21
=======  ==============================================================
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction as F

import numpy as np

from .errors import GridTooSmall
from .linalg import min_eig_sym

FIRST_VARIANTS = ("D1_21", "D1_42")
SECOND_VARIANTS = ("N20", "N21", "N42", "W20")

MIN_N = {"D1_21": 2, "D1_42": 8, "N20": 4, "N21": 4, "N42": 8, "W20": 4}


def normalize_variant(name: str) -> str:
    key = name.strip().upper()
    if key not in MIN_N:
        raise ValueError(f"unknown operator variant {name!r}")
    return key


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = i*h``, ``i = 0..n``, on ``[0, ell]``."""

    n: int
    ell: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise GridTooSmall(f"need at least one interval, got n={self.n}")
        if not self.ell > 0:
            raise ValueError("domain length must be positive")

    @property
    def h(self) -> float:
        return self.ell / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    def unit(self, side: str) -> np.ndarray:
        e = np.zeros(self.n + 1)
        e[0 if side == "L" else -1] = 1.0
        return e


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _lower(exact, scale=1.0):
    return _frozen(np.array([[float(v) for v in row] for row in exact]) * scale)


def _zeros(n, m=None):
    m = n if m is None else m
    out = np.empty((n, m), dtype=object)
    out.fill(F(0))
    return out


def _mirror_norm(boundary, n):
    w = [F(1)] * (n + 1)
    for i, v in enumerate(boundary):
        w[i] = v
        w[n - i] = v
    return w


@dataclass(frozen=True)
class SbpFirstOp:
    variant: str
    grid: Grid
    H: np.ndarray
    Q: np.ndarray
    D1: np.ndarray
    eL: np.ndarray
    eR: np.ndarray
    exact: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.grid.n


@dataclass(frozen=True)
class SbpSecondOp:
    variant: str
    grid: Grid
    H: np.ndarray
    A: np.ndarray
    D2: np.ndarray
    dL: np.ndarray
    dR: np.ndarray
    eL: np.ndarray
    eR: np.ndarray
    exact: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.grid.n

    @property
    def is_wide(self) -> bool:
        return self.variant.startswith("W")


def _check_size(variant, grid):
    if grid.n < MIN_N[variant]:
        raise GridTooSmall(
            f"{variant} needs n >= {MIN_N[variant]} so the boundary closures do not overlap; got n={grid.n}"
        )


# --- first derivative -------------------------------------------------------

_Q21_BOUNDARY = [[F(-1, 2), F(1, 2)]]
_Q21_INTERIOR = [F(-1, 2), F(0), F(1, 2)]
_H21 = [F(1, 2)]

_Q42_BOUNDARY = [
    [F(-1, 2), F(59, 96), F(-1, 12), F(-1, 32)],
    [F(-59, 96), F(0), F(59, 96), F(0)],
    [F(1, 12), F(-59, 96), F(0), F(59, 96), F(-1, 12)],
    [F(1, 32), F(0), F(-59, 96), F(0), F(2, 3), F(-1, 12)],
]
_Q42_INTERIOR = [F(1, 12), F(-2, 3), F(0), F(2, 3), F(-1, 12)]
_H42 = [F(17, 48), F(59, 48), F(43, 48), F(49, 48)]


def _skew_centro(boundary, interior, n):
    """Assemble Q from its left closure; the right one is Q[n-i, n-j] = -Q[i, j]."""
    q = _zeros(n + 1)
    r = len(interior) // 2
    for i in range(len(boundary), n + 1 - len(boundary)):
        for k, v in enumerate(interior):
            q[i, i - r + k] = v
    for i, row in enumerate(boundary):
        for j, v in enumerate(row):
            q[i, j] = v
            q[n - i, n - j] = -v
    return q


def build_first(variant: str, grid: Grid) -> SbpFirstOp:
    """Build the diagonal-norm first-derivative SBP operator ``(H, Q, D1)``."""
    variant = normalize_variant(variant)
    if variant not in FIRST_VARIANTS:
        raise ValueError(f"{variant} is not a first-derivative variant")
    _check_size(variant, grid)
    n = grid.n
    if variant == "D1_21":
        q = _skew_centro(_Q21_BOUNDARY, _Q21_INTERIOR, n)
        hhat = _mirror_norm(_H21, n)
    else:
        q = _skew_centro(_Q42_BOUNDARY, _Q42_INTERIOR, n)
        hhat = _mirror_norm(_H42, n)
    return _first_from_exact(variant, grid, hhat, q)


def _first_from_exact(variant, grid, hhat, q):
    n, h = grid.n, grid.h
    d1hat = np.array([[q[i, j] / hhat[i] for j in range(n + 1)] for i in range(n + 1)], dtype=object)
    return SbpFirstOp(
        variant=variant,
        grid=grid,
        H=_frozen(np.diag([float(w) * h for w in hhat])),
        Q=_lower(q),
        D1=_lower(d1hat, 1.0 / h),
        eL=_frozen(grid.unit("L")),
        eR=_frozen(grid.unit("R")),
        exact={"Hhat": list(hhat), "Q": q, "D1hat": d1hat},
    )


# --- second derivative ------------------------------------------------------

_D2_42_BOUNDARY = [
    [F(2), F(-5), F(4), F(-1)],
    [F(1), F(-2), F(1)],
    [F(-4, 43), F(59, 43), F(-110, 43), F(59, 43), F(-4, 43)],
    [F(-1, 49), F(0), F(59, 49), F(-118, 49), F(64, 49), F(-4, 49)],
]
_D2_42_INTERIOR = [F(-1, 12), F(4, 3), F(-5, 2), F(4, 3), F(-1, 12)]
_D_STENCILS = {
    "N20": [F(-1), F(1)],
    "N21": [F(-3, 2), F(2), F(-1, 2)],
    "N42": [F(-11, 6), F(3), F(-3, 2), F(1, 3)],
    "W20": [F(-1), F(1)],
}


def _boundary_vectors(stencil, n):
    dl = [F(0)] * (n + 1)
    dr = [F(0)] * (n + 1)
    for i, v in enumerate(stencil):
        dl[i] = v
        dr[n - i] = -v
    return dl, dr


def _centro(boundary, interior, n):
    """Matrix with M[n-i, n-j] = M[i, j] built from its left closure rows."""
    m = _zeros(n + 1)
    r = len(interior) // 2
    for i in range(len(boundary), n + 1 - len(boundary)):
        for k, v in enumerate(interior):
            m[i, i - r + k] = v
    for i, row in enumerate(boundary):
        for j, v in enumerate(row):
            m[i, j] = v
            m[n - i, n - j] = v
    return m


def build_second(variant: str, grid: Grid) -> SbpSecondOp:
    """Build the second-derivative SBP operator ``(H, A, D2, d_L, d_R)``."""
    variant = normalize_variant(variant)
    if variant not in SECOND_VARIANTS:
        raise ValueError(f"{variant} is not a second-derivative variant")
    _check_size(variant, grid)
    n = grid.n
    dl, dr = _boundary_vectors(_D_STENCILS[variant], n)
    if variant in ("N20", "N21"):
        hhat = _mirror_norm(_H21, n)
        ahat = _centro([[F(1), F(-1)]], [F(-1), F(2), F(-1)], n)
    elif variant == "N42":
        hhat = _mirror_norm(_H42, n)
        d2hat = _centro(_D2_42_BOUNDARY, _D2_42_INTERIOR, n)
        # A = -H D2 + e_R d_R^T - e_L d_L^T
        ahat = _zeros(n + 1)
        for i in range(n + 1):
            for j in range(n + 1):
                ahat[i, j] = -hhat[i] * d2hat[i, j]
        for j in range(n + 1):
            ahat[n, j] += dr[j]
            ahat[0, j] -= dl[j]
    else:
        first = build_first("D1_21", grid)
        hhat = first.exact["Hhat"]
        q = first.exact["Q"]
        # A = D1^T H D1 = Q^T Hhat^{-1} Q / h
        ahat = _zeros(n + 1)
        for i in range(n + 1):
            for j in range(n + 1):
                ahat[i, j] = sum((q[k, i] * q[k, j] / hhat[k] for k in range(max(0, i - 1), min(n, i + 1) + 1)), F(0))
    return _second_from_exact(variant, grid, hhat, ahat, dl, dr)


def _second_from_exact(variant, grid, hhat, ahat, dl, dr):
    n, h = grid.n, grid.h
    # h^2 D2 = Hhat^{-1}(-Ahat + e_R dR^T - e_L dL^T)
    d2hat = np.empty((n + 1, n + 1), dtype=object)
    for i in range(n + 1):
        for j in range(n + 1):
            v = -ahat[i, j]
            if i == n:
                v += dr[j]
            if i == 0:
                v -= dl[j]
            d2hat[i, j] = v / hhat[i]
    return SbpSecondOp(
        variant=variant,
        grid=grid,
        H=_frozen(np.diag([float(w) * h for w in hhat])),
        A=_lower(ahat, 1.0 / h),
        D2=_lower(d2hat, 1.0 / h**2),
        dL=_frozen(np.array([float(v) for v in dl]) / h),
        dR=_frozen(np.array([float(v) for v in dr]) / h),
        eL=_frozen(grid.unit("L")),
        eR=_frozen(grid.unit("R")),
        exact={"Hhat": list(hhat), "Ahat": ahat, "D2hat": d2hat, "dLhat": dl, "dRhat": dr},
    )


# --- verification -----------------------------------------------------------


@dataclass
class SbpReport:
    """Residuals of the SBP identities, scaled to be h-independent."""

    variant: str
    n: int
    residuals: dict
    min_eig: float | None = None

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def ok(self, tol: float = 1e-10) -> bool:
        good = self.max_residual() <= tol
        if self.min_eig is not None:
            good = good and self.min_eig >= -tol
        return good

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "n": self.n,
            "residuals": dict(self.residuals),
            "min_eig": self.min_eig,
            "max_residual": self.max_residual(),
        }


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _centro_residual(m):
    return _maxabs(m - m[::-1, ::-1])


def verify_sbp(op) -> SbpReport:
    """Evaluate every structural identity of ``op`` and report max violations.

    Matrices are rescaled by powers of h so each residual is O(1) in size:
    ``h*D1``, ``h^2*D2``, ``h*A`` and ``h*d`` are applied to ``1`` and to
    ``x/h = [0, 1, ..., n]``.
    """
    g = op.grid
    h = g.h
    one = np.ones(g.n + 1)
    idx = np.arange(g.n + 1, dtype=float)
    hdiag = np.diag(op.H)
    res = {"H_positive": float(max(0.0, -np.min(hdiag))), "H_diagonal": _maxabs(op.H - np.diag(hdiag))}
    if isinstance(op, SbpFirstOp):
        boundary = np.outer(op.eR, op.eR) - np.outer(op.eL, op.eL)
        res["sbp"] = _maxabs(op.Q + op.Q.T - boundary)
        res["D1_definition"] = _maxabs(h * op.D1 - (op.Q / hdiag[:, None]) * h)
        res["D1_one"] = _maxabs(h * op.D1 @ one)
        res["D1_x"] = _maxabs(h * op.D1 @ idx - one)
        res["centrosymmetry"] = _maxabs(op.Q + op.Q[::-1, ::-1])
        return SbpReport(op.variant, g.n, res)
    ha = h * op.A
    res["A_symmetry"] = _maxabs(ha - ha.T)
    d2def = (-op.A + np.outer(op.eR, op.dR) - np.outer(op.eL, op.dL)) / hdiag[:, None]
    res["D2_definition"] = _maxabs(h * h * (op.D2 - d2def))
    res["D2_one"] = _maxabs(h * h * op.D2 @ one)
    res["D2_x"] = _maxabs(h * h * op.D2 @ idx)
    res["dL_one"] = abs(h * op.dL @ one)
    res["dL_x"] = abs(h * op.dL @ idx - 1.0)
    res["dR_one"] = abs(h * op.dR @ one)
    res["dR_x"] = abs(h * op.dR @ idx - 1.0)
    res["centrosymmetry_A"] = _centro_residual(ha)
    res["centrosymmetry_d"] = _maxabs(h * (op.dL + op.dR[::-1]))
    if op.is_wide:
        first = build_first("D1_21", g)
        res["wide_D2_squared"] = _maxabs(h * h * (op.D2 - first.D1 @ first.D1))
        res["wide_dL"] = _maxabs(h * (op.dL - first.D1.T @ op.eL))
        res["wide_dR"] = _maxabs(h * (op.dR - first.D1.T @ op.eR))
    min_eig = min_eig_sym(0.5 * (ha + ha.T))
    return SbpReport(op.variant, g.n, res, min_eig=min_eig)


def is_centrosymmetric(op: SbpSecondOp, tol: float = 0.0) -> bool:
    h = op.grid.h
    return (
        _centro_residual(h * op.A) <= tol
        and _maxabs(h * (op.dL + op.dR[::-1])) <= tol
    )


# --- external coefficients --------------------------------------------------


def _parse_value(text: str) -> F:
    return F(text.strip())


def load_operator_csv(path, ell: float = 1.0):
    """Load an operator whose coefficients come from outside this package.

    The file starts with the header line ``variant,rows,cols``.  Each matrix
    is a section introduced by a line ``<name>:<part>,<rows>,<cols>`` where
    ``part`` is one of ``H``, ``Q`` (first derivative) or ``H``, ``A``,
    ``dL``, ``dR`` (second derivative), followed by ``i,j,value`` triplets.
    Values are exact decimals or ``p/q`` rationals and are h-free: the
    loaded operator uses ``H = h*Hhat``, ``A = Ahat/h`` and ``d = dhat/h``.
    Vectors (``dL``, ``dR``) use ``cols = 1`` and ``j = 0``; ``H`` may be
    given as its diagonal the same way.
    """
    sections: dict[str, np.ndarray] = {}
    name = None
    current = None
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["variant", "rows", "cols"]:
        raise ValueError("operator CSV must start with the header 'variant,rows,cols'")
    for r in rows[1:]:
        first = r[0].strip()
        if ":" in first:
            tag, part = first.split(":", 1)
            if name is not None and tag != name:
                raise ValueError("one operator per file")
            name = tag
            current = _zeros(int(r[1]), int(r[2]))
            sections[part.strip()] = current
            continue
        if current is None:
            raise ValueError("entry before any section header")
        i, j = int(r[0]), int(r[1])
        current[i, j] = _parse_value(r[2])
    if name is None:
        raise ValueError("no sections found")

    def vec(part):
        m = sections[part]
        return list(m[:, 0]) if m.shape[1] == 1 else [m[i, i] for i in range(m.shape[0])]

    hhat = vec("H")
    n = len(hhat) - 1
    grid = Grid(n, ell)
    if "Q" in sections:
        return _first_from_exact(name, grid, hhat, sections["Q"])
    return _second_from_exact(name, grid, hhat, sections["A"], vec("dL"), vec("dR"))
