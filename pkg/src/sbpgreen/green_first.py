"""Inverse of the advection matrix ``K = Q - sigma_L e_L e_L^T``.

Partitioning ``Q = [[-1/2, q^T], [-q, Qbar]]`` gives the inverse

    K^{-1} = G1 - (1/sigma_L) * 1 b^T,

with ``G1`` the bordered ``Qbar^{-1}`` and ``b^T = [1, -q^T Qbar^{-1}]``.
The general route inverts ``Qbar`` by LU; the (2,1) and (4,2) operators also
have fully explicit formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NonIntegerSequence, OddN, SingularMatrix, SingularPenalty, SingularQbar
from .exact import lucas_nu
from .linalg import lu_inverse
from .operators import Grid, MIN_N
from .sat import AssembledSystem


@dataclass(frozen=True)
class GreenFirst:
    G1: np.ndarray
    b: np.ndarray
    sigmaL: float
    Kinv: np.ndarray

    @property
    def ones(self) -> np.ndarray:
        return np.ones(self.G1.shape[0])


def invert_general_first(sys: AssembledSystem) -> GreenFirst:
    """Inverse of the advection matrix for any first-derivative operator.

    Raises:
        SingularPenalty: ``sigma_L == 0``.
        SingularQbar: the interior block of ``Q`` failed to factor.
    """
    sigma = sys.sat.sigmaL
    if sigma == 0:
        raise SingularPenalty("sigma_L = 0 makes the advection matrix singular")
    Q = np.asarray(sys.op.Q, dtype=float)
    n1 = Q.shape[0]
    try:
        qbar_inv = lu_inverse(Q[1:, 1:])
    except SingularMatrix as exc:
        raise SingularQbar("interior block of Q is singular") from exc
    G1 = np.zeros((n1, n1))
    G1[1:, 1:] = qbar_inv
    b = np.concatenate([[1.0], -Q[0, 1:] @ qbar_inv])
    Kinv = G1 - np.outer(np.ones(n1), b) / sigma
    return GreenFirst(G1=G1, b=b, sigmaL=sigma, Kinv=Kinv)


def closed_form_21(grid: Grid, sigmaL, injection_limit: bool = False) -> np.ndarray:
    """Explicit inverse for the (2,1) operator.

    Entry ``(i, j)`` is ``1 - c (-1)^j`` on and below the diagonal and
    ``(-1)^{i+j} - c (-1)^j`` above it, with ``c = 1 + 1/sigma_L``.  With
    ``injection_limit`` the ``sigma_L -> -inf`` limit (c = 1) is returned,
    which equals ``G1``.  Passing a ``Fraction`` gives an exact object array.
    """
    if injection_limit:
        c = 1
    else:
        if sigmaL == 0:
            raise SingularPenalty("sigma_L = 0 makes the advection matrix singular")
        c = 1 + 1 / sigmaL if isinstance(sigmaL, Fraction) else 1.0 + 1.0 / sigmaL
    n = grid.n
    exact = isinstance(c, (Fraction, int)) and (injection_limit or isinstance(sigmaL, Fraction))
    out = np.empty((n + 1, n + 1), dtype=object if exact else float)
    for i in range(n + 1):
        for j in range(n + 1):
            sj = -1 if j % 2 else 1
            top = 1 if j <= i else (-1 if (i + j) % 2 else 1)
            out[i, j] = top - c * sj
    return out


@dataclass(frozen=True)
class SeqTables42:
    """Exact integer sequences behind the (4,2) first-derivative inverse."""

    n: int
    nu: dict
    D: int
    C: int
    B: dict
    A: dict


def _exact_div(num: int, den: int) -> int:
    q, r = divmod(num, den)
    if r:
        raise NonIntegerSequence(f"{num} is not divisible by {den}")
    return q


def seq_tables_42(n: int) -> SeqTables42:
    """Tables ``nu_j``, ``D_n``, ``C_n``, ``B_j`` and ``A_j`` for even ``n``."""
    if n % 2:
        raise OddN("the (4,2) closed form is derived for even n only")
    if n < 4:
        raise ValueError("need n >= 4")
    m = n // 2
    nu = {j: lucas_nu(j) for j in range(-n, n + 1)}
    D = _exact_div(nu[m - 1] + nu[m - 2], 10)
    C = _exact_div(9 * nu[m - 1] + 4 * nu[m - 2], 10)
    B = {j: _exact_div(nu[j - 1] - nu[j - 2] - 6 * (-1) ** j, 60) for j in range(2, n + 1)}
    A = {}
    for j in range(1, n + 1):
        odd, even = (1, 0) if j % 2 else (0, 1)
        A[j] = _exact_div(odd * nu[m - 1] + even * nu[m - 2] - nu[m - j], 60)
    return SeqTables42(n=n, nu=nu, D=D, C=C, B=B, A=A)


def qbar_inverse_42(n: int) -> np.ndarray:
    """Exact ``Qbar^{-1} = (g_ij)``, ``1 <= i, j <= n``, as an object array.

    Index 0 of the returned array corresponds to ``i = 1``.
    """
    t = seq_tables_42(n)
    D, C, A, B = Fraction(t.D), Fraction(t.C), t.A, t.B
    g = np.empty((n, n), dtype=object)

    def put(i, j, v):
        g[i - 1, j - 1] = Fraction(v)

    c59 = 12 * C / (59 * D)
    put(1, 1, 72 * C**2 / (59**2 * D**2))
    put(1, n - 1, Fraction(12, 59) * ((12 * C**2 + 9) / (59 * D**2) - C / D))
    put(1, n, -c59)
    put(n - 1, 1, Fraction(12, 59) * (C / D - 9 / (59 * D**2)))
    put(n - 1, n - 1, 72 * C**2 / (59**2 * D**2))
    put(n - 1, n, -c59)
    put(n, 1, c59)
    put(n, n - 1, c59)
    put(n, n, 0)
    for i in range(2, n - 1):
        put(i, 1, Fraction(12, 59) * (C / D - 3 * B[n - i] / D**2))
        put(i, n - 1, 36 * (4 * C * A[i] + B[i]) / (59 * D**2) - 12 * A[i] / D)
        put(i, n, -12 * A[i] / D)
    for j in range(2, n - 1):
        put(1, j, 36 * (4 * C * A[j] + B[n - j]) / (59 * D**2) - c59)
        put(n - 1, j, 12 * A[j] / D - 36 * B[j] / (59 * D**2))
        put(n, j, 12 * A[j] / D)
    for i in range(2, n - 1):
        for j in range(2, n - 1):
            if i <= j:
                v = 144 * A[i] * A[j] / D**2 - 12 * (A[i] / D - B[i] * B[n - j] / D**2)
            else:
                v = 12 * (A[j] / D - B[j] * B[n - i] / D**2)
            put(i, j, v)
    return g


def q_times_qbar_inverse_42(n: int) -> list:
    """Closed form of the row vector ``q^T Qbar^{-1}`` (entries j = 1..n)."""
    t = seq_tables_42(n)
    D, C = Fraction(t.D), Fraction(t.C)
    head = 12 * C / (59 * D) - 1
    row = [head]
    row += [12 * t.A[j] / D - 1 for j in range(2, n - 1)]
    row += [head, Fraction(-1)]
    return row


def closed_form_42(grid: Grid, sigmaL, exact: bool = False) -> np.ndarray:
    """Explicit inverse of the (4,2) advection matrix for even ``n``.

    With ``exact=True`` the result is an object array of ``Fraction`` (``sigmaL``
    is converted exactly); otherwise it is lowered to float64.
    """
    n = grid.n
    if n % 2:
        raise OddN("the (4,2) closed form is derived for even n only")
    if n < MIN_N["D1_42"]:
        raise ValueError(f"need n >= {MIN_N['D1_42']}")
    if sigmaL == 0:
        raise SingularPenalty("sigma_L = 0 makes the advection matrix singular")
    s = Fraction(sigmaL)
    g = qbar_inverse_42(n)
    qg = q_times_qbar_inverse_42(n)
    b = [Fraction(1)] + [-v for v in qg]
    out = np.empty((n + 1, n + 1), dtype=object)
    for i in range(n + 1):
        for j in range(n + 1):
            v = -b[j] / s
            if i > 0 and j > 0:
                v += g[i - 1, j - 1]
            out[i, j] = v
    if exact:
        return out
    return np.array([[float(v) for v in row] for row in out])
