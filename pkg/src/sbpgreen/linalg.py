"""Small dense linear-algebra kernels.

These serve two purposes: building blocks for the general inverse formulas
(inverting the interior blocks of Q and A) and independent oracles that the
closed-form inverses are checked against.  Matrices are plain 2-D numpy
arrays of float64; the exact helpers work on object arrays of ``Fraction``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import NotSymmetric, SingularMatrix

PIVOT_RTOL = 1e-13
RANK_RTOL = 1e-10
SYMMETRY_RTOL = 1e-12


def as_dense(m) -> np.ndarray:
    """Return ``m`` as a finite float64 2-D array (a copy)."""
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _factor(m, rtol):
    """Partial-pivoting LU.

    Returns ``(lu, perm, ok)`` where ``ok`` is False as soon as a pivot drops
    below ``rtol`` times the largest entry of the input matrix.  ``lu`` holds
    L (unit diagonal, strictly lower part) and U packed together.
    """
    a = as_dense(m)
    n, k = a.shape
    if n != k:
        raise ValueError(f"matrix must be square, got {a.shape}")
    perm = np.arange(n)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return a, perm, n == 0
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= rtol * scale:
            return a, perm, False
        if p != j:
            a[[j, p]] = a[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        a[j + 1:, j] /= a[j, j]
        a[j + 1:, j + 1:] -= np.outer(a[j + 1:, j], a[j, j + 1:])
    return a, perm, True


def _substitute(lu, perm, rhs):
    b = np.array(rhs, dtype=float)[perm]
    n = lu.shape[0]
    for i in range(1, n):
        b[i] -= lu[i, :i] @ b[:i]
    for i in range(n - 1, -1, -1):
        b[i] = (b[i] - lu[i, i + 1:] @ b[i + 1:]) / lu[i, i]
    return b


def lu_solve(m, rhs) -> np.ndarray:
    """Solve ``m x = rhs`` by LU with partial pivoting.

    ``rhs`` may be a vector or a matrix of right-hand sides (columns).

    Raises:
        SingularMatrix: if a pivot magnitude is below 1e-13 times the largest
            entry of ``m``.
    """
    lu, perm, ok = _factor(m, PIVOT_RTOL)
    if not ok:
        raise SingularMatrix("pivot below 1e-13 relative threshold")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != lu.shape[0]:
        raise ValueError("right-hand side length does not match matrix")
    if rhs.ndim == 1:
        return _substitute(lu, perm, rhs)
    return np.column_stack([_substitute(lu, perm, rhs[:, c]) for c in range(rhs.shape[1])])


def lu_inverse(m) -> np.ndarray:
    n = np.shape(m)[0]
    return lu_solve(m, np.eye(n))


def rank_deficient(m, rtol: float = RANK_RTOL) -> bool:
    """Pivot-ratio witness for a (numerically) singular square matrix."""
    _, _, ok = _factor(m, rtol)
    return not ok


def min_eig_sym(m) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Raises:
        NotSymmetric: if ``max|m - m^T| > 1e-12 * max|m|``.
    """
    a = as_dense(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-12 relative tolerance")
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def exact_inverse(m) -> np.ndarray:
    """Gauss-Jordan inverse over the rationals (object array of Fraction)."""
    rows = [[Fraction(v) for v in row] for row in m]
    n = len(rows)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(rows)]
    for j in range(n):
        p = next((i for i in range(j, n) if aug[i][j] != 0), None)
        if p is None:
            raise SingularMatrix("exactly singular")
        aug[j], aug[p] = aug[p], aug[j]
        piv = aug[j][j]
        aug[j] = [v / piv for v in aug[j]]
        for i in range(n):
            if i != j and aug[i][j] != 0:
                f = aug[i][j]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[j])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        out[i, :] = aug[i][n:]
    return out


def exact_matmul(a, b) -> np.ndarray:
    """Product of two object arrays without float coercion."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    return a.dot(b)
