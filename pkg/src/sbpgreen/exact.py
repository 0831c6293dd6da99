"""Exact arithmetic in Z[sqrt(d)] for the closed-form recurrence sequences.

The fourth-order closed forms involve powers of 4 + sqrt(15) and 7 + sqrt(48).
Those overflow doubles long before the matrices get large, and the quantities
that are actually needed (integer or rational sequences) come out of heavy
cancellation, so everything is carried exactly and only lowered at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class QuadInt:
    """The number ``a + b*sqrt(d)`` with integer ``a`` and ``b``."""

    a: int
    b: int
    d: int

    def __post_init__(self):
        if self.d <= 1 or math.isqrt(self.d) ** 2 == self.d:
            raise ValueError(f"radicand must be a non-square > 1, got {self.d}")

    def _coerce(self, other):
        if isinstance(other, QuadInt):
            if other.d != self.d:
                raise ValueError("mixed radicands")
            return other
        if isinstance(other, int):
            return QuadInt(other, 0, self.d)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadInt(-self.a, -self.b, self.d)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.a - o.a, self.b - o.b, self.d)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.a * o.a + self.d * self.b * o.b, self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def conj(self) -> QuadInt:
        return QuadInt(self.a, -self.b, self.d)

    def norm(self) -> int:
        """``(a + b sqrt d)(a - b sqrt d) = a^2 - d b^2``."""
        return self.a * self.a - self.d * self.b * self.b

    def __pow__(self, k: int):
        if k < 0:
            # only units have an inverse in Z[sqrt d]
            nrm = self.norm()
            if nrm not in (1, -1):
                raise ValueError("negative power of a non-unit")
            base = QuadInt(nrm * self.a, -nrm * self.b, self.d)
            k = -k
        else:
            base = self
        out = QuadInt(1, 0, self.d)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        if self.a >= 0 and self.b >= 0:
            return 0 if (self.a == 0 and self.b == 0) else 1
        if self.a <= 0 and self.b <= 0:
            return -1
        # opposite signs: compare a^2 with d b^2
        if self.a > 0:
            return 1 if self.norm() > 0 else -1
        return 1 if self.norm() < 0 else -1

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __float__(self):
        if self.b == 0:
            return float(self.a)
        root = math.sqrt(self.d)
        if (self.a >= 0) == (self.b >= 0) or self.a == 0:
            return float(self.a) + float(self.b) * root
        # a + b r = norm / (a - b r); the denominator has no cancellation
        return float(Fraction(self.norm())) / (float(self.a) - float(self.b) * root)


PHI = QuadInt(4, 1, 15)  # 4 + sqrt(15), root of t^2 - 8t + 1
PSI = QuadInt(7, 4, 3)  # 7 + sqrt(48) = 7 + 4 sqrt(3), root of t^2 - 14t + 1


def lucas_nu(j: int) -> int:
    """``phi**j + phi**-j`` as an exact integer (symmetric in ``j``)."""
    v = PHI ** abs(j) + PHI ** (-abs(j))
    assert v.b == 0
    return v.a
