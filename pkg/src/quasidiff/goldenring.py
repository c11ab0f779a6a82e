"""Exact arithmetic in the ring Z[tau], tau the golden ratio.

Elements are stored as integer pairs ``(a, b)`` standing for ``a + b*tau``.
Components are limited to signed 64-bit range so that the same values can
be packed into numpy ``int64`` arrays; exceeding it raises
:class:`OverflowError` instead of wrapping.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import numpy as np

TAU = (1.0 + math.sqrt(5.0)) / 2.0
SQRT5 = math.sqrt(5.0)

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


def _check(v: int) -> int:
    if not INT64_MIN <= v <= INT64_MAX:
        raise OverflowError(f"Z[tau] component {v} exceeds signed 64-bit range")
    return v


def sign_sqrt5(p: int, q: int) -> int:
    """Exact sign of ``p + q*sqrt(5)`` for integers (or Fractions) p, q."""
    if p >= 0 and q >= 0:
        return 1 if (p > 0 or q > 0) else 0
    if p <= 0 and q <= 0:
        return -1
    # opposite signs; p*p == 5*q*q is impossible unless both vanish
    d = p * p - 5 * q * q
    s = 1 if p > 0 else -1
    return s if d > 0 else -s


def sign_golden(a: int, b: int) -> int:
    """Exact sign of ``a + b*tau``."""
    return sign_sqrt5(2 * a + b, b)


@total_ordering
@dataclass(frozen=True, slots=True)
class GoldenInt:
    """The element ``a + b*tau`` of Z[tau]."""

    a: int = 0
    b: int = 0

    def __post_init__(self):
        a, b = int(self.a), int(self.b)
        object.__setattr__(self, "a", _check(a))
        object.__setattr__(self, "b", _check(b))

    @classmethod
    def coerce(cls, x) -> GoldenInt:
        if isinstance(x, GoldenInt):
            return x
        if isinstance(x, (int, np.integer)):
            return cls(int(x), 0)
        raise TypeError(f"cannot interpret {x!r} as an element of Z[tau]")

    def __float__(self) -> float:
        return embed(self)

    def __add__(self, other):
        try:
            o = GoldenInt.coerce(other)
        except TypeError:
            return NotImplemented
        return GoldenInt(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return GoldenInt(-self.a, -self.b)

    def __sub__(self, other):
        try:
            o = GoldenInt.coerce(other)
        except TypeError:
            return NotImplemented
        return GoldenInt(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = GoldenInt.coerce(other)
        except TypeError:
            return NotImplemented
        return mul(self, o)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> GoldenInt:
        if n < 0:
            raise ValueError("negative powers leave Z[tau] unless the element is a unit")
        out, base = GoldenInt(1, 0), self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __lt__(self, other):
        try:
            o = GoldenInt.coerce(other)
        except TypeError:
            return NotImplemented
        return sign_golden(self.a - o.a, self.b - o.b) < 0

    def star(self) -> GoldenInt:
        return star(self)

    def norm(self) -> int:
        """Field norm ``x * x.star()``, an ordinary integer."""
        return self.a * self.a + self.a * self.b - self.b * self.b

    def __str__(self) -> str:
        return format_golden(self)


def embed(x: GoldenInt) -> float:
    """Real value ``a + b*tau`` to full double precision.

    Written as ``(p + q*sqrt5) / 2`` with ``p = 2a + b``, ``q = b``. When the
    two terms cancel, the value is computed as ``(p*p - 5*q*q) / (p - q*sqrt5)``
    with an exact integer numerator instead.
    """
    p, q = 2 * x.a + x.b, x.b
    if (p >= 0) == (q >= 0) or p == 0 or q == 0:
        return (p + q * SQRT5) / 2.0
    return (p * p - 5 * q * q) / (p - q * SQRT5) / 2.0


def star(x: GoldenInt) -> GoldenInt:
    """Galois conjugation tau -> 1 - tau: ``(a, b) -> (a + b, -b)``."""
    return GoldenInt(x.a + x.b, -x.b)


def mul(x: GoldenInt, y: GoldenInt) -> GoldenInt:
    """Product in Z[tau] using tau**2 = tau + 1."""
    return GoldenInt(x.a * y.a + x.b * y.b, x.a * y.b + x.b * y.a + x.b * y.b)


TAU_G = GoldenInt(0, 1)

_GOLDEN_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:([+-])\s*(\d+)\s*\*\s*tau)?\s*$")


def format_golden(x: GoldenInt) -> str:
    """Render as ``"a+b*tau"`` / ``"a-b*tau"``; :func:`parse_golden` inverts it."""
    sign = "-" if x.b < 0 else "+"
    return f"{x.a}{sign}{abs(x.b)}*tau"


def parse_golden(text: str) -> GoldenInt:
    m = _GOLDEN_RE.match(text)
    if m is None:
        raise ValueError(f"not a Z[tau] literal: {text!r}")
    a = int(m.group(1))
    b = 0
    if m.group(2):
        b = int(m.group(3)) * (-1 if m.group(2) == "-" else 1)
    return GoldenInt(a, b)


# --------------------------------------------------------------------------
# Q[tau] values: numerator in Z[tau] over a positive integer denominator.
# Used for window and range endpoints so that membership stays exact.

@dataclass(frozen=True)
class GoldenRational:
    num: GoldenInt
    den: int = 1

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")

    @classmethod
    def coerce(cls, x) -> GoldenRational:
        """Accept GoldenInt, int, Fraction, decimal string or float.

        Floats are read through their shortest decimal repr, so ``1e-9`` means
        exactly ``1/10**9``.
        """
        if isinstance(x, GoldenRational):
            return x
        if isinstance(x, GoldenInt):
            return cls(x, 1)
        if isinstance(x, str):
            try:
                return cls(parse_golden(x), 1)
            except ValueError:
                x = Fraction(x)
        if isinstance(x, (int, np.integer)):
            return cls(GoldenInt(int(x), 0), 1)
        if isinstance(x, (float, np.floating)):
            if not math.isfinite(x):
                raise ValueError(f"non-finite endpoint {x!r}")
            x = Fraction(repr(float(x)))
        if isinstance(x, Fraction):
            return cls(GoldenInt(x.numerator, 0), x.denominator)
        raise TypeError(f"cannot interpret {x!r} as an element of Q[tau]")

    def __float__(self) -> float:
        return embed(self.num) / self.den

    def star(self) -> GoldenRational:
        return GoldenRational(star(self.num), self.den)


def compare_scaled(a, b, bound: GoldenRational) -> np.ndarray:
    """Exact sign of ``(a + b*tau) - bound`` for int64 arrays ``a``, ``b``.

    A float estimate decides clear cases; entries within rounding distance of
    zero are re-decided in Python integers.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    d = bound.den
    c, e = bound.num.a, bound.num.b
    # d*(a + b tau) - (c + e tau) = (d a - c) + (d b - e) tau
    scale = max(1, d) * (float(np.max(np.abs(a), initial=0)) + float(np.max(np.abs(b), initial=0)) + 1.0) + abs(c) + abs(e)
    if scale * 4 > 2**62:
        raise OverflowError("range or window too large for 64-bit exact arithmetic")
    p = d * a - c
    q = d * b - e
    est = p.astype(np.float64) + q.astype(np.float64) * TAU
    out = np.sign(est).astype(np.int64)
    unsure = np.abs(est) <= 1e-9 * scale
    for i in np.flatnonzero(unsure):
        out[i] = sign_golden(int(p[i]), int(q[i]))
    return out


def embed_array(a, b) -> np.ndarray:
    """Vectorised :func:`embed` for int64 component arrays."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    p = 2 * a + b
    q = b
    pf = p.astype(np.float64)
    qf = q.astype(np.float64)
    out = (pf + qf * SQRT5) / 2.0
    opposite = np.sign(p) * np.sign(q) < 0
    # the int64 norm p*p - 5*q*q is exact while |q| < 2**30 (|p| ~ sqrt5 |q|)
    cancel = opposite & (np.abs(q) < 2**30) & (np.abs(p) < 2**31)
    if np.any(cancel):
        pc, qc = p[cancel], q[cancel]
        n = (pc * pc - 5 * qc * qc).astype(np.float64)
        out[cancel] = n / (pc.astype(np.float64) - qc.astype(np.float64) * SQRT5) / 2.0
    for i in np.flatnonzero(opposite & ~cancel):
        pi, qi = int(p.flat[i]), int(q.flat[i])
        out.flat[i] = (pi * pi - 5 * qi * qi) / (pi - qi * SQRT5) / 2.0
    return out


def star_array(a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return a + b, -b
