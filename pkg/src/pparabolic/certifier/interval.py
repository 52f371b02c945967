"""Outward-rounded interval scalars and interval-coefficient polynomials.

Rounding follows the kernels: one ulp outward per operation, with exact
zeros kept exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .._kernels_py import _dn, _mul_dn, _mul_up, _up


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> Interval:
        x = float(x)
        return cls(x, x)

    @classmethod
    def around(cls, x: float) -> Interval:
        """Smallest float interval certainly containing a correctly-rounded ``x``'s source."""
        x = float(x)
        return cls(_dn(x), _up(x)) if x != 0.0 else cls(0.0, 0.0)

    @staticmethod
    def coerce(x) -> Interval:
        return x if isinstance(x, Interval) else Interval.point(x)

    def __add__(self, other) -> Interval:
        o = Interval.coerce(other)
        return Interval(_dn(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> Interval:
        return self + (-Interval.coerce(other))

    def __rsub__(self, other) -> Interval:
        return Interval.coerce(other) - self

    def __mul__(self, other) -> Interval:
        o = Interval.coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        return Interval(
            min(_mul_dn(a, c), _mul_dn(a, d), _mul_dn(b, c), _mul_dn(b, d)),
            max(_mul_up(a, c), _mul_up(a, d), _mul_up(b, c), _mul_up(b, d)),
        )

    __rmul__ = __mul__

    def sqrt(self) -> Interval:
        if self.lo < 0:
            raise ValueError("sqrt of an interval reaching below 0")
        lo = math.sqrt(self.lo)
        hi = math.sqrt(self.hi)
        return Interval(_dn(lo) if lo * lo != self.lo else lo, _up(hi) if hi * hi != self.hi else hi)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


SQRT2 = Interval.point(2.0).sqrt()


# Polynomials are lists of Interval coefficients in ascending degree.

def padd(a: list[Interval], b: list[Interval]) -> list[Interval]:
    n = max(len(a), len(b))
    zero = Interval.point(0.0)
    return [(a[i] if i < len(a) else zero) + (b[i] if i < len(b) else zero) for i in range(n)]


def pscale(a: list[Interval], c) -> list[Interval]:
    return [x * c for x in a]


def psub(a: list[Interval], b: list[Interval]) -> list[Interval]:
    return padd(a, pscale(b, -1.0))


def pmul(a: list[Interval], b: list[Interval]) -> list[Interval]:
    out = [Interval.point(0.0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def pbounds(poly: list[Interval]) -> tuple[list[float], list[float]]:
    return [c.lo for c in poly], [c.hi for c in poly]
