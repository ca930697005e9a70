"""Sound interval arithmetic with software outward rounding.

Endpoints are IEEE doubles.  Every operation returns an interval containing
the exact real result set; endpoints are nudged to the next representable
value only when a computation is inexact, so small-integer arithmetic stays
exact.  Exactness is detected with error-free transformations (addition) or
exact rational comparison (multiplication, division).
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

__all__ = [
    "Interval",
    "Box",
    "IntervalMatrix",
    "IntervalDomainError",
    "iv_exp",
    "iv_sin",
    "iv_cos",
    "mat_inf_norm",
    "lognorm_inf",
]

_INF = math.inf
_MAX = sys.float_info.max
_TINY = 5e-324


class IntervalDomainError(ArithmeticError):
    """Operation undefined on the given interval (e.g. division by 0-straddling interval)."""


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _add_up(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if math.isinf(a) or math.isinf(b):
            return s
        return _INF if s > 0 else -_MAX
    t = s - a
    if math.isfinite(t):
        err = (a - (s - t)) + (b - t)
        if err == 0.0:
            return s
        if err < 0.0:
            return s
    return _up(s)


def _add_down(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if math.isinf(a) or math.isinf(b):
            return s
        return _MAX if s > 0 else -_INF
    t = s - a
    if math.isfinite(t):
        err = (a - (s - t)) + (b - t)
        if err == 0.0:
            return s
        if err > 0.0:
            return s
    return _down(s)


def _mul_up(a: float, b: float) -> float:
    p = a * b
    if math.isnan(p):
        # only reachable from 0 * inf endpoint candidates
        return 0.0
    if math.isinf(p):
        if math.isinf(a) or math.isinf(b):
            return p
        return _INF if p > 0 else -_MAX
    if a == 0.0 or b == 0.0:
        return 0.0
    if p == 0.0:
        # nonzero product underflowed
        return _TINY if (a > 0.0) == (b > 0.0) else 0.0
    if math.isinf(a) or math.isinf(b):
        return p
    if Fraction(a) * Fraction(b) > Fraction(p):
        return _up(p)
    return p


def _mul_down(a: float, b: float) -> float:
    p = a * b
    if math.isnan(p):
        return 0.0
    if math.isinf(p):
        if math.isinf(a) or math.isinf(b):
            return p
        return _MAX if p > 0 else -_INF
    if a == 0.0 or b == 0.0:
        return 0.0
    if p == 0.0:
        return -_TINY if (a > 0.0) != (b > 0.0) else 0.0
    if math.isinf(a) or math.isinf(b):
        return p
    if Fraction(a) * Fraction(b) < Fraction(p):
        return _down(p)
    return p


def _div_up(a: float, b: float) -> float:
    # caller guarantees b != 0
    q = a / b
    if math.isnan(q):
        return _INF
    if math.isinf(q):
        if math.isinf(a):
            return q
        return _INF if q > 0 else -_MAX
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return 0.0 if (a > 0.0) != (b > 0.0) else _TINY
    if q == 0.0:
        return _TINY if (a > 0.0) == (b > 0.0) else 0.0
    qb = Fraction(q) * Fraction(b)
    if (b > 0.0 and qb < Fraction(a)) or (b < 0.0 and qb > Fraction(a)):
        return _up(q)
    return q


def _div_down(a: float, b: float) -> float:
    q = a / b
    if math.isnan(q):
        return -_INF
    if math.isinf(q):
        if math.isinf(a):
            return q
        return _MAX if q > 0 else -_INF
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return 0.0 if (a > 0.0) == (b > 0.0) else -_TINY
    if q == 0.0:
        return -_TINY if (a > 0.0) != (b > 0.0) else 0.0
    qb = Fraction(q) * Fraction(b)
    if (b > 0.0 and qb > Fraction(a)) or (b < 0.0 and qb < Fraction(a)):
        return _down(q)
    return q


def _pow_up(x: float, n: int) -> float:
    # x >= 0, n >= 1; rounded-up x**n by binary exponentiation
    r = 1.0
    base = x
    while n:
        if n & 1:
            r = _mul_up(r, base)
        n >>= 1
        if n:
            base = _mul_up(base, base)
    return r


def _pow_down(x: float, n: int) -> float:
    r = 1.0
    base = x
    while n:
        if n & 1:
            r = _mul_down(r, base)
        n >>= 1
        if n:
            base = _mul_down(base, base)
    return r


def _exp_up(x: float) -> float:
    if x == 0.0:
        return 1.0
    v = math.exp(x) if x < 710.0 else _INF
    if math.isinf(v):
        return _INF
    return _up(_up(v))


def _exp_down(x: float) -> float:
    if x == 0.0:
        return 1.0
    if x >= 710.0:
        return _MAX
    v = math.exp(x)
    return max(0.0, _down(_down(v)))


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; endpoints may be +-inf but never NaN."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = self.lo, self.hi
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval endpoints [{lo}, {hi}]")
        if lo == _INF or hi == -_INF:
            raise ValueError("interval may not be a point at infinity")

    @staticmethod
    def point(v: float) -> "Interval":
        return Interval(v, v)

    @staticmethod
    def hull_of(values: Sequence[float]) -> "Interval":
        return Interval(min(values), max(values))

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return _add_up(self.hi, -self.lo)

    @property
    def mid(self) -> float:
        if not self.is_finite:
            return 0.0
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return m

    @property
    def rad(self) -> float:
        # upper bound of max distance from mid to an endpoint
        m = self.mid
        return max(_add_up(m, -self.lo), _add_up(self.hi, -m))

    @property
    def mag(self) -> float:
        """sup |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        """inf |x| over the interval."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_inside(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def inflate(self, r: float) -> "Interval":
        if r < 0:
            raise ValueError("inflation radius must be nonnegative")
        return Interval(_add_down(self.lo, -r), _add_up(self.hi, r))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def _coerce(self, other) -> "Interval":
        if isinstance(other, Interval):
            return other
        return Interval.point(float(other))

    def __add__(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(_add_down(self.lo, o.lo), _add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(_add_down(self.lo, -o.hi), _add_up(self.hi, -o.lo))

    def __rsub__(self, other) -> "Interval":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Interval":
        o = self._coerce(other)
        al, ah, bl, bh = self.lo, self.hi, o.lo, o.hi
        if al >= 0.0:
            if bl >= 0.0:
                return Interval(_mul_down(al, bl), _mul_up(ah, bh))
            if bh <= 0.0:
                return Interval(_mul_down(ah, bl), _mul_up(al, bh))
            return Interval(_mul_down(ah, bl), _mul_up(ah, bh))
        if ah <= 0.0:
            if bl >= 0.0:
                return Interval(_mul_down(al, bh), _mul_up(ah, bl))
            if bh <= 0.0:
                return Interval(_mul_down(ah, bh), _mul_up(al, bl))
            return Interval(_mul_down(al, bh), _mul_up(al, bl))
        if bl >= 0.0:
            return Interval(_mul_down(al, bh), _mul_up(ah, bh))
        if bh <= 0.0:
            return Interval(_mul_down(ah, bl), _mul_up(al, bl))
        return Interval(
            min(_mul_down(al, bh), _mul_down(ah, bl)),
            max(_mul_up(al, bl), _mul_up(ah, bh)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise IntervalDomainError(f"division by interval containing zero: {o}")
        if o.lo > 0.0:
            al, ah, bl, bh = self.lo, self.hi, o.lo, o.hi
            lo = _div_down(al, bh if al >= 0.0 else bl)
            hi = _div_up(ah, bl if ah >= 0.0 else bh)
            return Interval(lo, hi)
        return -(self / (-o))

    def __rtruediv__(self, other) -> "Interval":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int):
            raise TypeError("interval powers take integer exponents")
        if n < 0:
            return Interval.point(1.0) / (self ** (-n))
        if n == 0:
            return Interval.point(1.0)
        if n == 1:
            return self
        al, ah = self.lo, self.hi
        if n % 2 == 0:
            if al >= 0.0:
                return Interval(_pow_down(al, n), _pow_up(ah, n))
            if ah <= 0.0:
                return Interval(_pow_down(-ah, n), _pow_up(-al, n))
            return Interval(0.0, _pow_up(max(-al, ah), n))
        if al >= 0.0:
            return Interval(_pow_down(al, n), _pow_up(ah, n))
        if ah <= 0.0:
            return Interval(-_pow_up(-al, n), -_pow_down(-ah, n))
        return Interval(-_pow_up(-al, n), _pow_up(ah, n))

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


def iv_exp(a: Interval) -> Interval:
    if not a.is_finite:
        raise ValueError("iv_exp requires finite endpoints")
    return Interval(_exp_down(a.lo), _exp_up(a.hi))


_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi
_EPS = 2.220446049250313e-16


def _trig_endpoint(fn, x: float, exact0: float) -> Interval:
    if x == 0.0:
        return Interval.point(exact0)
    v = fn(x)
    return Interval(_down(_down(v)), _up(_up(v)))


def _trig(a: Interval, fn, exact0: float, max_offset: float, min_offset: float) -> Interval:
    if not a.is_finite:
        raise ValueError("trigonometric range requires finite endpoints")
    if a.hi - a.lo >= 6.3:
        return Interval(-1.0, 1.0)
    r = _trig_endpoint(fn, a.lo, exact0)
    if a.hi != a.lo:
        r = r.hull(_trig_endpoint(fn, a.hi, exact0))
    tol = 32.0 * _EPS * max(1.0, abs(a.lo), abs(a.hi))
    for offset, extreme in ((max_offset, 1.0), (min_offset, -1.0)):
        k0 = math.floor((a.lo - offset) / _TWO_PI) - 1
        k1 = math.ceil((a.hi - offset) / _TWO_PI) + 1
        for k in range(int(k0), int(k1) + 1):
            x = offset + _TWO_PI * k
            if a.lo - tol <= x <= a.hi + tol:
                r = r.hull(Interval.point(extreme))
    return Interval(max(-1.0, r.lo), min(1.0, r.hi))


def iv_sin(a: Interval) -> Interval:
    return _trig(a, math.sin, 0.0, _HALF_PI, -_HALF_PI)


def iv_cos(a: Interval) -> Interval:
    return _trig(a, math.cos, 1.0, 0.0, math.pi)


@dataclass(frozen=True)
class Box:
    """Cartesian product of intervals."""

    components: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if len(self.components) < 1:
            raise ValueError("box must have dimension >= 1")

    @staticmethod
    def from_bounds(bounds: Sequence[Sequence[float]]) -> "Box":
        return Box(tuple(Interval(float(lo), float(hi)) for lo, hi in bounds))

    @staticmethod
    def point(values: Sequence[float]) -> "Box":
        return Box(tuple(Interval.point(float(v)) for v in values))

    @property
    def n(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.components)

    def __getitem__(self, i: int) -> Interval:
        return self.components[i]

    def __len__(self) -> int:
        return len(self.components)

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(c.contains(float(v)) for c, v in zip(self.components, x, strict=True))

    def contains_box(self, other: "Box") -> bool:
        return all(c.contains_interval(o) for c, o in zip(self.components, other.components, strict=True))

    def hull(self, other: "Box") -> "Box":
        return Box(tuple(c.hull(o) for c, o in zip(self.components, other.components, strict=True)))

    def inflate(self, radii: Sequence[float]) -> "Box":
        return Box(tuple(c.inflate(float(r)) for c, r in zip(self.components, radii, strict=True)))

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(c.width for c in self.components)

    @property
    def diameter(self) -> float:
        return max(self.widths)

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    @property
    def midpoint(self) -> tuple[float, ...]:
        return tuple(c.mid for c in self.components)

    def sample(self, rng) -> tuple[float, ...]:
        return tuple(c.lo + rng.random() * (c.hi - c.lo) for c in self.components)

    def __repr__(self) -> str:
        return "x".join(repr(c) for c in self.components)


@dataclass(frozen=True)
class IntervalMatrix:
    """Square grid of intervals (used for Jacobian enclosures)."""

    rows: tuple[tuple[Interval, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rows)
        if n == 0 or any(len(r) != n for r in self.rows):
            raise ValueError("interval matrix must be square and nonempty")

    @staticmethod
    def from_values(values: Sequence[Sequence]) -> "IntervalMatrix":
        rows = []
        for row in values:
            rows.append(tuple(v if isinstance(v, Interval) else Interval.point(float(v)) for v in row))
        return IntervalMatrix(tuple(rows))

    @property
    def n(self) -> int:
        return len(self.rows)


def mat_inf_norm(m: IntervalMatrix) -> float:
    """Upper bound of the max-row-abs-sum norm over all point matrices in m."""
    best = 0.0
    for row in m.rows:
        s = 0.0
        for entry in row:
            if not entry.is_finite:
                raise ValueError("matrix norm requires finite entries")
            s = _add_up(s, entry.mag)
        best = max(best, s)
    return best


def lognorm_inf(m: IntervalMatrix) -> float:
    """Upper bound of the logarithmic norm max_k(q_kk + sum_{i!=k}|q_ki|); may be negative.

    Accumulates in the same entry order as mat_inf_norm so that
    lognorm_inf(M) <= mat_inf_norm(M) holds exactly in floating point.
    """
    best = -_INF
    for k, row in enumerate(m.rows):
        if any(not entry.is_finite for entry in row):
            raise ValueError("logarithmic norm requires finite entries")
        s = 0.0
        for i, entry in enumerate(row):
            s = _add_up(s, entry.hi if i == k else entry.mag)
        best = max(best, s)
    return best
