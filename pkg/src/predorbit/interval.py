"""Directed-rounding interval arithmetic for reals and rectangular complex intervals.

Every operation returns an interval that contains the exact result for any
choice of members of the operands.  Directed rounding is emulated by nudging
round-to-nearest results outward with ``math.nextafter``; for the libm-backed
elementary functions (sin, cos, acos) the nudge is widened to cover their
documented worst-case error.

All values are immutable; no global rounding state is touched.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DivisionByZeroInterval, DomainError

_INF = math.inf

# libm sin/cos/acos are faithful to ~1 ulp on glibc; 4 ulps of outward
# padding on the result is a safe envelope.
_LIBM_ULPS = 4


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _down_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, -_INF)
    return x


def _up_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, _INF)
    return x


class Interval:
    """Closed interval [lo, hi] with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN endpoint")
        if lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def point(x) -> "Interval":
        return Interval(float(x))

    @staticmethod
    def empty() -> "Interval":
        iv = object.__new__(Interval)
        object.__setattr__(iv, "lo", _INF)
        object.__setattr__(iv, "hi", -_INF)
        return iv

    @staticmethod
    def pi() -> "Interval":
        return Interval(_down(math.pi), _up(math.pi))

    @staticmethod
    def two_pi() -> "Interval":
        return Interval(_down(2.0 * math.pi), _up(2.0 * math.pi))

    # -- queries -------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo)

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

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def interior_contains(self, x: float) -> bool:
        return self.lo < x < self.hi

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else Interval.empty()

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    # -- arithmetic ----------------------------------------------------

    def _check(self):
        if self.is_empty:
            raise ValueError("arithmetic on empty interval")

    def __neg__(self):
        self._check()
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        self._check()
        if isinstance(other, RectComplex):
            return NotImplemented
        o = other if isinstance(other, Interval) else Interval.point(other)
        o._check()
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RectComplex):
            return NotImplemented
        o = other if isinstance(other, Interval) else Interval.point(other)
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        self._check()
        if isinstance(other, RectComplex):
            return NotImplemented
        o = other if isinstance(other, Interval) else Interval.point(other)
        o._check()
        cands = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_down(min(cands)), _up(max(cands)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        self._check()
        if isinstance(other, RectComplex):
            return NotImplemented
        o = other if isinstance(other, Interval) else Interval.point(other)
        o._check()
        if o.lo <= 0.0 <= o.hi:
            raise DivisionByZeroInterval(f"divisor {o!r} contains 0")
        cands = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_down(min(cands)), _up(max(cands)))

    def __rtruediv__(self, other):
        return Interval.point(other) / self

    def __pow__(self, n: int):
        self._check()
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        if n == 0:
            return Interval(1.0)
        base = abs(self) if n % 2 == 0 else self
        out = base
        for _ in range(n - 1):
            out = out * base
        return out

    def __abs__(self):
        self._check()
        return Interval(self.mig, self.mag)

    # -- elementary functions -------------------------------------------

    def sqrt(self, clamp_tol: float = 1e-13) -> "Interval":
        """Validated square root.

        Lower endpoints in [-clamp_tol, 0) are clamped to 0; this absorbs
        outward rounding of quantities whose exact lower bound is 0.
        """
        self._check()
        lo, hi = self.lo, self.hi
        if lo < 0.0:
            if lo < -clamp_tol:
                raise DomainError(f"sqrt of {self!r}")
            lo = 0.0
        hi = max(hi, 0.0)
        return Interval(max(0.0, _down(math.sqrt(lo))), _up(math.sqrt(hi)))

    def sin(self) -> "Interval":
        self._check()
        two_pi = Interval.two_pi()
        if _up(self.hi - self.lo) >= two_pi.lo:
            return Interval(-1.0, 1.0)
        vlo, vhi = math.sin(self.lo), math.sin(self.hi)
        lo, hi = min(vlo, vhi), max(vlo, vhi)
        # widen to +-1 whenever a critical point pi/2 + k*pi may lie inside
        if _crosses_critical(self.lo, self.hi, 0.5):
            hi = 1.0
        if _crosses_critical(self.lo, self.hi, 1.5):
            lo = -1.0
        return Interval(max(-1.0, _down_n(lo, _LIBM_ULPS)), min(1.0, _up_n(hi, _LIBM_ULPS)))

    def cos(self) -> "Interval":
        self._check()
        two_pi = Interval.two_pi()
        if _up(self.hi - self.lo) >= two_pi.lo:
            return Interval(-1.0, 1.0)
        vlo, vhi = math.cos(self.lo), math.cos(self.hi)
        lo, hi = min(vlo, vhi), max(vlo, vhi)
        if _crosses_critical(self.lo, self.hi, 0.0):
            hi = 1.0
        if _crosses_critical(self.lo, self.hi, 1.0):
            lo = -1.0
        return Interval(max(-1.0, _down_n(lo, _LIBM_ULPS)), min(1.0, _up_n(hi, _LIBM_ULPS)))

    def acos(self, clamp_tol: float = 1e-13) -> "Interval":
        self._check()
        lo, hi = self.lo, self.hi
        if lo < -1.0:
            if lo < -1.0 - clamp_tol:
                raise DomainError(f"acos of {self!r}")
            lo = -1.0
        if hi > 1.0:
            if hi > 1.0 + clamp_tol:
                raise DomainError(f"acos of {self!r}")
            hi = 1.0
        if lo > 1.0 or hi < -1.0:
            raise DomainError(f"acos of {self!r}")
        # acos is decreasing
        out_lo = max(0.0, _down_n(math.acos(hi), _LIBM_ULPS))
        out_hi = min(Interval.pi().hi, _up_n(math.acos(lo), _LIBM_ULPS))
        return Interval(out_lo, out_hi)


def _crosses_critical(lo: float, hi: float, phase_halves: float) -> bool:
    """Conservatively decide whether lo <= (phase_halves + 2k)*pi <= hi for some integer k."""
    p = Interval.pi()
    shift = Interval(phase_halves) * p
    span = (Interval(lo, hi) - shift) / (p * 2.0)
    return math.floor(span.hi) >= math.ceil(span.lo) or span.hi - span.lo > 1.0


class RectComplex:
    """Rectangular complex interval re + i*im with containment arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        if im is None:
            im = Interval(0.0)
        object.__setattr__(self, "re", re if isinstance(re, Interval) else Interval.point(re))
        object.__setattr__(self, "im", im if isinstance(im, Interval) else Interval.point(im))

    def __setattr__(self, name, value):
        raise AttributeError("RectComplex is immutable")

    @staticmethod
    def point(z) -> "RectComplex":
        z = complex(z)
        return RectComplex(Interval(z.real), Interval(z.imag))

    def conj(self) -> "RectComplex":
        return RectComplex(self.re, -self.im)

    def __neg__(self):
        return RectComplex(-self.re, -self.im)

    def _coerce(self, other) -> "RectComplex":
        if isinstance(other, RectComplex):
            return other
        if isinstance(other, Interval):
            return RectComplex(other)
        return RectComplex.point(other)

    def __add__(self, other):
        o = self._coerce(other)
        return RectComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return RectComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        return RectComplex(self.re * o.re - self.im * o.im,
                           self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        den = o.re ** 2 + o.im ** 2
        if den.lo <= 0.0:
            raise DivisionByZeroInterval(f"divisor {o!r} may contain 0")
        num = self * o.conj()
        return RectComplex(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def contains(self, z) -> bool:
        z = complex(z)
        return self.re.contains(z.real) and self.im.contains(z.imag)

    def abs_upper(self) -> float:
        """Upper bound for sup |z| over the rectangle."""
        m = (Interval(self.re.mag) ** 2 + Interval(self.im.mag) ** 2).sqrt()
        return m.hi

    def abs_lower(self) -> float:
        """Lower bound for inf |z| over the rectangle."""
        m = (Interval(self.re.mig) ** 2 + Interval(self.im.mig) ** 2).sqrt()
        return m.lo

    @property
    def mid(self) -> complex:
        return complex(self.re.mid, self.im.mid)

    def __eq__(self, other):
        return isinstance(other, RectComplex) and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"RectComplex({self.re!r}, {self.im!r})"


def abs_upper(z: RectComplex) -> float:
    return z.abs_upper()


def parse_outward(s: str) -> Interval:
    """Parse a decimal string into the tightest interval containing its exact value."""
    v = float(s)
    if math.isinf(v):
        raise ValueError(f"{s!r} overflows float range")
    exact = Fraction(s)
    approx = Fraction(v)
    if approx == exact:
        return Interval(v)
    if approx < exact:
        return Interval(v, _up(v))
    return Interval(_down(v), v)


def interval_max(*xs: Interval) -> Interval:
    return Interval(max(x.lo for x in xs), max(x.hi for x in xs))


def interval_min(*xs: Interval) -> Interval:
    return Interval(min(x.lo for x in xs), min(x.hi for x in xs))
