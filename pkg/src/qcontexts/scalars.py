"""Scalar backends.

Two interchangeable scalar backends are used throughout the package:

* ``"exact"`` -- elements of the real quadratic field Q(sqrt(2)) stored as a
  pair of :class:`fractions.Fraction`, plus complex numbers over that field.
  Arithmetic is closed and equality is decidable, which is what makes
  orthogonality and projector-equality decisions trustworthy.
* ``"float"`` -- ordinary double-precision complex numbers, with a global
  tolerance ``eps`` (default ``1e-9``) used by every equality predicate.
"""

from __future__ import annotations

import math
from fractions import Fraction

SQRT2 = math.sqrt(2.0)

_EPS = 1e-9


def get_eps() -> float:
    """Global tolerance used by all float-backend equality predicates."""
    return _EPS


def set_eps(eps: float) -> None:
    global _EPS
    if not eps > 0:
        raise ValueError("tolerance must be positive")
    _EPS = float(eps)


def as_fraction(x) -> Fraction:
    """Coerce an int, Fraction, or 'p/q' string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if x != int(x):
            raise ValueError(f"non-integer float {x!r} is not exact; pass a 'p/q' string")
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


class QSqrt2:
    """An element a + b*sqrt(2) of the field Q(sqrt(2)), a and b rational."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = as_fraction(a)
        self.b = as_fraction(b)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QSqrt2(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QSqrt2(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QSqrt2(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        # 1/(a + b*sqrt2) = (a - b*sqrt2)/(a^2 - 2 b^2)
        denom = other.a * other.a - 2 * other.b * other.b
        if denom == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(2))")
        return QSqrt2(
            (self.a * other.a - 2 * self.b * other.b) / denom,
            (self.b * other.a - self.a * other.b) / denom,
        )

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __neg__(self):
        return QSqrt2(-self.a, -self.b)

    # -- predicates and order --------------------------------------------

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def sign(self) -> int:
        """Exact sign: -1, 0, or +1."""
        a, b = self.a, self.b
        if a == 0 and b == 0:
            return 0
        if a >= 0 and b >= 0:
            return 1
        if a <= 0 and b <= 0:
            return -1
        # mixed signs: compare a^2 with 2 b^2
        if a > 0:  # b < 0
            return 1 if a * a > 2 * b * b else -1
        return 1 if 2 * b * b > a * a else -1  # a < 0, b > 0

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __lt__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() < 0

    def __le__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return not self.__le__(other)

    def __ge__(self, other):
        return not self.__lt__(other)

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * SQRT2

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        if self.b == 0:
            return f"QSqrt2({self.a})"
        return f"QSqrt2({self.a}, {self.b})"

    def key(self):
        return (self.a.numerator, self.a.denominator, self.b.numerator, self.b.denominator)


def _coerce(x):
    if isinstance(x, QSqrt2):
        return x
    if isinstance(x, (int, Fraction)):
        return QSqrt2(x)
    return NotImplemented


Q_ZERO = QSqrt2(0)
Q_ONE = QSqrt2(1)
Q_SQRT2 = QSqrt2(0, 1)


class ExactComplex:
    """A complex number with real and imaginary parts in Q(sqrt(2))."""

    __slots__ = ("re", "im")

    def __init__(self, re=Q_ZERO, im=Q_ZERO):
        self.re = re if isinstance(re, QSqrt2) else QSqrt2(re)
        self.im = im if isinstance(im, QSqrt2) else QSqrt2(im)

    def __add__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        return ExactComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        return ExactComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        return ExactComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        denom = other.re * other.re + other.im * other.im
        if denom.is_zero():
            raise ZeroDivisionError("complex division by zero")
        return ExactComplex(
            (self.re * other.re + self.im * other.im) / denom,
            (self.im * other.re - self.re * other.im) / denom,
        )

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def conj(self):
        return ExactComplex(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def __eq__(self, other):
        other = _coerce_c(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactComplex({self.re!r}, {self.im!r})"

    def key(self):
        return self.re.key() + self.im.key()


def _coerce_c(x):
    if isinstance(x, ExactComplex):
        return x
    if isinstance(x, QSqrt2):
        return ExactComplex(x)
    if isinstance(x, (int, Fraction)):
        return ExactComplex(QSqrt2(x))
    return NotImplemented


EC_ZERO = ExactComplex(Q_ZERO, Q_ZERO)
EC_ONE = ExactComplex(Q_ONE, Q_ZERO)


def exact_entry(x) -> ExactComplex:
    """Build an ExactComplex from JSON-ish input.

    Accepted forms: int, 'p/q' string, Fraction, [a, b] for a + b*sqrt(2)
    (with a, b ints or 'p/q' strings), QSqrt2, ExactComplex.
    """
    if isinstance(x, ExactComplex):
        return x
    if isinstance(x, QSqrt2):
        return ExactComplex(x)
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"expected [a, b] for a + b*sqrt(2), got {x!r}")
        return ExactComplex(QSqrt2(as_fraction(x[0]), as_fraction(x[1])))
    return ExactComplex(QSqrt2(as_fraction(x)))


def recognize_qsqrt2(x: float, max_den: int = 64, tol: float = 1e-7):
    """Recognize a float as an element of Q(sqrt(2)) with small denominators.

    Used only to turn numeric eigenvalue hints into exact candidates; every
    candidate is verified exactly by the caller. Returns None if no small
    element matches.
    """
    # rational part only, generous denominator
    a = Fraction(x).limit_denominator(10**6)
    if abs(float(a) - x) <= tol and a.denominator <= 10**4:
        return QSqrt2(a)
    # a + b*sqrt(2) with small b
    for d in (1, 2, 3, 4, 6, 8):
        for n in range(-8 * d, 8 * d + 1):
            if n == 0:
                continue
            b = Fraction(n, d)
            a = Fraction(x - float(b) * SQRT2).limit_denominator(max_den)
            cand = QSqrt2(a, b)
            if abs(float(cand) - x) <= tol:
                return cand
    return None
