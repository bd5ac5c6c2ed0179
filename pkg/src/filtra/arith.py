"""Exact weights: rationals, the quadratic field Q(sqrt 5), and their text forms.

Every probability in the package is one of ``int``, ``Fraction``, ``Q5`` or
``float`` (opt-in float mode).  ``Q5`` exists for the Fibonacci chain, whose
cotransitions involve the golden-ratio root of x**2 + x = 1.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Weight = Union[int, Fraction, "Q5", float]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


class Q5:
    """Element a + b*sqrt(5) of Q(sqrt 5) with rational a, b."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def golden(cls) -> "Q5":
        """The positive root of x**2 + x = 1, i.e. (sqrt5 - 1)/2."""
        return cls(Fraction(-1, 2), Fraction(1, 2))

    @staticmethod
    def _lift(other):
        if isinstance(other, Q5):
            return other
        if isinstance(other, (int, Fraction)):
            return Q5(other, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return float(self) + other if isinstance(other, float) else NotImplemented
        return Q5(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Q5(-self.a, -self.b)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return float(self) - other if isinstance(other, float) else NotImplemented
        return Q5(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return float(self) * other if isinstance(other, float) else NotImplemented
        return Q5(self.a * o.a + 5 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate(self) -> "Q5":
        return Q5(self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - 5 * self.b * self.b

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return float(self) / other if isinstance(other, float) else NotImplemented
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt5)")
        num = self * o.conjugate()
        return Q5(num.a / n, num.b / n)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return other / float(self)
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return Q5(1) / (self ** -k)
        out, base = Q5(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # opposite signs: compare a**2 with 5 b**2
        d = self.a * self.a - 5 * self.b * self.b
        return sa if d > 0 else (sb if d < 0 else 0)

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            x = float(self)
            return (x > other) - (x < other)
        o = self._lift(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare Q5 with {type(other).__name__}")
        return (self - o).sign()

    def __eq__(self, other):
        if isinstance(other, (Q5, int, Fraction)):
            o = self._lift(other)
            return self.a == o.a and self.b == o.b
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(5.0)

    def __repr__(self):
        return f"Q5({self.a}, {self.b})"

    def __str__(self):
        return format_weight(self)


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, Q5))


def format_weight(x) -> str:
    """Canonical text form: ``p/q`` for rationals, ``a+b*sqrt5`` for Q5, repr for floats."""
    if isinstance(x, Q5):
        if x.b == 0:
            return format_weight(x.a)
        sign = "-" if x.b < 0 else "+"
        return f"{format_weight(x.a)}{sign}{format_weight(abs(x.b))}*sqrt5"
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    raise TypeError(f"unsupported weight type {type(x).__name__}")


def parse_weight(s, *, exact: bool = True):
    """Inverse of :func:`format_weight`.  Numbers pass through unchanged."""
    if isinstance(s, bool):
        raise TypeError("booleans are not weights")
    if isinstance(s, (int, Fraction, Q5)):
        return s if exact else float(s)
    if isinstance(s, float):
        return Fraction(s) if exact else s
    text = str(s).strip()
    if "sqrt5" in text:
        body = text.replace(" ", "")
        if not body.endswith("*sqrt5"):
            raise ValueError(f"bad Q(sqrt5) literal: {s!r}")
        body = body[: -len("*sqrt5")]
        cut = max(body.rfind("+"), body.rfind("-"))
        try:
            if cut <= 0:
                a, b = Fraction(0), Fraction(body)
            else:
                a, b = Fraction(body[:cut]), Fraction(body[cut:])
        except ValueError as exc:
            raise ValueError(f"bad Q(sqrt5) literal: {s!r}") from exc
        q = Q5(a, b)
        return q if exact else float(q)
    if not exact:
        return float(Fraction(text))
    return Fraction(text)


def to_float(x) -> float:
    return float(x)


def as_exact(x):
    """Coerce an input probability to an exact value (floats go through ``Fraction``)."""
    if isinstance(x, (int, Fraction, Q5)):
        return x
    if isinstance(x, str):
        return parse_weight(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    raise TypeError(f"unsupported probability {x!r}")
