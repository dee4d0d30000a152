"""Scalar coefficient fields: exact Gaussian rationals and complex doubles."""

from fractions import Fraction
from numbers import Rational


class QQi:
    """Gaussian rational ``re + i*im`` with :class:`~fractions.Fraction` parts."""

    __slots__ = ("im", "re")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, QQi):
            return value
        if isinstance(value, (Rational, str)):
            return cls(Fraction(value))
        if isinstance(value, (complex, float)):
            raise TypeError(f"refusing inexact value {value!r} in exact mode")
        raise TypeError(f"cannot interpret {value!r} as a Gaussian rational")

    def conjugate(self):
        return QQi(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __add__(self, other):
        try:
            o = QQi.coerce(other)
        except TypeError:
            return NotImplemented
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, other):
        try:
            o = QQi.coerce(other)
        except TypeError:
            return NotImplemented
        return QQi(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = QQi.coerce(other)
        except TypeError:
            return NotImplemented
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QQi.coerce(other)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * QQi(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        return QQi.coerce(other) / self

    def __abs__(self):
        return abs(complex(self))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = QQi.coerce(other)
        except TypeError:
            if isinstance(other, (complex, float)):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QQi({self.re})"
        return f"QQi({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def as_exact(value):
    """Coerce to a Gaussian rational; floats are rejected."""
    return QQi.coerce(value)


def as_scalar(value, exact):
    return QQi.coerce(value) if exact else complex(value)
