"""Exact ordered-field scalars: rationals and elements of a real quadratic field.

Rationals are plain :class:`fractions.Fraction` values.  Elements of
``Q(sqrt d)`` are :class:`QuadraticNumber` instances bound to a
:class:`QuadraticField`.  Rationals coerce into any quadratic field; mixing
two different fields raises :class:`FieldMismatchError`.  Floats are never
accepted.

Textual forms (used by every JSON reader and writer in the package)::

    "3/7"                 a rational
    "1/2+1/2*sqrt(5)"     an element of Q(sqrt 5)
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import total_ordering
from numbers import Rational
from typing import Iterable, Union

from .errors import DomainError, ParseError

__all__ = [
    "FieldMismatchError",
    "QuadraticField",
    "QuadraticNumber",
    "Scalar",
    "as_scalar",
    "common_field",
    "compare",
    "field_name",
    "format_scalar",
    "lower",
    "parse_field",
    "parse_scalar",
    "sign",
]


class FieldMismatchError(DomainError):
    """Two scalars from different quadratic fields were combined."""


def _squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


class QuadraticField:
    """The real field ``Q(sqrt d)`` for a square-free integer ``d > 1``.

    Fields are interned, so ``QuadraticField(5) is QuadraticField(5)``.
    """

    _cache: dict[int, "QuadraticField"] = {}

    def __new__(cls, d: int) -> "QuadraticField":
        if isinstance(d, bool) or not isinstance(d, int):
            raise TypeError(f"radicand must be an int, got {d!r}")
        if not _squarefree(d):
            raise DomainError(f"radicand must be square-free and > 1, got {d}")
        try:
            return cls._cache[d]
        except KeyError:
            obj = super().__new__(cls)
            obj.d = d
            cls._cache[d] = obj
            return obj

    d: int

    def __getnewargs__(self):
        return (self.d,)

    def __call__(self, a=0, b=0) -> "QuadraticNumber":
        return QuadraticNumber(a, b, self)

    @property
    def sqrt(self) -> "QuadraticNumber":
        return QuadraticNumber(0, 1, self)

    @property
    def name(self) -> str:
        return f"Q(sqrt {self.d})"

    def __repr__(self) -> str:
        return f"QuadraticField({self.d})"


def _rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact rational")


def _sign_of(a: Fraction, b: Fraction, d: int) -> int:
    # sign of a + b*sqrt(d), exact
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return (b > 0) - (b < 0)
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    lhs = a * a
    rhs = b * b * d
    if a > 0:  # b < 0
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


@total_ordering
class QuadraticNumber:
    """``a + b*sqrt(d)`` with rational ``a`` and ``b``; immutable."""

    __slots__ = ("_a", "_b", "_field")

    def __init__(self, a=0, b=0, field: QuadraticField | None = None):
        if field is None:
            raise TypeError("a QuadraticNumber needs its field")
        object.__setattr__(self, "_a", _rational(a))
        object.__setattr__(self, "_b", _rational(b))
        object.__setattr__(self, "_field", field)

    def __setattr__(self, name, value):
        raise AttributeError("QuadraticNumber is immutable")

    def __reduce__(self):
        return (QuadraticNumber, (self._a, self._b, self._field))

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @property
    def field(self) -> QuadraticField:
        return self._field

    @property
    def d(self) -> int:
        return self._field.d

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self._a, -self._b, self._field)

    def norm(self) -> Fraction:
        return self._a * self._a - self._b * self._b * self._field.d

    def is_rational(self) -> bool:
        return self._b == 0

    def _coerce(self, other) -> "QuadraticNumber | None":
        if isinstance(other, QuadraticNumber):
            if other._field is not self._field:
                raise FieldMismatchError(
                    f"cannot mix {self._field.name} and {other._field.name}"
                )
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return QuadraticNumber(other, 0, self._field)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadraticNumber(self._a + o._a, self._b + o._b, self._field)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self._a, -self._b, self._field)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadraticNumber(self._a - o._a, self._b - o._b, self._field)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._field.d
        return QuadraticNumber(
            self._a * o._a + d * self._b * o._b,
            self._a * o._b + self._b * o._a,
            self._field,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadraticNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in " + self._field.name)
        return QuadraticNumber(self._a / n, -self._b / n, self._field)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadraticNumber(1, 0, self._field)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def sign(self) -> int:
        return _sign_of(self._a, self._b, self._field.d)

    def __eq__(self, other):
        if isinstance(other, QuadraticNumber):
            return (
                other._field is self._field
                and self._a == other._a
                and self._b == other._b
            )
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._b == 0 and self._a == other
        return NotImplemented

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __hash__(self):
        if self._b == 0:
            return hash(self._a)
        return hash((self._a, self._b, self._field.d))

    def __bool__(self):
        return self._a != 0 or self._b != 0

    def __float__(self):
        # display only; never used for decisions
        return float(self._a) + float(self._b) * math.sqrt(self._field.d)

    def __repr__(self):
        return f"QuadraticNumber({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


Scalar = Union[Fraction, QuadraticNumber]


def as_scalar(x, field: QuadraticField | None = None) -> Scalar:
    """Coerce ``x`` into Q (``field is None``) or into ``field``.

    Strings are parsed.  A quadratic value passed for a rational field is a
    :class:`FieldMismatchError`.
    """
    if isinstance(x, str):
        x = parse_scalar(x)
    if isinstance(x, QuadraticNumber):
        if field is None:
            raise FieldMismatchError(f"{x} is not rational (field is Q)")
        if x.field is not field:
            raise FieldMismatchError(f"cannot mix {x.field.name} and {field.name}")
        return x
    q = _rational(x)
    return q if field is None else QuadraticNumber(q, 0, field)


def common_field(values: Iterable) -> QuadraticField | None:
    """Return the quadratic field shared by ``values`` (None if all rational)."""
    found = None
    for v in values:
        if isinstance(v, QuadraticNumber):
            if found is None:
                found = v.field
            elif v.field is not found:
                raise FieldMismatchError(f"cannot mix {found.name} and {v.field.name}")
    return found


class _ZSqrt:
    """Integer pair ``a + b*sqrt(d)`` used internally for fast exact loops."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a: int, b: int, d: int):
        self.a = a
        self.b = b
        self.d = d

    def __add__(self, o):
        return _ZSqrt(self.a + o.a, self.b + o.b, self.d)

    def __sub__(self, o):
        return _ZSqrt(self.a - o.a, self.b - o.b, self.d)

    def __neg__(self):
        return _ZSqrt(-self.a, -self.b, self.d)

    def __lt__(self, o):
        return _sign_of(self.a - o.a, self.b - o.b, self.d) < 0

    def __le__(self, o):
        return _sign_of(self.a - o.a, self.b - o.b, self.d) <= 0

    def __gt__(self, o):
        return _sign_of(self.a - o.a, self.b - o.b, self.d) > 0

    def __ge__(self, o):
        return _sign_of(self.a - o.a, self.b - o.b, self.d) >= 0

    def __eq__(self, o):
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))


def lower(values: Iterable[Scalar], field: QuadraticField | None):
    """Scale ``values`` to a common integer lattice for tight exact loops.

    Returns ``(lowered, lift)``: ``lowered`` are ints (rational field) or
    integer pairs (quadratic field) supporting ``+``, ``-`` and ordering, and
    ``lift`` maps a lowered value back to a scalar of ``field``.
    """
    values = list(values)
    if field is None:
        den = math.lcm(*(Fraction(v).denominator for v in values)) if values else 1
        low = [int(Fraction(v) * den) for v in values]

        def lift(x: int) -> Fraction:
            return Fraction(x, den)

        return low, lift
    vals = [as_scalar(v, field) for v in values]
    den = math.lcm(*(x.a.denominator for x in vals), *(x.b.denominator for x in vals))
    d = field.d
    low = [_ZSqrt(int(x.a * den), int(x.b * den), d) for x in vals]

    def lift_q(x: _ZSqrt) -> QuadraticNumber:
        return QuadraticNumber(Fraction(x.a, den), Fraction(x.b, den), field)

    return low, lift_q


def sign(x: Scalar) -> int:
    if isinstance(x, QuadraticNumber):
        return x.sign()
    return (x > 0) - (x < 0)


def compare(x: Scalar, y: Scalar) -> int:
    """Three-way comparison: -1, 0 or 1 as ``x`` is below, equal to, above ``y``."""
    return sign(x - y)


_QUAD_RE = re.compile(
    r"^\s*(?P<a>[+-]?\d+(?:/\d+)?)\s*(?P<op>[+-])\s*(?P<b>\d+(?:/\d+)?)\s*\*\s*"
    r"sqrt\(\s*(?P<d>\d+)\s*\)\s*$"
)
_RAT_RE = re.compile(r"^\s*[+-]?\d+(?:/\d+)?\s*$")
_FIELD_RE = re.compile(r"^\s*Q\s*(?:\(\s*sqrt\s*\(?\s*(?P<d>\d+)\s*\)?\s*\))?\s*$")


def parse_scalar(text: str, field: QuadraticField | None = None) -> Scalar:
    """Parse ``"p/q"`` or ``"p/q+r/s*sqrt(d)"`` exactly."""
    if not isinstance(text, str):
        raise ParseError(f"scalar must be a string, got {text!r}")
    m = _QUAD_RE.match(text)
    if m:
        try:
            fld = QuadraticField(int(m["d"]))
        except DomainError as exc:
            raise ParseError(str(exc)) from None
        b = Fraction(m["b"])
        if m["op"] == "-":
            b = -b
        value = QuadraticNumber(Fraction(m["a"]), b, fld)
        if field is not None and fld is not field:
            raise FieldMismatchError(f"{text!r} is not in {field.name}")
        return value
    if _RAT_RE.match(text):
        try:
            q = Fraction(text.strip())
        except ZeroDivisionError:
            raise ParseError(f"zero denominator in {text!r}") from None
        return q if field is None else QuadraticNumber(q, 0, field)
    raise ParseError(f"not an exact scalar: {text!r}")


def format_scalar(x: Scalar) -> str:
    if isinstance(x, QuadraticNumber):
        op = "-" if x.b < 0 else "+"
        return f"{x.a}{op}{abs(x.b)}*sqrt({x.d})"
    if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
        raise TypeError(f"not an exact scalar: {x!r}")
    return str(Fraction(x))


def parse_field(text: str | None) -> QuadraticField | None:
    """``"Q"`` -> None; ``"Q(sqrt 5)"`` or ``"Q(sqrt(5))"`` -> QuadraticField(5)."""
    if text is None:
        return None
    m = _FIELD_RE.match(text)
    if not m:
        raise ParseError(f"unknown field {text!r}; expected 'Q' or 'Q(sqrt d)'")
    if m["d"] is None:
        return None
    try:
        return QuadraticField(int(m["d"]))
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def field_name(field: QuadraticField | None) -> str:
    return "Q" if field is None else field.name
