"""Exact cost arithmetic: Fractions plus an absorbing infinity sentinel."""

from __future__ import annotations

from fractions import Fraction
from typing import Union


class _Infinity:
    """Positive infinity for cost values.

    Absorbs addition, dominates every finite value and compares equal only
    to itself.  There is exactly one instance, ``INF``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __hash__(self) -> int:
        return hash("gspkit-infinity")

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("inf - inf is undefined")
        return self

    def __rsub__(self, other):
        raise ArithmeticError("finite - inf is undefined")

    def __mul__(self, other):
        if other == 0:
            return Fraction(0)
        if other < 0:
            raise ArithmeticError("negative multiple of inf")
        return self

    __rmul__ = __mul__

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

Cost = Union[Fraction, _Infinity]


def is_inf(x) -> bool:
    return x is INF


def as_fraction(x) -> Fraction:
    """Coerce an int, Fraction or "num/den" string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not costs")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot read {x!r} as an exact rational")


def parse_cost(x) -> Cost:
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return INF
    if x is INF:
        return INF
    return as_fraction(x)


def format_cost(x: Cost):
    """JSON form: integers stay integers, other rationals become "num/den"."""
    if x is INF:
        return "inf"
    x = Fraction(x)
    if x.denominator == 1:
        return x.numerator
    return f"{x.numerator}/{x.denominator}"


def power_exponent(value, base: Fraction) -> int:
    """The unique integer e with base**e <= value < base**(e+1).

    ``value`` must be positive and ``base`` > 1.  Exact throughout.
    """
    value = Fraction(value)
    if value <= 0:
        raise ValueError("exponent of a non-positive value")
    if base <= 1:
        raise ValueError("base must exceed 1")
    e = 0
    cur = Fraction(1)
    if value >= 1:
        while cur * base <= value:
            cur *= base
            e += 1
    else:
        while cur > value:
            cur /= base
            e -= 1
    return e


def log2_floor(x) -> int:
    """floor(log2(x)) for a positive rational."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of non-positive value")
    e = x.numerator.bit_length() - x.denominator.bit_length()
    # correct the estimate by at most one step either way
    while Fraction(2) ** e > x:
        e -= 1
    while Fraction(2) ** (e + 1) <= x:
        e += 1
    return e


def next_pow2(x: int) -> int:
    """Smallest power of two >= x (and >= 1)."""
    n = 1
    while n < x:
        n *= 2
    return n
