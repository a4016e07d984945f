"""Extended nonnegative rationals: exact Fractions plus a single infinity.

The one non-obvious rule is ``INF * 0 == 0``; the mean-dimension bound is
stated with that convention and every consumer here relies on it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from .util import format_ratio

RatLike = Union[int, Fraction, "ExtendedRational"]


class ExtendedRational:
    """A value in Q>=0 ∪ {∞} with exact arithmetic."""

    __slots__ = ("_value",)

    def __init__(self, value: Union[int, Fraction, None]):
        if value is None:
            self._value = None
        else:
            v = Fraction(value)
            if v < 0:
                raise ValueError("extended rationals here are nonnegative")
            self._value = v

    @classmethod
    def wrap(cls, value: RatLike) -> "ExtendedRational":
        if isinstance(value, ExtendedRational):
            return value
        return cls(value)

    @property
    def is_infinite(self) -> bool:
        return self._value is None

    @property
    def finite(self) -> Fraction:
        if self._value is None:
            raise ValueError("infinite value has no finite part")
        return self._value

    def __mul__(self, other: RatLike) -> "ExtendedRational":
        o = ExtendedRational.wrap(other)
        if self.is_infinite or o.is_infinite:
            a_zero = (not self.is_infinite) and self._value == 0
            b_zero = (not o.is_infinite) and o._value == 0
            if a_zero or b_zero:
                return ExtendedRational(0)
            return INF
        return ExtendedRational(self._value * o._value)

    __rmul__ = __mul__

    def __add__(self, other: RatLike) -> "ExtendedRational":
        o = ExtendedRational.wrap(other)
        if self.is_infinite or o.is_infinite:
            return INF
        return ExtendedRational(self._value + o._value)

    __radd__ = __add__

    def half(self) -> "ExtendedRational":
        return self * Fraction(1, 2)

    def _key(self) -> tuple[int, Fraction]:
        return (1, Fraction(0)) if self.is_infinite else (0, self._value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (ExtendedRational, int, Fraction)):
            return NotImplemented
        return self._key() == ExtendedRational.wrap(other)._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __lt__(self, other: RatLike) -> bool:
        return self._key() < ExtendedRational.wrap(other)._key()

    def __le__(self, other: RatLike) -> bool:
        return self._key() <= ExtendedRational.wrap(other)._key()

    def __gt__(self, other: RatLike) -> bool:
        return self._key() > ExtendedRational.wrap(other)._key()

    def __ge__(self, other: RatLike) -> bool:
        return self._key() >= ExtendedRational.wrap(other)._key()

    def __str__(self) -> str:
        return "inf" if self.is_infinite else format_ratio(self._value)

    def __repr__(self) -> str:
        return f"ExtendedRational({self})"


INF = ExtendedRational(None)
ZERO = ExtendedRational(0)
