"""Extended-range reals: a double mantissa times an unbounded power of two."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

__all__ = ["ExtendedReal"]

_LN2 = math.log(2.0)


@total_ordering
@dataclass(frozen=True)
class ExtendedReal:
    """``mantissa * 2**exponent`` with ``0.5 <= |mantissa| < 1`` (or a zero/inf mantissa).

    Construct with :meth:`of`, which normalizes. Multiplication by powers of
    two is exact at any exponent; sums round once to 53 bits.
    """

    mantissa: float
    exponent: int

    @classmethod
    def of(cls, x: float, scale: int = 0) -> "ExtendedReal":
        """The value ``x * 2**scale``."""
        x = float(x)
        if x == 0.0 or not math.isfinite(x):
            return cls(x, 0)
        m, e = math.frexp(x)
        return cls(m, e + int(scale))

    def _coerce(self, other) -> "ExtendedReal":
        if isinstance(other, ExtendedReal):
            return other
        if isinstance(other, (int, float)):
            return ExtendedReal.of(other)
        return NotImplemented

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.mantissa)

    def ldexp(self, k: int) -> "ExtendedReal":
        """Exact multiplication by ``2**k``."""
        if self.mantissa == 0.0 or not self.is_finite:
            return self
        return ExtendedReal(self.mantissa, self.exponent + int(k))

    def __neg__(self) -> "ExtendedReal":
        return ExtendedReal(-self.mantissa, self.exponent)

    def __abs__(self) -> "ExtendedReal":
        return ExtendedReal(abs(self.mantissa), self.exponent)

    def __add__(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not (self.is_finite and other.is_finite):
            return ExtendedReal.of(float(self) + float(other))
        if self.mantissa == 0.0:
            return other
        if other.mantissa == 0.0:
            return self
        hi, lo = (self, other) if self.exponent >= other.exponent else (other, self)
        shift = lo.exponent - hi.exponent
        aligned = math.ldexp(lo.mantissa, shift) if shift > -1100 else 0.0
        return ExtendedReal.of(hi.mantissa + aligned, hi.exponent)

    __radd__ = __add__

    def __sub__(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "ExtendedReal":
        return (-self) + other

    def __mul__(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ExtendedReal.of(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ExtendedReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ExtendedReal.of(self.mantissa / other.mantissa, self.exponent - other.exponent)

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return (self - other).mantissa < 0.0

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.mantissa == other.mantissa and (
            self.exponent == other.exponent or self.mantissa == 0.0 or not self.is_finite
        )

    def __hash__(self) -> int:
        return hash((self.mantissa, self.exponent))

    def __float__(self) -> float:
        try:
            return math.ldexp(self.mantissa, self.exponent)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    def log(self) -> float:
        """Natural log of a positive value; finite for any exponent."""
        if not self.mantissa > 0.0:
            raise ValueError("log of a nonpositive extended real")
        return math.log(self.mantissa) + self.exponent * _LN2

    def __repr__(self) -> str:
        return f"ExtendedReal({self.mantissa!r}, {self.exponent})"
