"""Precision policy: working number type, summation strategy, rounding slack.

Double modes work on ``numpy.float64``. BigFloat mode works on ``gmpy2.mpfr``
inside a thread-local gmpy2 context, so concurrent callers with different
precisions do not interfere.
"""

from __future__ import annotations

import contextlib
import enum
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import gmpy2
import numpy as np

from . import _kernels
from .errors import DomainError

__all__ = [
    "Mode",
    "Summation",
    "PrecisionPolicy",
    "DEFAULT_POLICY",
    "policy_from_env",
]

#: Environment variable that overrides the default policy in the CLI.
PRECISION_ENV = "LOGIMAP_PRECISION"

#: BigFloat precision at and above which the verifiers use zero slack.
EXACT_SLACK_BITS = 256


class Mode(enum.Enum):
    DOUBLE = "double"
    DOUBLE_COMPENSATED = "compensated"
    BIGFLOAT = "bigfloat"


class Summation(enum.Enum):
    NAIVE = "naive"
    COMPENSATED = "compensated"


@dataclass(frozen=True)
class PrecisionPolicy:
    """How numbers are represented and how series are accumulated.

    ``summation=None`` resolves to compensated accumulation in both double
    modes and to naive accumulation in BigFloat mode.
    """

    mode: Mode = Mode.DOUBLE
    bits: int | None = None
    summation: Summation | None = None

    def __post_init__(self):
        if self.mode is Mode.BIGFLOAT:
            if self.bits is None or int(self.bits) != self.bits or self.bits < 64:
                raise DomainError(f"BigFloat precision needs bits >= 64, got {self.bits!r}")
        elif self.bits is not None:
            raise DomainError("bits is only meaningful in BigFloat mode")
        if self.mode is Mode.DOUBLE_COMPENSATED and self.summation is Summation.NAIVE:
            raise DomainError("compensated mode cannot use naive summation")
        if self.summation is None:
            resolved = Summation.NAIVE if self.mode is Mode.BIGFLOAT else Summation.COMPENSATED
            object.__setattr__(self, "summation", resolved)

    @classmethod
    def double(cls, summation: Summation = Summation.COMPENSATED) -> "PrecisionPolicy":
        return cls(Mode.DOUBLE, None, summation)

    @classmethod
    def compensated(cls) -> "PrecisionPolicy":
        return cls(Mode.DOUBLE_COMPENSATED)

    @classmethod
    def bigfloat(cls, bits: int, summation: Summation | None = None) -> "PrecisionPolicy":
        return cls(Mode.BIGFLOAT, bits, summation)

    @classmethod
    def parse(cls, text: str) -> "PrecisionPolicy":
        """Parse ``double``, ``double-naive``, ``compensated`` or ``bigfloat:BITS``."""
        text = text.strip().lower()
        if text == "double":
            return cls.double()
        if text == "double-naive":
            return cls.double(Summation.NAIVE)
        if text == "compensated":
            return cls.compensated()
        if text.startswith("bigfloat"):
            _, _, bits = text.partition(":")
            try:
                return cls.bigfloat(int(bits))
            except ValueError:
                raise DomainError(f"bad BigFloat precision string {text!r}") from None
        raise DomainError(f"unknown precision string {text!r}")

    def label(self) -> str:
        if self.mode is Mode.BIGFLOAT:
            return f"bigfloat:{self.bits}"
        if self.mode is Mode.DOUBLE and self.summation is Summation.NAIVE:
            return "double-naive"
        return self.mode.value

    @property
    def is_bigfloat(self) -> bool:
        return self.mode is Mode.BIGFLOAT

    @property
    def unit_roundoff(self) -> float:
        bits = self.bits if self.is_bigfloat else 53
        return math.ldexp(1.0, -bits)

    def context(self):
        """Context manager that sets the working precision for BigFloat arithmetic."""
        if self.is_bigfloat:
            return gmpy2.context(precision=self.bits)
        return contextlib.nullcontext()

    def number(self, x):
        """Convert ``x`` to the working number type (call inside :meth:`context`)."""
        if self.is_bigfloat:
            return gmpy2.mpfr(x)
        return float(x)

    def cumsum(self, terms: Sequence) -> np.ndarray:
        """Prefix sums ``out[n] = terms[0] + ... + terms[n-1]``, ``out[0] = 0``."""
        if self.is_bigfloat:
            with self.context():
                return _object_cumsum(terms, self.summation is Summation.COMPENSATED)
        terms = np.ascontiguousarray(terms, dtype=np.float64)
        if self.summation is Summation.COMPENSATED:
            return _kernels.neumaier_cumsum(terms)
        out = np.empty(terms.size + 1)
        out[0] = 0.0
        np.cumsum(terms, out=out[1:])
        return out

    def sum(self, terms: Iterable):
        """Sum of ``terms``; correctly rounded in compensated double modes."""
        if self.is_bigfloat:
            return self.cumsum(list(terms))[-1]
        if self.summation is Summation.COMPENSATED:
            return math.fsum(terms)
        return float(np.sum(np.asarray(list(terms), dtype=np.float64)))

    def slack(self, magnitude, ulps: int = 4):
        """Rounding allowance for an inequality between numbers of ``magnitude``.

        ``ulps`` units in the last place in double modes; zero in BigFloat mode
        at :data:`EXACT_SLACK_BITS` or more.
        """
        if self.is_bigfloat:
            if self.bits >= EXACT_SLACK_BITS:
                return 0 * magnitude if isinstance(magnitude, np.ndarray) else 0
            scale = gmpy2.mpfr(2) ** (1 - self.bits) * ulps
            if isinstance(magnitude, np.ndarray):
                return np.array([abs(m) * scale for m in magnitude], dtype=object)
            return abs(magnitude) * scale
        return ulps * np.spacing(np.abs(np.asarray(magnitude, dtype=np.float64)))


def _object_cumsum(terms: Sequence, compensated: bool) -> np.ndarray:
    out = np.empty(len(terms) + 1, dtype=object)
    total = gmpy2.mpfr(0)
    comp = gmpy2.mpfr(0)
    out[0] = total
    for i, term in enumerate(terms):
        if compensated:
            t = total + term
            if abs(total) >= abs(term):
                comp += (total - t) + term
            else:
                comp += (term - t) + total
            total = t
            out[i + 1] = total + comp
        else:
            total = total + term
            out[i + 1] = total
    return out


DEFAULT_POLICY = PrecisionPolicy.double()


def policy_from_env(default: PrecisionPolicy = DEFAULT_POLICY) -> PrecisionPolicy:
    """The policy named by ``$LOGIMAP_PRECISION``, falling back to ``default``."""
    text = os.environ.get(PRECISION_ENV)
    if not text:
        return default
    return PrecisionPolicy.parse(text)
