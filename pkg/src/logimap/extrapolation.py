"""Least-squares tail fits used to extrapolate limits with known correction shapes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = ["LogLinearFit", "InversePowerFit", "fit_log_linear", "fit_inverse_power"]


@dataclass(frozen=True)
class LogLinearFit:
    """``y ~ slope*x + log_coef*ln(x) + intercept``."""

    slope: float
    log_coef: float
    intercept: float
    max_residual: float

    @property
    def limit(self) -> float:
        """The limit of x/y, i.e. 1/slope."""
        return 1.0 / self.slope


@dataclass(frozen=True)
class InversePowerFit:
    """``y ~ limit + coef/x``."""

    limit: float
    coef: float
    max_residual: float


def _lstsq(columns: list[np.ndarray], y: np.ndarray) -> tuple[np.ndarray, float]:
    design = np.column_stack(columns)
    scale = np.max(np.abs(design), axis=0)
    scale[scale == 0] = 1.0
    coef, *_ = np.linalg.lstsq(design / scale, y, rcond=None)
    coef = coef / scale
    return coef, float(np.max(np.abs(design @ coef - y)))


def fit_log_linear(x: Sequence[float], y: Sequence[float]) -> LogLinearFit:
    """Fit ``y ~ a x + c ln x + d`` over the given tail points (needs >= 3)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 3 or x.size != y.size:
        raise DomainError("a log-linear fit needs at least 3 matching points")
    if np.any(x <= 0):
        raise DomainError("abscissae must be positive")
    (a, c, d), resid = _lstsq([x, np.log(x), np.ones_like(x)], y)
    return LogLinearFit(float(a), float(c), float(d), resid)


def fit_inverse_power(x: Sequence[float], y: Sequence[float]) -> InversePowerFit:
    """Fit ``y ~ L + C/x`` (needs >= 2 points)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or x.size != y.size:
        raise DomainError("an inverse-power fit needs at least 2 matching points")
    (limit, coef), resid = _lstsq([np.ones_like(x), 1.0 / x], y)
    return InversePowerFit(float(limit), float(coef), resid)
