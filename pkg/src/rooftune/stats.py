"""Streaming mean/variance (Welford) and normal-theory confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rooftune import _kernels


class UndefinedVarianceError(ValueError):
    """Raised when a variance-based quantity is requested with fewer than two samples."""


# Two-sided normal quantiles z_{(1+level)/2}.
_Z_TABLE = {
    0.90: 1.6448536269514722,
    0.95: 1.959963984540054,
    0.99: 2.5758293035489004,
}

# Acklam's rational approximation coefficients for the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010139717e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _inverse_normal_cdf(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # One Halley step takes the ~1e-9 raw approximation to near machine precision.
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def normal_quantile(level: float) -> float:
    """Two-sided critical value for a confidence ``level`` in (0, 1)."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level!r}")
    for known, z in _Z_TABLE.items():
        if abs(level - known) < 1e-15:
            return z
    return _inverse_normal_cdf(0.5 + level / 2.0)


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    half_width: float
    level: float

    @property
    def lower(self) -> float:
        return self.mean - self.half_width

    @property
    def upper(self) -> float:
        return self.mean + self.half_width


@dataclass
class OnlineStats:
    """Welford accumulator: observation count, running mean and corrected sum of squares.

    Values are metrics (GFLOP/s, GB/s), never raw times.
    """

    count: int = 0
    mean: float = 0.0
    corrected_sum: float = 0.0

    def update(self, x: float) -> "OnlineStats":
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"observation must be finite, got {x!r}")
        n = self.count + 1
        delta = x - self.mean
        # m_n = m_{n-1} + (x - m_{n-1})/n and C_n = C_{n-1} + (n-1)/n (x - m_{n-1})^2
        self.mean += delta / n
        self.corrected_sum += (n - 1) / n * delta * delta
        self.count = n
        return self

    def extend(self, xs) -> "OnlineStats":
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        if xs.size == 0:
            return self
        if not np.all(np.isfinite(xs)):
            raise ValueError("observations must be finite")
        self.count, self.mean, self.corrected_sum = _kernels.welford_extend(
            self.count, self.mean, self.corrected_sum, xs
        )
        return self

    def copy(self) -> "OnlineStats":
        return OnlineStats(self.count, self.mean, self.corrected_sum)

    def sample_variance(self) -> float:
        if self.count < 2:
            raise UndefinedVarianceError(f"sample variance needs at least 2 observations, have {self.count}")
        return self.corrected_sum / (self.count - 1)

    def std(self) -> float:
        return math.sqrt(self.sample_variance())

    def confidence_interval(self, level: float = 0.99) -> ConfidenceInterval:
        z = normal_quantile(level)
        return ConfidenceInterval(self.mean, z * math.sqrt(self.sample_variance() / self.count), level)

    def coefficient_of_variation(self) -> float:
        sd = math.sqrt(self.sample_variance())
        if self.mean == 0.0:
            raise ZeroDivisionError("coefficient of variation is undefined for zero mean")
        return sd / abs(self.mean)

    @classmethod
    def from_values(cls, xs) -> "OnlineStats":
        return cls().extend(xs)


def update(state: OnlineStats, x: float) -> OnlineStats:
    """Functional form of :meth:`OnlineStats.update`; ``state`` is left untouched."""
    return state.copy().update(x)


def sample_variance(state: OnlineStats) -> float:
    return state.sample_variance()


def confidence_interval(state: OnlineStats, level: float = 0.99) -> ConfidenceInterval:
    return state.confidence_interval(level)


def coefficient_of_variation(state: OnlineStats) -> float:
    return state.coefficient_of_variation()
