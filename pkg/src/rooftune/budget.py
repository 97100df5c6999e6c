"""Stop conditions and the budgeted inner iteration loop."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from rooftune.stats import OnlineStats, normal_quantile


class StopReason(str, enum.Enum):
    MAX_TIME = "MaxTime"
    MAX_COUNT = "MaxCount"
    CI_CONVERGED = "CiConverged"
    PRUNED_BY_BEST = "PrunedByBest"
    EXTERNALLY_ABORTED = "ExternallyAborted"


# numeric codes used by the compiled kernels
REASON_CODES = {
    1: StopReason.MAX_TIME,
    2: StopReason.MAX_COUNT,
    3: StopReason.CI_CONVERGED,
    4: StopReason.PRUNED_BY_BEST,
}


@dataclass(frozen=True)
class Budget:
    """Thresholds for the four stop conditions.

    ``min_count`` gates pruning only; the confidence stop needs two samples
    regardless.
    """

    max_time: float = 10.0
    max_count: int = 200
    ci_level: float = 0.99
    ci_rel_tol: float = 0.01
    min_count: int = 2
    enable_ci_stop: bool = True
    enable_prune_stop: bool = True

    def __post_init__(self):
        if not self.max_time > 0:
            raise ValueError(f"max_time must be positive, got {self.max_time!r}")
        if int(self.max_count) != self.max_count or self.max_count < 1:
            raise ValueError(f"max_count must be a positive integer, got {self.max_count!r}")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"ci_level must lie in (0, 1), got {self.ci_level!r}")
        if not self.ci_rel_tol > 0:
            raise ValueError(f"ci_rel_tol must be positive, got {self.ci_rel_tol!r}")
        if int(self.min_count) != self.min_count or self.min_count < 2:
            raise ValueError(f"min_count must be an integer >= 2, got {self.min_count!r}")

    @functools.cached_property
    def z(self) -> float:
        return normal_quantile(self.ci_level)


@dataclass
class EvalOutcome:
    stats: OnlineStats
    stop_reason: StopReason
    elapsed: float
    error: Optional[str] = None
    warnings: list = field(default_factory=list)

    @property
    def observations_used(self) -> int:
        return self.stats.count


def _half_width(stats: OnlineStats, z: float) -> float:
    return z * math.sqrt(stats.corrected_sum / (stats.count - 1) / stats.count)


def should_stop(stats: OnlineStats, elapsed: float, budget: Budget,
                best: Optional[float] = None) -> Optional[StopReason]:
    """Return the first stop condition that fires, or None.

    Precedence is fixed: time, count, confidence, pruning against ``best``.
    """
    if elapsed >= budget.max_time:
        return StopReason.MAX_TIME
    if stats.count >= budget.max_count:
        return StopReason.MAX_COUNT
    want_prune = budget.enable_prune_stop and best is not None
    if stats.count >= 2 and (budget.enable_ci_stop or want_prune):
        hw = _half_width(stats, budget.z)
        if budget.enable_ci_stop and hw <= budget.ci_rel_tol * abs(stats.mean):
            return StopReason.CI_CONVERGED
        if want_prune and stats.count >= budget.min_count and stats.mean + hw < best:
            return StopReason.PRUNED_BY_BEST
    return None


def _split(obs):
    if isinstance(obs, tuple):
        return float(obs[0]), float(obs[1])
    return float(obs.value), float(obs.elapsed)


def evaluate(source: Iterable, budget: Budget, best: Optional[float] = None) -> EvalOutcome:
    """Draw observations from ``source`` until a stop condition fires.

    ``source`` yields ``(value, elapsed)`` pairs or objects with ``value`` and
    ``elapsed`` attributes. Elapsed time is the sum of the observations' own
    durations. Any failure of the source ends the evaluation as
    ``ExternallyAborted`` with the statistics gathered so far.
    """
    stats = OnlineStats()
    elapsed = 0.0
    warnings: list = []
    it = iter(source)
    while True:
        try:
            obs = next(it)
            value, duration = _split(obs)
            stats_next = stats.copy().update(value)
        except StopIteration:
            return EvalOutcome(stats, StopReason.EXTERNALLY_ABORTED, elapsed,
                               error="observation source exhausted", warnings=warnings)
        except Exception as exc:  # noqa: BLE001 - any source failure aborts this evaluation
            return EvalOutcome(stats, StopReason.EXTERNALLY_ABORTED, elapsed,
                               error=f"{type(exc).__name__}: {exc}", warnings=warnings)
        stats = stats_next
        elapsed += duration
        for w in getattr(obs, "warnings", ()) or ():
            if w not in warnings:
                warnings.append(w)
        reason = should_stop(stats, elapsed, budget, best)
        if reason is not None:
            return EvalOutcome(stats, reason, elapsed, warnings=warnings)
