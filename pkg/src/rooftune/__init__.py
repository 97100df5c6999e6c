"""Empirical Roofline construction with adaptive, statistically pruned autotuning."""

__version__ = "0.1.0"

from rooftune._accel import USE_NUMBA
from rooftune.budget import Budget, EvalOutcome, StopReason, evaluate, should_stop
from rooftune.stats import ConfidenceInterval, OnlineStats

__all__ = [
    "USE_NUMBA",
    "Budget",
    "ConfidenceInterval",
    "EvalOutcome",
    "OnlineStats",
    "StopReason",
    "evaluate",
    "should_stop",
]
