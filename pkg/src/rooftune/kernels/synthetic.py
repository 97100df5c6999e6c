"""Seeded synthetic kernel for deterministic tests of the tuner.

Observation ``i`` of a stream is a pure function of (seed, config id,
invocation, i): a counter-based SplitMix64 draw pushed through Box-Muller.
Streams can therefore be replayed, sliced, or regenerated in bulk.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rooftune import _kernels
from rooftune.budget import REASON_CODES, Budget, EvalOutcome, StopReason
from rooftune.kernels.common import Measurement
from rooftune.stats import OnlineStats

NORMAL = "normal"
LOGNORMAL = "lognormal"

_CHUNK = 64


class SyntheticConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticConfig:
    """A synthetic configuration.

    ``location``/``scale`` are mean and standard deviation for ``normal``; for
    ``lognormal`` the value is ``location * exp(scale*z - scale**2/2)`` so that
    ``location`` stays the mean. ``drift_depth`` lowers the first observation
    by that fraction and recovers linearly over ``drift_length`` iterations.
    """

    id: str
    location: float
    scale: float
    kind: str = NORMAL
    per_obs_duration: float = 0.01
    drift_depth: float = 0.0
    drift_length: int = 0

    def __post_init__(self):
        if self.kind not in (NORMAL, LOGNORMAL):
            raise SyntheticConfigError(f"distribution must be normal or lognormal, got {self.kind!r}")
        if not self.scale >= 0 or not math.isfinite(self.scale):
            raise SyntheticConfigError(f"scale must be non-negative, got {self.scale!r}")
        if self.kind == LOGNORMAL and not self.location > 0:
            raise SyntheticConfigError("lognormal location must be positive")
        if not self.per_obs_duration >= 0:
            raise SyntheticConfigError("per_obs_duration must be non-negative")
        if not 0.0 <= self.drift_depth < 1.0 or self.drift_length < 0:
            raise SyntheticConfigError("drift_depth must lie in [0, 1) and drift_length be >= 0")


def stream_key(seed: int, config_id: str, invocation: int = 0) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{config_id}:{int(invocation)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _params(cfg):
    return (float(cfg.location), float(cfg.scale), cfg.kind == LOGNORMAL,
            float(cfg.drift_depth), float(cfg.drift_length))


def synthetic_values(cfg: SyntheticConfig, seed: int, invocation: int, start: int, n: int) -> np.ndarray:
    key = np.uint64(stream_key(seed, cfg.id, invocation))
    return _kernels.synthetic_values(key, start, n, *_params(cfg))


class SyntheticSource:
    """Iterator of Measurements for one (config, seed, invocation) stream; also the rng state."""

    def __init__(self, cfg: SyntheticConfig, seed: int = 0, invocation: int = 0):
        self.cfg = cfg
        self.seed = seed
        self.invocation = invocation
        self.position = 0
        self._buf = np.empty(0)
        self._buf_start = 0

    def __iter__(self):
        return self

    def __next__(self) -> Measurement:
        return sample_synthetic(self.cfg, self)

    def _draw(self) -> float:
        off = self.position - self._buf_start
        if off >= self._buf.shape[0]:
            self._buf = synthetic_values(self.cfg, self.seed, self.invocation, self.position, _CHUNK)
            self._buf_start = self.position
            off = 0
        self.position += 1
        return float(self._buf[off])


def sample_synthetic(cfg: SyntheticConfig, state: SyntheticSource) -> Measurement:
    """Advance ``state`` by one draw."""
    if state.cfg is not cfg and state.cfg != cfg:
        raise SyntheticConfigError("generator state belongs to a different configuration")
    return Measurement(state._draw(), cfg.per_obs_duration)


def evaluate_synthetic(cfg: SyntheticConfig, seed: int, invocation: int, budget: Budget,
                       best: Optional[float] = None) -> EvalOutcome:
    """Compiled equivalent of ``budget.evaluate(SyntheticSource(...), budget, best)``."""
    key = np.uint64(stream_key(seed, cfg.id, invocation))
    count, mean, csum, elapsed, code = _kernels.evaluate_synthetic(
        key, *_params(cfg), float(cfg.per_obs_duration),
        float(budget.max_time), int(budget.max_count),
        bool(budget.enable_ci_stop), float(budget.z), float(budget.ci_rel_tol),
        bool(budget.enable_prune_stop), best is not None,
        float(best) if best is not None else 0.0, int(budget.min_count),
    )
    reason = REASON_CODES.get(int(code), StopReason.EXTERNALLY_ABORTED)
    return EvalOutcome(OnlineStats(int(count), float(mean), float(csum)), reason, float(elapsed))
