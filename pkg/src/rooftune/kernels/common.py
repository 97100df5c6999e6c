import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rooftune import _kernels

TIMER_RESOLUTION = time.get_clock_info("perf_counter").resolution


class KernelError(RuntimeError):
    pass


class ResourceError(MemoryError):
    pass


@dataclass
class Measurement:
    """One timed observation; ``value`` is the metric the tuner maximises."""

    value: float
    elapsed: float
    gflops: Optional[float] = None
    warnings: list = field(default_factory=list)


def timed(fn, *args):
    t0 = time.perf_counter_ns()
    fn(*args)
    t1 = time.perf_counter_ns()
    return timed_elapsed(t0, t1)


def timed_elapsed(t0_ns, t1_ns):
    """Convert a nanosecond interval to seconds, clamping to the timer resolution.

    Returns ``(seconds, warnings)``.
    """
    elapsed = (t1_ns - t0_ns) * 1e-9
    if elapsed < TIMER_RESOLUTION or elapsed <= 0.0:
        return max(TIMER_RESOLUTION, 1e-9), ["measurement-unreliable: elapsed below timer resolution"]
    return elapsed, []


def fill_uniform(out, seed, offset=0):
    """Fill ``out`` with SplitMix64 uniforms in [0, 1).

    Element ``i`` takes the generator output for counter ``offset + i``, so any
    slice can be filled independently (and by the thread that owns it).
    """
    _kernels.fill_uniform(out, np.uint64(seed), offset)
    return out


def allocate(shape, what):
    nbytes = int(np.prod(shape)) * 8
    try:
        return np.empty(shape, dtype=np.float64)
    except (MemoryError, ValueError) as exc:
        raise ResourceError(f"cannot allocate {nbytes} bytes for {what}") from exc
