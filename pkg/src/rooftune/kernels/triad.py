"""Threaded TRIAD, C[i] = A[i] + gamma * B[i], over a static partition of the vectors."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from rooftune import _kernels
from rooftune.kernels.affinity import AffinityPolicy, pin_current_thread
from rooftune.kernels.common import KernelError, Measurement, allocate, fill_uniform, timed_elapsed

BYTES_PER_ELEMENT = 24  # load A[i], B[i], store C[i]
FLOPS_PER_ELEMENT = 2
INTENSITY = FLOPS_PER_ELEMENT / BYTES_PER_ELEMENT


@dataclass(frozen=True)
class TriadConfig:
    length: int
    gamma: float = 3.0

    def __post_init__(self):
        if int(self.length) != self.length or self.length < 1:
            raise ValueError(f"length must be a positive integer, got {self.length!r}")

    @property
    def working_set_bytes(self) -> int:
        return BYTES_PER_ELEMENT * self.length


def partition(n, threads):
    """Block boundaries [lo, hi) for each thread; blocks differ in size by at most one."""
    return [(t * n // threads, (t + 1) * n // threads) for t in range(threads)]


@dataclass
class PreparedTriad:
    cfg: TriadConfig
    affinity: AffinityPolicy
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cpus: list
    warnings: list = field(default_factory=list)

    @property
    def blocks(self):
        return partition(self.cfg.length, self.affinity.thread_count)

    def observations(self):
        while True:
            yield run_triad_once(self)


def _run_threads(prepared, body):
    """Spawn one pinned worker per block, release them together, return (t0, t1, pinned_ok)."""
    threads = prepared.affinity.thread_count
    gate = threading.Barrier(threads + 1)
    pinned = [True] * threads
    errors = []

    def worker(t, lo, hi):
        pinned[t] = pin_current_thread(prepared.cpus[t])
        try:
            gate.wait()
            body(lo, hi)
        except threading.BrokenBarrierError:
            return
        except Exception as exc:  # noqa: BLE001 - reported to the caller below
            errors.append(exc)

    workers = [threading.Thread(target=worker, args=(t, lo, hi), daemon=True)
               for t, (lo, hi) in enumerate(prepared.blocks)]
    for w in workers:
        w.start()
    gate.wait()
    t0 = time.perf_counter_ns()
    for w in workers:
        w.join()
    t1 = time.perf_counter_ns()
    if errors:
        raise KernelError(f"TRIAD worker failed: {errors[0]}") from errors[0]
    return t0, t1, all(pinned)


def prepare_triad(cfg: TriadConfig, affinity: AffinityPolicy = AffinityPolicy(), seed: int = 0) -> PreparedTriad:
    """Allocate the vectors and initialise each block from the thread that will later use it."""
    n = cfg.length
    a = allocate((n,), "A")
    b = allocate((n,), "B")
    c = allocate((n,), "C")
    prepared = PreparedTriad(cfg, affinity, a, b, c, affinity.cpu_plan())

    def touch(lo, hi):
        fill_uniform(a[lo:hi], seed, lo)
        fill_uniform(b[lo:hi], seed, n + lo)
        c[lo:hi] = 0.0

    _, _, ok = _run_threads(prepared, touch)
    if not ok:
        prepared.warnings.append("unpinned: thread affinity unavailable for the requested CPUs")
    return prepared


def run_triad_once(prepared: PreparedTriad) -> Measurement:
    """One timed TRIAD sweep; value is GB/s, ``gflops`` is value / 12."""
    a, b, c, gamma = prepared.a, prepared.b, prepared.c, float(prepared.cfg.gamma)
    t0, t1, ok = _run_threads(prepared, lambda lo, hi: _kernels.triad(a, b, c, gamma, lo, hi))
    elapsed, warnings = timed_elapsed(t0, t1)
    if not ok:
        warnings.append("unpinned: thread affinity unavailable for the requested CPUs")
    gbs = BYTES_PER_ELEMENT * prepared.cfg.length / elapsed * 1e-9
    return Measurement(gbs, elapsed, gflops=gbs / 12.0, warnings=warnings)
