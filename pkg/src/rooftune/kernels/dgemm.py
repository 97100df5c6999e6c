"""DGEMM workload, C <- A B with alpha = 1 and beta = 0, behind a pluggable backend."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from rooftune import _kernels
from rooftune.kernels.common import KernelError, Measurement, allocate, fill_uniform, timed_elapsed

_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class DgemmConfig:
    """A is n x k, B is k x m, C is n x m."""

    n: int
    m: int
    k: int
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("n", "m", "k"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.alpha != 1.0 or self.beta != 0.0:
            raise ValueError("benchmark DGEMM is defined for alpha=1.0, beta=0.0 only")


def dgemm_flop_count(cfg: DgemmConfig) -> float:
    """Floating-point operations of one multiply, 2*m*n*k."""
    flops = 2 * cfg.m * cfg.n * cfg.k
    if flops > _INT64_MAX:
        raise ValueError(f"flop count overflows 64-bit range for {cfg}")
    return float(flops)


def dgemm_traffic_bytes(cfg: DgemmConfig) -> float:
    """Compulsory DRAM traffic: read A and B, write C once."""
    return 8.0 * (cfg.n * cfg.k + cfg.k * cfg.m + cfg.n * cfg.m)


class BlasBackend:
    """Vendor BLAS through numpy's linked library (OpenBLAS, MKL, ...)."""

    name = "blas"

    def __init__(self):
        self.calls = 0

    def multiply(self, a, b, c):
        self.calls += 1
        np.matmul(a, b, out=c)


class PortableBackend:
    """Blocked multiply without BLAS; for correctness checks and BLAS-less hosts."""

    name = "portable"

    def __init__(self):
        self.calls = 0

    def multiply(self, a, b, c):
        self.calls += 1
        _kernels.gemm_portable(a, b, c)


BACKENDS = {"blas": BlasBackend, "portable": PortableBackend}


def get_backend(name="blas"):
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown DGEMM backend {name!r}; choose from {sorted(BACKENDS)}") from None


@dataclass
class PreparedDgemm:
    cfg: DgemmConfig
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    backend: object
    flops: float

    def observations(self):
        while True:
            yield run_dgemm_once(self)


def prepare_dgemm(cfg: DgemmConfig, seed: int = 0, backend=None) -> PreparedDgemm:
    """Allocate and fill the operands, then run one untimed warm-up multiply."""
    backend = get_backend() if backend is None else backend
    if isinstance(backend, str):
        backend = get_backend(backend)
    a = fill_uniform(allocate((cfg.n, cfg.k), "A").reshape(-1), seed, 0).reshape(cfg.n, cfg.k)
    b = fill_uniform(allocate((cfg.k, cfg.m), "B").reshape(-1), seed, cfg.n * cfg.k).reshape(cfg.k, cfg.m)
    c = allocate((cfg.n, cfg.m), "C")
    c[:] = 0.0
    prepared = PreparedDgemm(cfg, a, b, c, backend, dgemm_flop_count(cfg))
    try:
        backend.multiply(a, b, c)
    except Exception as exc:
        raise KernelError(f"{backend.name} DGEMM warm-up failed: {exc}") from exc
    return prepared


def run_dgemm_once(prepared: PreparedDgemm) -> Measurement:
    """One timed multiply; value is GFLOP/s."""
    t0 = time.perf_counter_ns()
    try:
        prepared.backend.multiply(prepared.a, prepared.b, prepared.c)
    except Exception as exc:
        raise KernelError(f"{prepared.backend.name} DGEMM failed: {exc}") from exc
    t1 = time.perf_counter_ns()
    elapsed, warnings = timed_elapsed(t0, t1)
    gflops = prepared.flops / elapsed * 1e-9
    return Measurement(gflops, elapsed, gflops=gflops, warnings=warnings)
