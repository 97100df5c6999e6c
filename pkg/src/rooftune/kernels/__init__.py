"""Measurable workloads: DGEMM, TRIAD and a seeded synthetic kernel."""

from rooftune.kernels.common import KernelError, Measurement, fill_uniform
from rooftune.kernels.affinity import AffinityPolicy
from rooftune.kernels.dgemm import (
    BACKENDS,
    DgemmConfig,
    PreparedDgemm,
    dgemm_flop_count,
    get_backend,
    prepare_dgemm,
    run_dgemm_once,
)
from rooftune.kernels.synthetic import SyntheticConfig, SyntheticSource, sample_synthetic
from rooftune.kernels.triad import PreparedTriad, TriadConfig, prepare_triad, run_triad_once

__all__ = [
    "AffinityPolicy",
    "BACKENDS",
    "DgemmConfig",
    "KernelError",
    "Measurement",
    "PreparedDgemm",
    "PreparedTriad",
    "SyntheticConfig",
    "SyntheticSource",
    "TriadConfig",
    "dgemm_flop_count",
    "fill_uniform",
    "get_backend",
    "prepare_dgemm",
    "prepare_triad",
    "run_dgemm_once",
    "run_triad_once",
    "sample_synthetic",
]
