"""Kernel dispatch: numba when available and enabled, numpy otherwise."""

from rooftune._accel import USE_NUMBA

if USE_NUMBA:
    from rooftune._kernels_numba import (  # noqa: F401
        evaluate_synthetic,
        fill_uniform,
        gemm_portable,
        splitmix64,
        standard_normals,
        synthetic_values,
        triad,
        welford_extend,
    )
else:
    from rooftune._kernels_numpy import (  # noqa: F401
        evaluate_synthetic,
        fill_uniform,
        gemm_portable,
        splitmix64,
        standard_normals,
        synthetic_values,
        triad,
        welford_extend,
    )

from rooftune._kernels_numpy import CI_CONVERGED, MAX_COUNT, MAX_TIME, NONE, PRUNED  # noqa: F401,E402
