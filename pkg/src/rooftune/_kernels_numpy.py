"""Pure-numpy implementations of the hot kernels.

Each function mirrors one in ``_kernels_numba``. Synthetic values can differ
from the compiled path by an ulp (libm ``log``/``cos``); given the same values,
the budgeted loop makes exactly the same stop decisions.
"""

import math

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_53 = 1.0 / 9007199254740992.0

# stop reason codes shared with the numba path
NONE, MAX_TIME, MAX_COUNT, CI_CONVERGED, PRUNED = 0, 1, 2, 3, 4


def splitmix64(seed, counters):
    """SplitMix64 output for state ``seed + (counter + 1) * golden``."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + (np.asarray(counters, dtype=np.uint64) + np.uint64(1)) * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def fill_uniform(out, seed, offset):
    n = out.shape[0]
    counters = np.arange(offset, offset + n, dtype=np.uint64)
    out[:] = (splitmix64(seed, counters) >> np.uint64(11)).astype(np.float64) * INV_2_53


def welford_extend(count, mean, csum, xs):
    # sequential by nature; plain loop keeps the arithmetic identical to OnlineStats.update
    for x in xs.tolist():
        count += 1
        delta = x - mean
        mean += delta / count
        csum += (count - 1) / count * delta * delta
    return count, mean, csum


def triad(a, b, c, gamma, lo, hi):
    np.multiply(b[lo:hi], gamma, out=c[lo:hi])
    np.add(a[lo:hi], c[lo:hi], out=c[lo:hi])


def gemm_portable(a, b, c):
    """C = A @ B (beta = 0) as a sequence of rank-1 updates, no BLAS involved."""
    c[:, :] = 0.0
    tmp = np.empty_like(c)
    for p in range(a.shape[1]):
        np.multiply.outer(a[:, p], b[p, :], out=tmp)
        c += tmp


def standard_normals(key, start, n):
    idx = np.arange(start, start + n, dtype=np.uint64)
    u1 = (splitmix64(key, idx * np.uint64(2)) >> np.uint64(11)).astype(np.float64) * INV_2_53
    u2 = (splitmix64(key, idx * np.uint64(2) + np.uint64(1)) >> np.uint64(11)).astype(np.float64) * INV_2_53
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


def synthetic_values(key, start, n, loc, scale, lognormal, drift_depth, drift_len):
    z = standard_normals(key, start, n)
    if lognormal:
        v = loc * np.exp(scale * z - 0.5 * scale * scale)
    else:
        v = loc + scale * z
    if drift_len > 0:
        i = np.arange(start, start + n, dtype=np.float64)
        v = v * (1.0 - drift_depth * np.maximum(0.0, 1.0 - i / drift_len))
    return v


def evaluate_synthetic(key, loc, scale, lognormal, drift_depth, drift_len, duration,
                       max_time, max_count, ci_on, z, ci_tol, prune_on, has_best, best, min_count):
    """Budgeted inner loop over a synthetic source.

    Returns ``(count, mean, corrected_sum, elapsed, reason)``.
    """
    # observations needed before the time budget is certainly exhausted
    n_time = max_count
    if duration > 0:
        n_time = min(max_count, int(max_time / duration) + 2)
    n = max(1, n_time)
    x = synthetic_values(key, 0, n, loc, scale, lognormal, drift_depth, drift_len)
    counts = np.arange(1, n + 1, dtype=np.float64)
    elapsed = np.cumsum(np.full(n, duration))
    mean = np.cumsum(x) / counts
    shifted = x - x[0]
    csum = np.maximum(np.cumsum(shifted * shifted) - counts * (mean - x[0]) ** 2, 0.0)

    # Hard stops are exact (cumsum adds sequentially). The vectorised statistics
    # carry rounding error, so they only nominate candidate indices with a safety
    # margin; each candidate is then re-checked with the exact recurrence.
    hard = np.zeros(n, dtype=np.int64)
    hard[counts >= max_count] = MAX_COUNT
    hard[elapsed >= max_time] = MAX_TIME
    hard_idx = np.flatnonzero(hard)
    last = int(hard_idx[0]) if hard_idx.size else n - 1

    soft = np.zeros(n, dtype=bool)
    if n > 1 and (ci_on or (prune_on and has_best)):
        mean_err = 1e-12 * np.cumsum(np.abs(x)) / counts + 1e-300
        csum_err = 1e-10 * (np.cumsum(shifted * shifted) + counts * (mean - x[0]) ** 2) + 1e-300
        hw_lo = np.zeros(n)
        hw_lo[1:] = z * np.sqrt(np.maximum(csum[1:] - csum_err[1:], 0.0) / (counts[1:] - 1.0) / counts[1:])
        if ci_on:
            soft |= (counts >= 2) & (hw_lo <= ci_tol * (np.abs(mean) + mean_err) * (1 + 1e-12))
        if prune_on and has_best:
            soft |= (counts >= max(min_count, 2)) & (mean - mean_err + hw_lo < best + 1e-12 * abs(best))
    cand = np.flatnonzero(soft[:last])

    cnt, m, c, done = 0, 0.0, 0.0, 0
    for i in cand.tolist():
        cnt, m, c = welford_extend(cnt, m, c, x[done: i + 1])
        done = i + 1
        hw = z * math.sqrt(c / (cnt - 1) / cnt)
        if ci_on and hw <= ci_tol * abs(m):
            return cnt, m, c, float(elapsed[i]), CI_CONVERGED
        if prune_on and has_best and cnt >= min_count and m + hw < best:
            return cnt, m, c, float(elapsed[i]), PRUNED
    cnt, m, c = welford_extend(cnt, m, c, x[done: last + 1])
    return cnt, m, c, float(elapsed[last]), int(hard[last])
