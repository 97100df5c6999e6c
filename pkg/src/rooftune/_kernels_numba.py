"""Numba implementations of the hot kernels (see ``_kernels_numpy`` for the reference path)."""

import math

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
ONE = np.uint64(1)
TWO = np.uint64(2)
INV_2_53 = 1.0 / 9007199254740992.0

NONE, MAX_TIME, MAX_COUNT, CI_CONVERGED, PRUNED = 0, 1, 2, 3, 4


@njit(cache=True, inline="always")
def _mix(seed, counter):
    z = seed + (counter + ONE) * GOLDEN
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(cache=True)
def splitmix64(seed, counters):
    s = np.uint64(seed)
    out = np.empty(counters.shape[0], dtype=np.uint64)
    for i in range(counters.shape[0]):
        out[i] = _mix(s, np.uint64(counters[i]))
    return out


@njit(cache=True, nogil=True)
def fill_uniform(out, seed, offset):
    s = np.uint64(seed)
    base = np.uint64(offset)
    for i in range(out.shape[0]):
        out[i] = float(_mix(s, base + np.uint64(i)) >> S11) * INV_2_53


@njit(cache=True)
def welford_extend(count, mean, csum, xs):
    for i in range(xs.shape[0]):
        count += 1
        delta = xs[i] - mean
        mean += delta / count
        csum += (count - 1) / count * delta * delta
    return count, mean, csum


@njit(cache=True, nogil=True)
def triad(a, b, c, gamma, lo, hi):
    for i in range(lo, hi):
        c[i] = a[i] + gamma * b[i]


@njit(cache=True, nogil=True)
def gemm_portable(a, b, c):
    n, k = a.shape
    m = b.shape[1]
    blk = 64
    c[:, :] = 0.0
    for pp in range(0, k, blk):
        pe = min(pp + blk, k)
        for i in range(n):
            for p in range(pp, pe):
                aip = a[i, p]
                for j in range(m):
                    c[i, j] += aip * b[p, j]


@njit(cache=True, inline="always")
def _normal_at(key, i):
    ii = np.uint64(i)
    u1 = float(_mix(key, ii * TWO) >> S11) * INV_2_53
    u2 = float(_mix(key, ii * TWO + ONE) >> S11) * INV_2_53
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, inline="always")
def _value_at(key, i, loc, scale, lognormal, drift_depth, drift_len):
    z = _normal_at(key, i)
    if lognormal:
        v = loc * math.exp(scale * z - 0.5 * scale * scale)
    else:
        v = loc + scale * z
    if drift_len > 0:
        v = v * (1.0 - drift_depth * max(0.0, 1.0 - i / drift_len))
    return v


@njit(cache=True)
def standard_normals(key, start, n):
    k = np.uint64(key)
    out = np.empty(n)
    for i in range(n):
        out[i] = _normal_at(k, start + i)
    return out


@njit(cache=True)
def synthetic_values(key, start, n, loc, scale, lognormal, drift_depth, drift_len):
    k = np.uint64(key)
    out = np.empty(n)
    for i in range(n):
        out[i] = _value_at(k, start + i, loc, scale, lognormal, drift_depth, drift_len)
    return out


@njit(cache=True)
def evaluate_synthetic(key, loc, scale, lognormal, drift_depth, drift_len, duration,
                       max_time, max_count, ci_on, z, ci_tol, prune_on, has_best, best, min_count):
    k = np.uint64(key)
    count = 0
    mean = 0.0
    csum = 0.0
    elapsed = 0.0
    i = 0
    while True:
        x = _value_at(k, i, loc, scale, lognormal, drift_depth, drift_len)
        i += 1
        elapsed += duration
        count += 1
        delta = x - mean
        mean += delta / count
        csum += (count - 1) / count * delta * delta

        if elapsed >= max_time:
            return count, mean, csum, elapsed, MAX_TIME
        if count >= max_count:
            return count, mean, csum, elapsed, MAX_COUNT
        if count >= 2 and (ci_on or (prune_on and has_best)):
            hw = z * math.sqrt(csum / (count - 1) / count)
            if ci_on and hw <= ci_tol * abs(mean):
                return count, mean, csum, elapsed, CI_CONVERGED
            if prune_on and has_best and count >= min_count and mean + hw < best:
                return count, mean, csum, elapsed, PRUNED
