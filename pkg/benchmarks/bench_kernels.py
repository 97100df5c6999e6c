"""Time the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``; needs numba installed.
Each row is the best of ``--repeat`` timings after one untimed call
(which also triggers JIT compilation).
"""

import argparse
import time

import numpy as np

from rooftune import _kernels_numpy as npk

try:
    from rooftune import _kernels_numba as nbk
except ImportError:
    nbk = None


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size):
    rng = np.random.default_rng(0)
    a, b, c = rng.random(size), rng.random(size), np.empty(size)
    ga, gb, gc = rng.random((192, 192)), rng.random((192, 192)), np.empty((192, 192))
    xs = rng.normal(100.0, 1.0, size)
    eval_args = (100.0, 1.0, False, 0.0, 0.0, 0.01, 10.0, 200, True, 2.5758293035489004, 0.01,
                 True, True, 100.5, 2)
    keys = np.arange(2000, dtype=np.uint64)

    def sweep(mod):
        # the inner loop of a full synthetic sweep: many short budgeted evaluations
        for k in keys:
            mod.evaluate_synthetic(k, *eval_args)

    return {
        "fill_uniform": lambda mod: mod.fill_uniform(c, np.uint64(1), 0),
        "welford_extend": lambda mod: mod.welford_extend(0, 0.0, 0.0, xs),
        "triad": lambda mod: mod.triad(a, b, c, 3.0, 0, size),
        "gemm_portable 192^3": lambda mod: mod.gemm_portable(ga, gb, gc),
        "synthetic_values": lambda mod: mod.synthetic_values(np.uint64(5), 0, size, 100.0, 1.0, False, 0.0, 0.0),
        "evaluate_synthetic x2000": sweep,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if nbk is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<26}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, run in cases(args.size).items():
        t_np = best_time(lambda: run(npk), args.repeat)
        t_nb = best_time(lambda: run(nbk), args.repeat)
        print(f"{name:<26}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
