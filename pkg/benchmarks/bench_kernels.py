"""Benchmark the numba kernels against the pure-numpy fallback.

Run directly: `python3 benchmarks/bench_kernels.py`. The driver re-execs
itself once per path with XFERBENCH_NO_NUMBA toggled, since the path is
chosen at import time.
"""

import os
import subprocess
import sys
import time

import numpy as np


def time_fn(fn, *args, repeats=5):
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])  # warm-up / JIT
    best = float("inf")
    for _ in range(repeats):
        call_args = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t0 = time.perf_counter()
        fn(*call_args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmarks():
    from xferbench import kernels

    label = "numba" if kernels.USE_NUMBA else "numpy"
    rng = np.random.default_rng(0)
    n, d, c, epochs = 5000, 64, 10, 2
    x = rng.standard_normal((n, d)).astype(np.float32)
    y = rng.integers(0, c, size=n).astype(np.int64)
    w = np.zeros((c, d), dtype=np.float32)
    b = np.zeros(c, dtype=np.float32)
    a = np.eye(d, dtype=np.float32)
    order = np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)

    t = time_fn(kernels.sgd_head_epochs, x, y, w, b, order, 64, 0.01)
    print(f"{label:6s} sgd_head_epochs    N={n} D={d} C={c} E={epochs}: {t*1e3:8.2f} ms")
    t = time_fn(kernels.sgd_adapter_epochs, x, y, a, w, b, order, 64, 0.01)
    print(f"{label:6s} sgd_adapter_epochs N={n} D={d} C={c} E={epochs}: {t*1e3:8.2f} ms")

    m = 2000
    g = rng.standard_normal(m)
    s = rng.standard_normal(m)
    wts = 1.0 / (1.0 + np.arange(m, dtype=float))
    t = time_fn(kernels.weighted_pair_sums, g, s, wts)
    print(f"{label:6s} weighted_pair_sums M={m}:              {t*1e3:8.2f} ms")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "--worker":
        run_benchmarks()
    else:
        for flag in ("0", "1"):
            env = dict(os.environ, XFERBENCH_NO_NUMBA=flag)
            subprocess.run([sys.executable, __file__, "--worker"], env=env, check=True)
